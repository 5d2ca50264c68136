#include <cmath>
#include <vector>

#include "doctest.h"
#include "streamopt/analytics.hpp"
#include "streamopt/config.hpp"
#include "support/test_helpers.hpp"

using namespace streamopt;
using namespace streamopt::testing;

namespace {

struct QueueSample {
  double mean_wait = 0;
  double exp_tilt = 0;  // average of exp(t * wait)
};

// FIFO M/G/1 replay: Poisson arrivals, job service = per-video chunk
// count of shifted-exponential chunk draws.
QueueSample simulate_single_queue(const Instance& inst, double t_tilt, long jobs,
                                  long warmup, uint64_t seed) {
  OracleRng g(seed);
  std::exponential_distribution<double> unit_exp(1.0);
  const double lam_total = inst.total_arrival_rate();
  std::vector<double> weights;
  for (const VideoSpec& v : inst.videos) weights.push_back(v.arrival_rate);
  std::discrete_distribution<int> pick_video(weights.begin(), weights.end());

  const double alpha = inst.servers[0].alpha_base / inst.ladder.sizes[0];
  const double beta = inst.servers[0].beta_base * inst.ladder.sizes[0];

  double clock = 0, free_at = 0;
  double wait_sum = 0, tilt_sum = 0;
  long counted = 0;
  for (long n = 0; n < jobs; ++n) {
    clock += unit_exp(g) / lam_total;
    const VideoSpec& vid = inst.videos[pick_video(g)];
    double service = 0;
    for (int c = 0; c < vid.num_segments; ++c) service += beta + unit_exp(g) / alpha;
    const double start = std::max(clock, free_at);
    free_at = start + service;
    if (n >= warmup) {
      const double wait = start - clock;
      wait_sum += wait;
      tilt_sum += std::exp(t_tilt * wait);
      ++counted;
    }
  }
  return {wait_sum / static_cast<double>(counted),
          tilt_sum / static_cast<double>(counted)};
}

}  // namespace

TEST_CASE("chunk transform matches Monte Carlo and its log form") {
  OracleRng g(910);
  const EffectiveService svc{1.8, 0.04};
  const double t = 0.7;
  CHECK(chunk_mgf(svc, t) == doctest::Approx(std::exp(chunk_log_mgf(svc, t))).epsilon(1e-12));

  std::exponential_distribution<double> unit_exp(1.0);
  double acc = 0;
  const long n = 400000;
  for (long k = 0; k < n; ++k) {
    acc += std::exp(t * (svc.beta + unit_exp(g) / svc.alpha));
  }
  const double mc = acc / static_cast<double>(n);
  CHECK(close_rel(chunk_mgf(svc, t), mc, 0.02));

  CHECK_THROWS_AS(chunk_mgf(svc, svc.alpha), DomainError);
  CHECK_THROWS_AS(chunk_mgf(svc, svc.alpha * 1.01), DomainError);
}

TEST_CASE("file service transform matches its mixture definition and Monte Carlo") {
  OracleRng g(911);
  const Instance inst = make_test_instance(g);
  const PolicyVars pol = random_feasible_policy(inst, g);
  const double t = pol.t[0] * 0.5;

  // Pick the busiest stream so the mixture has several components.
  const StreamLoad load = stream_arrival_rates(inst, pol);
  int bj = 0, bnu = 0;
  for (int j = 0; j < inst.num_servers(); ++j)
    for (int nu = 0; nu < inst.servers[j].num_streams; ++nu)
      if (load.lambda[j][nu] > load.lambda[bj][bnu]) {
        bj = j;
        bnu = nu;
      }
  REQUIRE(load.lambda[bj][bnu] > 0);

  // Definition route: arrival-weighted mixture of chunk transforms.
  struct Comp {
    double x, alpha, beta;
    int segments;
  };
  std::vector<Comp> comps;
  for (int i = 0; i < inst.num_videos(); ++i)
    for (int l = 0; l < inst.levels(); ++l) {
      if (!inst.placed(i, l, bj)) continue;
      const double x = inst.videos[i].arrival_rate * pol.b[i][l] * pol.q[i][l][bj] *
                       pol.p[l][bj][bnu];
      if (!(x > 0)) continue;
      const EffectiveService svc =
          effective_params(inst.servers[bj], pol.w[bj][bnu], inst.ladder.sizes[l]);
      comps.push_back({x, svc.alpha, svc.beta, inst.videos[i].num_segments});
    }
  double direct = 0, total_x = 0;
  for (const Comp& c : comps) {
    direct += c.x * std::pow(chunk_mgf({c.alpha, c.beta}, t), c.segments);
    total_x += c.x;
  }
  direct /= total_x;
  const double got = file_service_mgf(inst, pol, bj, bnu, t);
  CHECK(close_rel(got, direct, 1e-10));

  // Monte Carlo route: sample a component, then its chunk times.
  std::vector<double> ws;
  for (const Comp& c : comps) ws.push_back(c.x);
  std::discrete_distribution<int> pick(ws.begin(), ws.end());
  std::exponential_distribution<double> unit_exp(1.0);
  double acc = 0;
  const long n = 200000;
  for (long k = 0; k < n; ++k) {
    const Comp& c = comps[pick(g)];
    double service = 0;
    for (int u = 0; u < c.segments; ++u) service += c.beta + unit_exp(g) / c.alpha;
    acc += std::exp(t * service);
  }
  CHECK(close_rel(got, acc / static_cast<double>(n), 0.03));
}

TEST_CASE("queue factor is the simulated waiting tilt times the service transform") {
  const Instance inst = make_single_queue_instance(0.3, 0.3);
  const PolicyVars pol = make_single_queue_policy(inst);
  const double rho = utilization(inst, pol, 0, 0);
  REQUIRE(rho == doctest::Approx(0.5).epsilon(0.02));

  // Exponent small enough that exp(2 t W) stays integrable, keeping the
  // Monte Carlo variance finite.
  double t = 0.35 * t_feasible_upper(inst, pol, 0);
  for (int k = 0; k < 6; ++k) {
    try {
      download_mgf(inst, pol, 0, 0, 0, 0, 0, 2.0 * t);
      break;
    } catch (const DomainError&) {
      t *= 0.5;
    }
  }
  const double analytic = download_mgf(inst, pol, 0, 0, 0, 0, 0, t);
  const QueueSample sim = simulate_single_queue(inst, t, 600000, 30000, 424242);
  // The queue factor pads the Pollaczek-Khinchine waiting-time term
  // with one extra file-service transform, so it sits above the pure
  // waiting tilt by exactly that factor and stays a valid upper bound.
  const double service_factor = file_service_mgf(inst, pol, 0, 0, t);
  CHECK(analytic >= sim.exp_tilt * 0.97);
  CHECK(close_rel(analytic, sim.exp_tilt * service_factor, 0.03));
}

TEST_CASE("mean waiting time matches the simulated M/G/1 queue") {
  const Instance inst = make_single_queue_instance(0.3, 0.3);
  const PolicyVars pol = make_single_queue_policy(inst);
  const double analytic = mean_waiting_time(inst, pol, 0, 0);
  const QueueSample sim = simulate_single_queue(inst, 0.0, 600000, 30000, 777);
  CHECK(close_rel(analytic, sim.mean_wait, 0.03));

  Instance heavy = inst;
  for (VideoSpec& v : heavy.videos) v.arrival_rate *= 3.0;
  heavy.finalize();
  CHECK_THROWS_AS(mean_waiting_time(heavy, make_single_queue_policy(heavy), 0, 0),
                  DomainError);
}

TEST_CASE("segment tail closed form equals the explicit per-segment sum") {
  OracleRng g(912);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Instance inst = make_test_instance(g);
    const PolicyVars pol = random_feasible_policy(inst, g);
    for (int i = 0; i < inst.num_videos() && checked < 250; ++i) {
      const double t = pol.t[i];
      const double tau = inst.streaming.segment_seconds;
      const double ds = inst.streaming.startup_delay;
      for (int l = 0; l < inst.levels(); ++l) {
        for (int j : inst.videos[i].placement[l]) {
          if (!(pol.q[i][l][j] > 0)) continue;
          for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
            if (!(pol.p[l][j][nu] > 0)) continue;
            const double closed = segment_tail_H(inst, pol, i, j, nu, l, t);
            double explicit_sum = 0;
            for (int v = 1; v <= inst.videos[i].num_segments; ++v) {
              explicit_sum += std::exp(-t * (ds + (v - 1) * tau)) *
                              download_mgf(inst, pol, i, j, nu, l, v, t);
            }
            CAPTURE(trial);
            CAPTURE(i);
            CHECK(close_rel(closed, explicit_sum, 1e-10));
            ++checked;
          }
        }
      }
    }
  }
  CHECK(checked >= 250);
}

TEST_CASE("segment tail survives a unit geometric ratio") {
  OracleRng g(913);
  Instance inst = make_test_instance(g);
  PolicyVars pol = random_feasible_policy(inst, g);
  const int i = 0, l = 0;
  const int j = inst.videos[i].placement[l][0];
  const double t = pol.t[i];
  // Choose the segment length so log M(t) == t * tau exactly: the
  // geometric ratio hits 1 and the closed form must fall back.
  const EffectiveService svc =
      effective_params(inst.servers[j], pol.w[j][0], inst.ladder.sizes[l]);
  inst.streaming.segment_seconds = chunk_log_mgf(svc, t) / t;
  inst.streaming.startup_delay = inst.streaming.segment_seconds + 1.0;
  REQUIRE(inst.streaming.segment_seconds > 0);
  inst.finalize();

  const double closed = segment_tail_H(inst, pol, i, j, 0, l, t);
  double explicit_sum = 0;
  for (int v = 1; v <= inst.videos[i].num_segments; ++v) {
    explicit_sum += std::exp(-t * (inst.streaming.startup_delay +
                                   (v - 1) * inst.streaming.segment_seconds)) *
                    download_mgf(inst, pol, i, j, 0, l, v, t);
  }
  CHECK(std::isfinite(closed));
  CHECK(close_rel(closed, explicit_sum, 1e-9));
}

TEST_CASE("stall bound aggregates the per-stream tails") {
  OracleRng g(914);
  const Instance inst = make_test_instance(g);
  const PolicyVars pol = random_feasible_policy(inst, g);
  for (int i = 0; i < inst.num_videos(); ++i) {
    for (int l = 0; l < inst.levels(); ++l) {
      double s = 0;
      for (int j : inst.videos[i].placement[l]) {
        if (!(pol.q[i][l][j] > 0)) continue;
        for (int nu = 0; nu < inst.servers[j].num_streams; ++nu) {
          if (!(pol.p[l][j][nu] > 0)) continue;
          s += pol.q[i][l][j] * pol.p[l][j][nu] *
               (1.0 + segment_tail_H(inst, pol, i, j, nu, l, pol.t[i]));
        }
      }
      CHECK(close_rel(stall_bound(inst, pol, i, l), std::log(s) / pol.t[i], 1e-12));
    }
  }
}

TEST_CASE("stall bound decays to log(k)/t as the startup delay grows") {
  OracleRng g(915);
  Instance inst = make_test_instance(g);
  PolicyVars pol = random_feasible_policy(inst, g, 0.4, 0.8);

  double prev_bound = std::numeric_limits<double>::infinity();
  double prev_h = std::numeric_limits<double>::infinity();
  const int i = 0, l = 0;
  const int j = inst.videos[i].placement[l][0];
  for (int k = 0; k < 20; ++k) {
    inst.streaming.startup_delay = 5.0 * std::pow(1000.0 / 5.0, k / 19.0);
    inst.finalize();
    const double bound = stall_bound(inst, pol, i, l);
    const double h = segment_tail_H(inst, pol, i, j, 0, l, pol.t[i]);
    CHECK(bound <= prev_bound + 1e-12);
    CHECK(h <= prev_h + 1e-12);
    prev_bound = bound;
    prev_h = h;
  }

  inst.streaming.startup_delay = 1000.0;
  inst.finalize();
  const double limit = std::log(static_cast<double>(inst.videos[i].code_k)) / pol.t[i];
  CHECK(stall_bound(inst, pol, i, l) == doctest::Approx(limit).epsilon(1e-6));
}

TEST_CASE("exponent upper boundary is tight") {
  OracleRng g(916);
  const Instance inst = make_test_instance(g);
  PolicyVars pol = random_feasible_policy(inst, g);
  for (int i = 0; i < inst.num_videos(); ++i) {
    const double up = t_feasible_upper(inst, pol, i);
    CHECK(up > 0);
    pol.t[i] = up;
    CHECK(validate_policy(inst, pol).ok);
    pol.t[i] = up * 1.01;
    CHECK(!validate_policy(inst, pol).ok);
    pol.t[i] = up * 0.5;
  }
}

TEST_CASE("average quality matches a hand-computed mixture") {
  Instance inst = make_single_queue_instance(0.002, 0.004);
  inst.ladder.sizes = {1.0, 2.0};
  for (VideoSpec& v : inst.videos) v.placement.assign(2, {0});
  inst.finalize();
  PolicyVars pol = make_uniform_policy(inst);
  pol.b[0] = {1.0, 0.0};
  pol.b[1] = {0.5, 0.5};
  // (1/3)(10/30)(1.0) + (2/3)(20/30)(1.5) = 1/9 + 2/3
  CHECK(average_quality(inst, pol) == doctest::Approx(1.0 / 9 + 2.0 / 3).epsilon(1e-12));
}

TEST_CASE("objective blends stall and quality mass consistently") {
  OracleRng g(917);
  const Instance inst = make_test_instance(g);
  const PolicyVars pol = random_feasible_policy(inst, g);
  const double theta = 1e-3;
  const BoundReport rep = bound_report(inst, pol, theta);
  const double quality_mass =
      rep.average_quality * static_cast<double>(inst.total_segments());
  CHECK(close_rel(rep.objective,
                  -theta * quality_mass + (1.0 - theta) * rep.weighted_mean_stall,
                  1e-10));
  CHECK(close_rel(rep.objective, objective_value(inst, pol, theta), 1e-12));
}

TEST_CASE("evaluation cache agrees with the direct operations") {
  OracleRng g(918);
  const Instance inst = make_test_instance(g);
  const PolicyVars pol = random_feasible_policy(inst, g);
  const Evaluation ev(inst, pol, /*with_partials=*/false);
  for (int i = 0; i < inst.num_videos(); ++i)
    for (int l = 0; l < inst.levels(); ++l)
      CHECK(close_rel(ev.bound(i, l), stall_bound(inst, pol, i, l), 1e-12));
  CHECK(close_rel(ev.average_quality(), average_quality(inst, pol), 1e-12));
}

TEST_CASE("transforms refuse exponents outside the window") {
  OracleRng g(919);
  const Instance inst = make_test_instance(g);
  PolicyVars pol = random_feasible_policy(inst, g);
  pol.t[0] = t_feasible_upper(inst, pol, 0) * 40.0;
  CHECK_THROWS_AS(stall_bound(inst, pol, 0, 0), std::runtime_error);
}
