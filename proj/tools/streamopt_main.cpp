#include <atomic>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "streamopt/baselines.hpp"
#include "streamopt/config.hpp"
#include "streamopt/io.hpp"
#include "streamopt/optimizer.hpp"
#include "streamopt/simulator.hpp"
#include "streamopt/validate.hpp"

namespace fs = std::filesystem;
using namespace streamopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitBoundViolated = 4;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(9);
  os << x;
  return os.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

PolicyVars starting_policy(const Instance& inst, const std::string& init_path) {
  if (init_path.empty()) return feasibility_repair(inst, make_uniform_policy(inst));
  return load_policy_file(init_path, inst);
}

double pick_theta(const Instance& inst, double flag_value) {
  const double theta = flag_value < 0 ? inst.solver.theta : flag_value;
  if (theta < 0 || theta > 1) throw ConfigError("theta must lie in [0, 1]");
  return theta;
}

struct RunRow {
  std::string name;
  double theta = 0;
  double objective = 0;
  double avg_quality = 0;
  double weighted_stall = 0;
  bool converged = false;
  int outer_iters = 0;
  std::string error;
};

std::string run_rows_csv(const std::vector<RunRow>& rows, bool with_theta) {
  std::ostringstream os;
  os << (with_theta ? "theta" : "name")
     << ",objective,avg_quality,weighted_stall,converged,outer_iters,error\n";
  for (const RunRow& row : rows) {
    if (with_theta) {
      os << fmt(row.theta);
    } else {
      os << row.name;
    }
    if (row.error.empty()) {
      os << ',' << fmt(row.objective) << ',' << fmt(row.avg_quality) << ','
         << fmt(row.weighted_stall) << ',' << (row.converged ? 1 : 0) << ','
         << row.outer_iters << ",\n";
    } else {
      std::string msg = row.error;
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ';';
      }
      os << ",,,,,," << msg << '\n';
    }
  }
  return os.str();
}

int run_analyze(const std::string& config, const std::string& policy_path,
                double theta_flag, const std::string& out_dir) {
  const Instance inst = load_config_file(config);
  const double theta = pick_theta(inst, theta_flag);
  PolicyVars pol;
  if (policy_path.empty()) {
    pol = feasibility_repair(inst, make_uniform_policy(inst));
  } else {
    pol = load_policy_file(policy_path, inst);
    const Feasibility feas = validate_policy(inst, pol);
    if (!feas.ok) {
      std::cerr << "policy infeasible:\n";
      for (const Violation& v : feas.violations) std::cerr << "  " << v.to_string() << '\n';
      return kExitInfeasible;
    }
  }
  const BoundReport rep = bound_report(inst, pol, theta);
  ensure_dir(out_dir);
  write_text_atomic(join_path(out_dir, "report.json"), bound_report_json(inst, rep));
  write_text_atomic(join_path(out_dir, "report.csv"), bound_report_csv(inst, rep));
  std::cout << "objective: " << fmt(rep.objective) << '\n'
            << "weighted_mean_stall: " << fmt(rep.weighted_mean_stall) << '\n'
            << "average_quality: " << fmt(rep.average_quality) << '\n';
  double worst_rho = 0;
  for (const auto& row : rep.loads.rho) {
    for (double rho : row) worst_rho = std::max(worst_rho, rho);
  }
  std::cout << "max_stream_utilization: " << fmt(worst_rho) << '\n';
  return kExitOk;
}

int run_optimize(const std::string& config, const std::string& init_path,
                 double theta_flag, bool fd_gradients, int max_iters, double epsilon,
                 const std::string& out_dir) {
  Instance inst = load_config_file(config);
  if (fd_gradients) inst.solver.fd_gradients = true;
  if (max_iters > 0) inst.solver.max_outer_iters = max_iters;
  if (epsilon > 0) inst.solver.epsilon = epsilon;
  const double theta = pick_theta(inst, theta_flag);
  const PolicyVars init = starting_policy(inst, init_path);
  const double obj0 = objective_value(inst, init, theta);

  const OptimizeResult res = alternating_optimize(inst, theta, init);
  const BoundReport rep = bound_report(inst, res.policy, theta);

  ensure_dir(out_dir);
  write_text_atomic(join_path(out_dir, "policy.json"), save_policy(res.policy));
  write_text_atomic(join_path(out_dir, "report.json"), bound_report_json(inst, rep));
  write_text_atomic(join_path(out_dir, "report.csv"), bound_report_csv(inst, rep));
  write_text_atomic(join_path(out_dir, "trace.csv"), trace_csv(res.trace));

  std::cout << "initial_objective: " << fmt(obj0) << '\n'
            << "objective: " << fmt(res.objective) << '\n'
            << "weighted_mean_stall: " << fmt(rep.weighted_mean_stall) << '\n'
            << "average_quality: " << fmt(rep.average_quality) << '\n'
            << "outer_iters: " << res.outer_iters << '\n'
            << "converged: " << (res.converged ? "yes" : "no") << '\n';
  return res.converged ? kExitOk : kExitNotConverged;
}

int run_sweep(const std::string& config, const std::string& init_path,
              std::vector<double> thetas, int jobs, const std::string& out_dir) {
  if (thetas.empty()) throw ConfigError("sweep needs at least one theta");
  std::sort(thetas.begin(), thetas.end());
  const Instance inst = load_config_file(config);
  for (double theta : thetas) {
    if (theta < 0 || theta > 1) throw ConfigError("theta must lie in [0, 1]");
  }
  const PolicyVars init = starting_policy(inst, init_path);
  ensure_dir(out_dir);

  std::vector<RunRow> rows(thetas.size());
  std::vector<PolicyVars> policies(thetas.size());
  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const size_t k = cursor.fetch_add(1);
      if (k >= thetas.size()) return;
      RunRow& row = rows[k];
      row.theta = thetas[k];
      try {
        const OptimizeResult res = alternating_optimize(inst, thetas[k], init);
        const BoundReport rep = bound_report(inst, res.policy, thetas[k]);
        row.objective = res.objective;
        row.avg_quality = rep.average_quality;
        row.weighted_stall = rep.weighted_mean_stall;
        row.converged = res.converged;
        row.outer_iters = res.outer_iters;
        policies[k] = res.policy;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(thetas.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();

  write_text_atomic(join_path(out_dir, "sweep.csv"), run_rows_csv(rows, true));
  bool any_ok = false;
  for (size_t k = 0; k < rows.size(); ++k) {
    if (!rows[k].error.empty()) continue;
    any_ok = true;
    write_text_atomic(join_path(out_dir, "policy_" + std::to_string(k) + ".json"),
                      save_policy(policies[k]));
  }
  for (const RunRow& row : rows) {
    std::cout << "theta " << fmt(row.theta) << ": ";
    if (row.error.empty()) {
      std::cout << "objective " << fmt(row.objective) << ", quality "
                << fmt(row.avg_quality) << ", stall " << fmt(row.weighted_stall) << '\n';
    } else {
      std::cout << "failed (" << row.error << ")\n";
    }
  }
  return any_ok ? kExitOk : kExitInfeasible;
}

int run_baselines(const std::string& config, double theta_flag, int jobs,
                  const std::string& out_dir) {
  const Instance inst = load_config_file(config);
  const double theta = pick_theta(inst, theta_flag);
  ensure_dir(out_dir);

  const std::vector<BaselineKind> kinds = all_baselines();
  std::vector<RunRow> rows(kinds.size() + 1);

  // The unrestricted solve comes first: its row anchors the table and its
  // policy doubles as the shared warm start for every baseline.
  PolicyVars warm;
  bool have_warm = false;
  {
    RunRow& row = rows[0];
    row.name = "joint";
    try {
      const PolicyVars init = feasibility_repair(inst, make_uniform_policy(inst));
      const OptimizeResult res = alternating_optimize(inst, theta, init);
      const BoundReport rep = bound_report(inst, res.policy, theta);
      row.objective = res.objective;
      row.avg_quality = rep.average_quality;
      row.weighted_stall = rep.weighted_mean_stall;
      row.converged = res.converged;
      row.outer_iters = res.outer_iters;
      warm = res.policy;
      have_warm = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }

  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const size_t k = cursor.fetch_add(1);
      if (k >= kinds.size()) return;
      RunRow& row = rows[k + 1];
      try {
        const BaselineKind kind = kinds[k];
        row.name = baseline_name(kind);
        const BaselineRun run =
            run_baseline(inst, kind, theta, have_warm ? &warm : nullptr);
        row.objective = run.result.objective;
        row.avg_quality = run.report.average_quality;
        row.weighted_stall = run.report.weighted_mean_stall;
        row.converged = run.result.converged;
        row.outer_iters = run.result.outer_iters;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(kinds.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();

  write_text_atomic(join_path(out_dir, "baselines.csv"), run_rows_csv(rows, false));
  for (const RunRow& row : rows) {
    std::cout << row.name << ": ";
    if (row.error.empty()) {
      std::cout << "objective " << fmt(row.objective) << ", quality "
                << fmt(row.avg_quality) << ", stall " << fmt(row.weighted_stall)
                << (row.converged ? "" : " (not converged)") << '\n';
    } else {
      std::cout << "failed (" << row.error << ")\n";
    }
  }
  if (!rows[0].error.empty()) return kExitInfeasible;
  return rows[0].converged ? kExitOk : kExitNotConverged;
}

int run_simulate(const std::string& config, const std::string& policy_path,
                 long requests, int replications, uint64_t seed, double warmup,
                 bool trace, bool compare, const std::string& out_dir) {
  const Instance inst = load_config_file(config);
  PolicyVars pol = starting_policy(inst, policy_path);
  SimConfig cfg;
  cfg.num_requests = requests;
  cfg.replications = replications;
  cfg.seed = seed;
  cfg.warmup_fraction = warmup;
  cfg.record_trace = trace;

  const SimReport sim = run_simulation(inst, pol, cfg);
  ensure_dir(out_dir);
  write_text_atomic(join_path(out_dir, "sim.json"), sim_report_json(inst, sim));
  write_text_atomic(join_path(out_dir, "sim.csv"), sim_report_csv(inst, sim));
  if (trace) write_text_atomic(join_path(out_dir, "sim_trace.csv"), sim_trace_csv(sim));

  std::cout << "mean_stall: " << fmt(sim.mean_stall) << '\n'
            << "mean_stall_se: " << fmt(sim.mean_stall_se) << '\n'
            << "avg_quality: " << fmt(sim.avg_quality) << '\n'
            << "counted_requests: " << sim.counted_requests << '\n';
  if (sim.unstable) std::cout << "warning: some stream has utilization >= 1\n";

  if (compare) {
    const BoundComparison cmp = compare_bound(inst, pol, sim);
    write_text_atomic(join_path(out_dir, "comparison.csv"), comparison_csv(cmp));
    std::cout << "weighted_bound: " << fmt(cmp.weighted_bound) << '\n'
              << "bound_holds: " << (cmp.bound_holds ? "yes" : "no") << '\n';
    if (!cmp.bound_holds) return kExitBoundViolated;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stall-duration bounds and joint quality/stall policy "
               "optimization for erasure-coded streaming"};
  app.require_subcommand(1);

  std::string config;
  std::string policy_path;
  std::string init_path;
  std::string out_dir = ".";
  double theta_flag = -1;
  bool fd_gradients = false;
  int max_iters = 0;
  double epsilon = 0;
  std::vector<double> thetas;
  int jobs = 1;
  long requests = 100000;
  int replications = 1;
  uint64_t seed = 1;
  double warmup = 0.1;
  bool trace = false;
  bool compare = false;

  CLI::App* analyze = app.add_subcommand("analyze", "Evaluate the stall bound for a policy");
  analyze->add_option("config", config, "instance JSON")->required();
  analyze->add_option("--policy", policy_path, "policy JSON (default: uniform, repaired)");
  analyze->add_option("--theta", theta_flag, "tradeoff weight in [0, 1]");
  analyze->add_option("--out-dir", out_dir, "output directory");

  CLI::App* optimize = app.add_subcommand("optimize", "Jointly optimize all policy blocks");
  optimize->add_option("config", config, "instance JSON")->required();
  optimize->add_option("--init", init_path, "initial policy JSON");
  optimize->add_option("--theta", theta_flag, "tradeoff weight in [0, 1]");
  optimize->add_flag("--fd-gradients", fd_gradients,
                     "finite-difference gradients (slow, for validation)");
  optimize->add_option("--max-iters", max_iters, "outer iteration cap override");
  optimize->add_option("--epsilon", epsilon, "convergence tolerance override");
  optimize->add_option("--out-dir", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "Optimize across a list of tradeoff weights");
  sweep->add_option("config", config, "instance JSON")->required();
  sweep->add_option("--thetas", thetas, "tradeoff weights")->required()->delimiter(',');
  sweep->add_option("--init", init_path, "initial policy JSON");
  sweep->add_option("--jobs", jobs, "parallel workers");
  sweep->add_option("--out-dir", out_dir, "output directory");

  CLI::App* baselines = app.add_subcommand("baselines", "Compare reference schemes");
  baselines->add_option("config", config, "instance JSON")->required();
  baselines->add_option("--theta", theta_flag, "tradeoff weight in [0, 1]");
  baselines->add_option("--jobs", jobs, "parallel workers");
  baselines->add_option("--out-dir", out_dir, "output directory");

  CLI::App* simulate = app.add_subcommand("simulate", "Event-driven policy replay");
  simulate->add_option("config", config, "instance JSON")->required();
  simulate->add_option("--policy", policy_path, "policy JSON (default: uniform, repaired)");
  simulate->add_option("--requests", requests, "arrivals per replication");
  simulate->add_option("--replications", replications, "independent replications");
  simulate->add_option("--seed", seed, "base RNG seed");
  simulate->add_option("--warmup", warmup, "leading arrival fraction excluded");
  simulate->add_flag("--trace", trace, "write per-request trace");
  simulate->add_flag("--compare", compare, "check the analytic bound against the run");
  simulate->add_option("--out-dir", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(config, policy_path, theta_flag, out_dir);
    if (*optimize) {
      return run_optimize(config, init_path, theta_flag, fd_gradients, max_iters,
                          epsilon, out_dir);
    }
    if (*sweep) return run_sweep(config, init_path, thetas, jobs, out_dir);
    if (*baselines) return run_baselines(config, theta_flag, jobs, out_dir);
    if (*simulate) {
      return run_simulate(config, policy_path, requests, replications, seed, warmup,
                          trace, compare, out_dir);
    }
  } catch (const FeasibilityError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const EmptyIntervalError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const DomainError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
