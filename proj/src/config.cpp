#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "streamopt/config.hpp"

namespace streamopt {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(where + ": missing field '" + key + "'");
  }
  return *it;
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int require_int(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw ConfigError(where + ": field '" + key + "' must be an integer");
  }
  return v.get<int>();
}

std::vector<int> placement_from_ids(const json& arr, const std::map<int, int>& id_to_index,
                                    const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + ": placement must be an array");
  std::vector<int> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number_integer()) throw ConfigError(where + ": placement entries must be server ids");
    auto it = id_to_index.find(v.get<int>());
    if (it == id_to_index.end()) {
      throw ConfigError(where + ": placement references unknown server id " +
                        std::to_string(v.get<int>()));
    }
    out.push_back(it->second);
  }
  return out;
}

void read_solver(const json& s, SolverConfig* cfg) {
  if (s.contains("theta")) cfg->theta = s.at("theta").get<double>();
  if (s.contains("step_gamma")) cfg->step_gamma = s.at("step_gamma").get<double>();
  if (s.contains("epsilon")) cfg->epsilon = s.at("epsilon").get<double>();
  if (s.contains("max_outer_iters")) cfg->max_outer_iters = s.at("max_outer_iters").get<int>();
  if (s.contains("slack_delta")) cfg->slack_delta = s.at("slack_delta").get<double>();
  if (s.contains("fd_gradients")) cfg->fd_gradients = s.at("fd_gradients").get<bool>();
  if (s.contains("reg")) {
    const json& r = s.at("reg");
    if (r.contains("q")) cfg->reg.q = r.at("q").get<double>();
    if (r.contains("p")) cfg->reg.p = r.at("p").get<double>();
    if (r.contains("t")) cfg->reg.t = r.at("t").get<double>();
    if (r.contains("b")) cfg->reg.b = r.at("b").get<double>();
    if (r.contains("w")) cfg->reg.w = r.at("w").get<double>();
  }
  if (s.contains("inner_pgd")) {
    const json& p = s.at("inner_pgd");
    if (p.contains("step")) cfg->inner_pgd.step = p.at("step").get<double>();
    if (p.contains("max_steps")) cfg->inner_pgd.max_steps = p.at("max_steps").get<int>();
    if (p.contains("tol")) cfg->inner_pgd.tol = p.at("tol").get<double>();
  }
}

}  // namespace

Instance load_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("parse error: ") + err.what());
  }
  if (!root.is_object()) throw ConfigError("top level must be an object");

  Instance inst;

  const json& servers = require(root, "servers", "config");
  if (!servers.is_array() || servers.empty()) {
    throw ConfigError("servers: must be a non-empty array");
  }
  std::map<int, int> id_to_index;
  for (const json& s : servers) {
    ServerSpec spec;
    spec.server_id = require_int(s, "id", "server");
    const std::string where = "server " + std::to_string(spec.server_id);
    spec.alpha_base = require_number(s, "alpha_base", where);
    spec.beta_base = require_number(s, "beta_base", where);
    spec.num_streams = require_int(s, "num_streams", where);
    if (id_to_index.count(spec.server_id)) {
      throw ConfigError("servers: duplicate id " + std::to_string(spec.server_id));
    }
    id_to_index[spec.server_id] = static_cast<int>(inst.servers.size());
    inst.servers.push_back(spec);
  }

  const json& qualities = require(root, "qualities", "config");
  if (!qualities.is_array() || qualities.empty()) {
    throw ConfigError("qualities: must be a non-empty array");
  }
  for (const json& v : qualities) {
    if (!v.is_number()) throw ConfigError("qualities: entries must be numbers");
    inst.ladder.sizes.push_back(v.get<double>());
  }
  const int V = inst.ladder.levels();

  const json& videos = require(root, "videos", "config");
  if (!videos.is_array() || videos.empty()) {
    throw ConfigError("videos: must be a non-empty array");
  }
  for (const json& v : videos) {
    VideoSpec vid;
    vid.video_id = require_int(v, "id", "video");
    const std::string where = "video " + std::to_string(vid.video_id);
    vid.arrival_rate = require_number(v, "lambda", where);
    vid.num_segments = require_int(v, "segments", where);
    vid.code_n = require_int(v, "n", where);
    vid.code_k = require_int(v, "k", where);
    const bool has_shared = v.contains("placement");
    const bool has_per_level = v.contains("placement_per_quality");
    if (has_shared == has_per_level) {
      throw ConfigError(where + ": exactly one of placement / placement_per_quality required");
    }
    if (has_shared) {
      vid.shared_placement = true;
      std::vector<int> servers_v = placement_from_ids(v.at("placement"), id_to_index, where);
      vid.placement.assign(V, servers_v);
    } else {
      vid.shared_placement = false;
      const json& per = v.at("placement_per_quality");
      if (!per.is_array() || static_cast<int>(per.size()) != V) {
        throw ConfigError(where + ": placement_per_quality must list one set per level");
      }
      for (const json& arr : per) {
        vid.placement.push_back(placement_from_ids(arr, id_to_index, where));
      }
    }
    inst.videos.push_back(std::move(vid));
  }

  const json& streaming = require(root, "streaming", "config");
  inst.streaming.segment_seconds = require_number(streaming, "tau", "streaming");
  inst.streaming.startup_delay = require_number(streaming, "startup_delay", "streaming");

  if (root.contains("solver")) read_solver(root.at("solver"), &inst.solver);

  inst.finalize();
  return inst;
}

Instance load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

std::string save_config(const Instance& inst) {
  json root;
  json servers = json::array();
  for (const ServerSpec& s : inst.servers) {
    servers.push_back({{"alpha_base", s.alpha_base},
                       {"beta_base", s.beta_base},
                       {"id", s.server_id},
                       {"num_streams", s.num_streams}});
  }
  root["servers"] = std::move(servers);
  root["qualities"] = inst.ladder.sizes;

  json videos = json::array();
  for (const VideoSpec& vid : inst.videos) {
    json v = {{"id", vid.video_id},
              {"k", vid.code_k},
              {"lambda", vid.arrival_rate},
              {"n", vid.code_n},
              {"segments", vid.num_segments}};
    auto to_ids = [&inst](const std::vector<int>& idxs) {
      std::vector<int> ids;
      ids.reserve(idxs.size());
      for (int j : idxs) ids.push_back(inst.servers[j].server_id);
      return ids;
    };
    if (vid.shared_placement) {
      v["placement"] = to_ids(vid.placement.at(0));
    } else {
      json per = json::array();
      for (const std::vector<int>& level_set : vid.placement) per.push_back(to_ids(level_set));
      v["placement_per_quality"] = std::move(per);
    }
    videos.push_back(std::move(v));
  }
  root["videos"] = std::move(videos);

  root["streaming"] = {{"startup_delay", inst.streaming.startup_delay},
                       {"tau", inst.streaming.segment_seconds}};

  const SolverConfig& c = inst.solver;
  root["solver"] = {
      {"epsilon", c.epsilon},
      {"fd_gradients", c.fd_gradients},
      {"inner_pgd",
       {{"max_steps", c.inner_pgd.max_steps}, {"step", c.inner_pgd.step}, {"tol", c.inner_pgd.tol}}},
      {"max_outer_iters", c.max_outer_iters},
      {"reg", {{"b", c.reg.b}, {"p", c.reg.p}, {"q", c.reg.q}, {"t", c.reg.t}, {"w", c.reg.w}}},
      {"slack_delta", c.slack_delta},
      {"step_gamma", c.step_gamma},
      {"theta", c.theta}};

  return root.dump(2) + "\n";
}

std::string save_policy(const PolicyVars& pol) {
  json root;
  root["q"] = pol.q;
  root["p"] = pol.p;
  root["b"] = pol.b;
  root["w"] = pol.w;
  root["t"] = pol.t;
  return root.dump(2) + "\n";
}

PolicyVars load_policy(const std::string& json_text, const Instance& inst) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("policy parse error: ") + err.what());
  }
  PolicyVars pol;
  try {
    require(root, "q", "policy").get_to(pol.q);
    require(root, "p", "policy").get_to(pol.p);
    require(root, "b", "policy").get_to(pol.b);
    require(root, "w", "policy").get_to(pol.w);
    require(root, "t", "policy").get_to(pol.t);
  } catch (const json::exception& err) {
    throw ConfigError(std::string("policy field malformed: ") + err.what());
  }
  check_policy_shape(inst, pol);
  return pol;
}

PolicyVars load_policy_file(const std::string& path, const Instance& inst) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_policy(buf.str(), inst);
}

}  // namespace streamopt
