#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "streamopt/io.hpp"

namespace streamopt {

namespace {

using nlohmann::json;

std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

std::string csv_double(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw ConfigError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ConfigError("cannot move " + tmp + " into place");
  }
}

std::string bound_report_json(const Instance& inst, const BoundReport& rep) {
  json j;
  j["theta"] = rep.theta;
  j["objective"] = rep.objective;
  j["weighted_mean_stall"] = rep.weighted_mean_stall;
  j["average_quality"] = rep.average_quality;
  json files = json::array();
  for (int i = 0; i < inst.num_videos(); ++i) {
    json f;
    f["video"] = inst.videos[i].video_id;
    f["stall_bound"] = rep.per_file_quality_bound[i];
    files.push_back(f);
  }
  j["per_file"] = files;
  json loads = json::array();
  for (int jj = 0; jj < inst.num_servers(); ++jj) {
    json s;
    s["server"] = inst.servers[jj].server_id;
    s["arrival_rate"] = rep.loads.lambda[jj];
    s["utilization"] = rep.loads.rho[jj];
    loads.push_back(s);
  }
  j["streams"] = loads;
  return dump_canonical(j);
}

std::string bound_report_csv(const Instance& inst, const BoundReport& rep) {
  std::ostringstream os;
  os << "video,level,stall_bound\n";
  for (int i = 0; i < inst.num_videos(); ++i) {
    for (int l = 0; l < inst.levels(); ++l) {
      os << inst.videos[i].video_id << ',' << l + 1 << ','
         << csv_double(rep.per_file_quality_bound[i][l]) << '\n';
    }
  }
  return os.str();
}

std::string trace_csv(const OptimizeTrace& trace) {
  std::ostringstream os;
  os << "outer,block,objective,inner_steps,max_slack\n";
  for (const TraceRow& row : trace) {
    os << row.outer << ',' << block_name(row.block) << ',' << csv_double(row.objective)
       << ',' << row.inner_steps << ',' << csv_double(row.max_slack) << '\n';
  }
  return os.str();
}

std::string sim_report_json(const Instance& inst, const SimReport& rep) {
  json j;
  j["mean_stall"] = rep.mean_stall;
  j["mean_stall_se"] = rep.mean_stall_se;
  j["avg_quality"] = rep.avg_quality;
  j["unstable"] = rep.unstable;
  j["seed"] = rep.seed;
  j["replications"] = rep.replications;
  j["counted_requests"] = rep.counted_requests;
  json files = json::array();
  for (const auto& [id, stall] : rep.per_file_stall) {
    json f;
    f["video"] = id;
    f["mean_stall"] = stall;
    json levels = json::array();
    for (const auto& [key, value] : rep.per_file_level_stall) {
      if (key.first != id) continue;
      json lv;
      lv["level"] = key.second;
      lv["mean_stall"] = value;
      lv["samples"] = rep.per_file_level_count.at(key);
      const auto se = rep.per_file_level_se.find(key);
      if (se != rep.per_file_level_se.end()) lv["se"] = se->second;
      levels.push_back(lv);
    }
    f["levels"] = levels;
    files.push_back(f);
  }
  j["per_file"] = files;
  json streams = json::array();
  for (int jj = 0; jj < inst.num_servers(); ++jj) {
    json s;
    s["server"] = inst.servers[jj].server_id;
    s["mean_wait"] = rep.mean_wait[jj];
    s["utilization"] = rep.utilization[jj];
    streams.push_back(s);
  }
  j["streams"] = streams;
  return dump_canonical(j);
}

std::string sim_report_csv(const Instance& inst, const SimReport& rep) {
  std::ostringstream os;
  os << "video,level,samples,mean_stall,se\n";
  for (const auto& [key, value] : rep.per_file_level_stall) {
    const auto se = rep.per_file_level_se.find(key);
    os << key.first << ',' << key.second << ',' << rep.per_file_level_count.at(key)
       << ',' << csv_double(value) << ','
       << (se != rep.per_file_level_se.end() ? csv_double(se->second) : "") << '\n';
  }
  (void)inst;
  return os.str();
}

std::string sim_trace_csv(const SimReport& rep) {
  std::ostringstream os;
  os << "request,video,level,arrival,stall,selection\n";
  for (const RequestTrace& tr : rep.trace) {
    os << tr.request_id << ',' << tr.video << ',' << tr.level << ','
       << csv_double(tr.arrival) << ',' << csv_double(tr.stall) << ',';
    for (size_t k = 0; k < tr.selection.size(); ++k) {
      if (k) os << ' ';
      os << tr.selection[k].first << ':' << tr.selection[k].second;
    }
    os << '\n';
  }
  return os.str();
}

std::string comparison_csv(const BoundComparison& cmp) {
  std::ostringstream os;
  os << "video,level,samples,empirical,se,bound\n";
  for (const auto& row : cmp.rows) {
    os << row.video << ',' << row.level << ',' << row.samples << ','
       << csv_double(row.empirical) << ',' << csv_double(row.se) << ','
       << csv_double(row.bound) << '\n';
  }
  os << "total,,," << csv_double(cmp.weighted_empirical) << ','
     << csv_double(cmp.weighted_se) << ',' << csv_double(cmp.weighted_bound) << '\n';
  return os.str();
}

}  // namespace streamopt
