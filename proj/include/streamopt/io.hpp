#pragma once

#include <string>

#include "streamopt/analytics.hpp"
#include "streamopt/optimizer.hpp"
#include "streamopt/simulator.hpp"

namespace streamopt {

// Writes content to path via a temp file + rename so readers never see
// a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string bound_report_json(const Instance& inst, const BoundReport& rep);
std::string bound_report_csv(const Instance& inst, const BoundReport& rep);
std::string trace_csv(const OptimizeTrace& trace);
std::string sim_report_json(const Instance& inst, const SimReport& rep);
std::string sim_report_csv(const Instance& inst, const SimReport& rep);
std::string sim_trace_csv(const SimReport& rep);
std::string comparison_csv(const BoundComparison& cmp);

}  // namespace streamopt
