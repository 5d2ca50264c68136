#pragma once

#include <string>

#include "streamopt/types.hpp"

namespace streamopt {

// Parses and validates a JSON instance description. Throws ConfigError
// with the offending field named. The result is finalized.
Instance load_config(const std::string& json_text);
Instance load_config_file(const std::string& path);

// Canonical serialization: alphabetical keys, shortest round-trip
// numbers. serialize -> load -> serialize is byte-stable.
std::string save_config(const Instance& inst);

// Policy serialization, nested arrays in (i,l,j) / (l,j,nu) / (i,l) /
// (j,nu) / (i) order.
std::string save_policy(const PolicyVars& pol);
PolicyVars load_policy(const std::string& json_text, const Instance& inst);
PolicyVars load_policy_file(const std::string& path, const Instance& inst);

}  // namespace streamopt
