#pragma once

#include "agentdistill/core/types.hpp"

#include <cstddef>
#include <istream>
#include <ostream>
#include <vector>

namespace agentdistill {

// Reads newline-delimited trajectory records. Any malformed line rejects the
// whole stream with a ParseError carrying its 1-based line number. Blank
// lines are skipped.
std::vector<Trajectory> parse_trajectory_log(std::istream& in);

// Writes one compact JSON object per line and returns the bytes written.
std::size_t write_trajectory_log(const std::vector<Trajectory>& trajectories, std::ostream& out);

Trajectory trajectory_from_json(const json& j);

}  // namespace agentdistill
