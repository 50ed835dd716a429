#pragma once

// Output tables and logs. Every file starts with a versioned '#' header line
// and is written through a temporary file so failures leave nothing behind.

#include <string>
#include <vector>

#include "phsrl/learning.hpp"
#include "phsrl/mabc.hpp"
#include "phsrl/oracle.hpp"
#include "phsrl/qlearning.hpp"

namespace phsrl {

/// Writes `content` to `path` via a sibling temporary and rename.
void write_atomic(const std::string& path, const std::string& content);

std::string qtable_csv(const mabc::MabcProblem& problem, const QTable& q);
std::string strategy_csv(const mabc::MabcProblem& problem, const LearnedStrategy& psi);
std::string values_csv(const mabc::MabcProblem& problem, const ValueFunction& v, const LearnedStrategy& psi);
std::string trajectory_jsonl(const mabc::MabcProblem& problem, const std::vector<TrajectoryRecord>& records);
/// (iteration, x, y) of each logged state under the 1 − b^k embedding.
std::string plot_data_csv(const mabc::MabcProblem& problem, const std::vector<TrajectoryRecord>& records);

/// Reads a strategy.csv written for the same problem; actions are matched by
/// label. Throws ConfigError on malformed or mismatched input.
LearnedStrategy read_strategy_csv(const std::string& path, const mabc::MabcProblem& problem);

} // namespace phsrl
