#pragma once

// Experiment configuration: key = value files plus command-line overrides.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "phsrl/mabc.hpp"

namespace phsrl {

struct ExperimentConfig {
    mabc::MabcConfig mabc;
    std::optional<int> level;      // N from the file
    std::optional<double> epsilon; // target truncation error from the file
    std::uint64_t seed = 0;
    std::uint64_t iterations = 2000000;
    std::uint64_t snapshot_every = 1000;
};

/// Parses `key = value` lines; '#' starts a comment. With a file, p1, p2,
/// l1, l2, l3 and beta must all be present. Throws ConfigError naming the
/// offending key.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// N by precedence: explicit N, explicit epsilon, file N, file epsilon, 20.
int resolve_level(const ExperimentConfig& config, std::optional<int> n_flag, std::optional<double> epsilon_flag);

} // namespace phsrl
