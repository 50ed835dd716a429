#include "phsrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "phsrl/ier.hpp"

namespace phsrl {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty()) throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, text));
    return v;
}

} // namespace

ExperimentConfig parse_config(std::istream& in) {
    static const std::set<std::string> known{"p1", "p2", "l1", "l2", "l3", "beta", "b1", "b2", "N",
                                             "epsilon", "seed", "iterations", "snapshot_every", "L",
                                             "environment"};
    static const std::vector<std::string> required{"p1", "p2", "l1", "l2", "l3", "beta"};

    std::map<std::string, std::string> entries;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", number));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known.count(key)) throw ConfigError(fmt::format("line {}: unknown key '{}'", number, key));
        if (entries.count(key)) throw ConfigError(fmt::format("line {}: duplicate key '{}'", number, key));
        entries[key] = value;
    }
    for (const auto& key : required)
        if (!entries.count(key)) throw ConfigError(fmt::format("missing required key '{}'", key));

    ExperimentConfig c;
    auto& m = c.mabc;
    m.p1 = to_double("p1", entries["p1"]);
    m.p2 = to_double("p2", entries["p2"]);
    m.l1 = to_double("l1", entries["l1"]);
    m.l2 = to_double("l2", entries["l2"]);
    m.l3 = to_double("l3", entries["l3"]);
    m.beta = to_double("beta", entries["beta"]);
    if (entries.count("b1")) m.b1 = to_double("b1", entries["b1"]);
    if (entries.count("b2")) m.b2 = to_double("b2", entries["b2"]);
    if (entries.count("environment") && entries["environment"] != "mabc")
        throw ConfigError(fmt::format("environment: unsupported '{}'", entries["environment"]));
    m.L = entries.count("L") ? to_double("L", entries["L"]) : std::max(1.0, mabc::tight_cost_bound(m));
    if (entries.count("N")) {
        const auto n = to_unsigned("N", entries["N"]);
        if (n < 1) throw ConfigError("N: must be at least 1");
        c.level = static_cast<int>(n);
        m.N = *c.level;
    }
    if (entries.count("epsilon")) {
        c.epsilon = to_double("epsilon", entries["epsilon"]);
        if (!(*c.epsilon > 0.0)) throw ConfigError("epsilon: must be positive");
    }
    if (entries.count("seed")) c.seed = to_unsigned("seed", entries["seed"]);
    if (entries.count("iterations")) c.iterations = to_unsigned("iterations", entries["iterations"]);
    if (entries.count("snapshot_every")) c.snapshot_every = to_unsigned("snapshot_every", entries["snapshot_every"]);
    m.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
    return parse_config(in);
}

int resolve_level(const ExperimentConfig& config, std::optional<int> n_flag, std::optional<double> epsilon_flag) {
    const auto& m = config.mabc;
    if (n_flag) {
        if (*n_flag < 1) throw ConfigError("--n: must be at least 1");
        return *n_flag;
    }
    if (epsilon_flag) {
        if (!(*epsilon_flag > 0.0)) throw ConfigError("--epsilon: must be positive");
        return min_truncation_level(m.beta, m.L, *epsilon_flag);
    }
    if (config.level) return *config.level;
    if (config.epsilon) return min_truncation_level(m.beta, m.L, *config.epsilon);
    return 20;
}

} // namespace phsrl
