#include "phsrl/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace phsrl {

namespace {

constexpr const char* kSchema = "phsrl-output v1";

std::string action_label(const mabc::MabcProblem& problem, std::size_t g) {
    return mabc::action_of(problem.prescriptions[g]).label();
}

// labels contain commas, so they are quoted
std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (char c : line) {
        if (c == '"') in_quotes = !in_quotes;
        else if (c == ',' && !in_quotes) {
            fields.push_back(cur);
            cur.clear();
        } else cur += c;
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
        out << content;
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw ConfigError(fmt::format("write to '{}' failed", path));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw ConfigError(fmt::format("cannot rename onto '{}': {}", path, ec.message()));
    }
}

std::string qtable_csv(const mabc::MabcProblem& problem, const QTable& q) {
    std::string out = fmt::format("# {} qtable\nstate_index,state_label,action_label,q_value,alpha,visits\n", kSchema);
    for (std::size_t s = 0; s < q.state_count(); ++s)
        for (std::size_t g = 0; g < q.action_count(); ++g)
            out += fmt::format("{},{},{},{:.17g},{:.17g},{}\n", s, quoted(problem.mdp.label(s)), quoted(action_label(problem, g)),
                               q.value(s, g), q.step_size(s, g), q.visits(s, g));
    return out;
}

std::string strategy_csv(const mabc::MabcProblem& problem, const LearnedStrategy& psi) {
    std::string out = fmt::format("# {} strategy\nstate_index,state_label,action_label\n", kSchema);
    for (std::size_t s = 0; s < psi.actions.size(); ++s)
        out += fmt::format("{},{},{}\n", s, quoted(problem.mdp.label(s)), quoted(action_label(problem, psi.actions[s])));
    return out;
}

std::string values_csv(const mabc::MabcProblem& problem, const ValueFunction& v, const LearnedStrategy& psi) {
    std::string out = fmt::format("# {} values\nstate_index,state_label,value,greedy_action\n", kSchema);
    for (std::size_t s = 0; s < v.values.size(); ++s)
        out += fmt::format("{},{},{:.17g},{}\n", s, quoted(problem.mdp.label(s)), v.values[s],
                           quoted(action_label(problem, psi.actions.at(s))));
    return out;
}

std::string trajectory_jsonl(const mabc::MabcProblem& problem, const std::vector<TrajectoryRecord>& records) {
    std::string out = fmt::format("# {} trajectory\n", kSchema);
    for (const auto& r : records) {
        const auto sym = mabc::SymbolicState::from_ier(problem.mdp.state(r.state));
        nlohmann::ordered_json j;
        j["iteration"] = r.iteration;
        j["state"] = r.state;
        j["state_label"] = problem.mdp.label(r.state);
        j["k1"] = sym.k1();
        j["k2"] = sym.k2();
        j["action"] = action_label(problem, r.action);
        j["cost"] = r.cost;
        j["next_state"] = r.next_state;
        j["reset"] = r.reset;
        out += j.dump() + "\n";
    }
    return out;
}

std::string plot_data_csv(const mabc::MabcProblem& problem, const std::vector<TrajectoryRecord>& records) {
    std::string out = fmt::format("# {} plot-data\niteration,x,y\n", kSchema);
    for (const auto& r : records) {
        const auto sym = mabc::SymbolicState::from_ier(problem.mdp.state(r.state));
        const auto [x, y] = mabc::mabc_embedding(sym, problem.config.b1, problem.config.b2);
        out += fmt::format("{},{:.17g},{:.17g}\n", r.iteration, x, y);
    }
    return out;
}

LearnedStrategy read_strategy_csv(const std::string& path, const mabc::MabcProblem& problem) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read strategy file '{}'", path));
    LearnedStrategy psi;
    psi.actions.assign(problem.mdp.state_count(), 0);
    std::vector<bool> seen(problem.mdp.state_count(), false);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 3) throw ConfigError(fmt::format("strategy file: malformed line '{}'", line));
        std::size_t s = 0;
        try {
            s = std::stoul(f[0]);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("strategy file: bad state index '{}'", f[0]));
        }
        if (s >= psi.actions.size() || f[1] != problem.mdp.label(s))
            throw ConfigError(fmt::format("strategy file: state {} does not match the configured truncation", f[0]));
        bool found = false;
        for (std::size_t g = 0; g < problem.prescriptions.size() && !found; ++g)
            if (action_label(problem, g) == f[2]) {
                psi.actions[s] = g;
                found = true;
            }
        if (!found) throw ConfigError(fmt::format("strategy file: unknown action '{}'", f[2]));
        seen[s] = true;
    }
    for (std::size_t s = 0; s < seen.size(); ++s)
        if (!seen[s]) throw ConfigError(fmt::format("strategy file: no action for state {}", s));
    return psi;
}

} // namespace phsrl
