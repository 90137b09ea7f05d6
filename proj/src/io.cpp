#include "covertmdp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace covertmdp {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return j;
}

}  // namespace

Mdp load_mdp(const std::filesystem::path& path) {
    json j = read_json(path);
    Mdp mdp;
    try {
        mdp.num_states = j.at("num_states").get<std::size_t>();
        mdp.num_actions = j.at("num_actions").get<std::size_t>();
        const auto& tr = j.at("transition");
        if (tr.size() != mdp.num_states)
            throw ValidationError("transition: expected " + std::to_string(mdp.num_states) +
                                  " state blocks");
        mdp.transition.reserve(mdp.num_states * mdp.num_actions * mdp.num_states);
        for (const auto& per_state : tr) {
            if (per_state.size() != mdp.num_actions)
                throw ValidationError("transition: expected " + std::to_string(mdp.num_actions) +
                                      " action rows per state");
            for (const auto& row : per_state) {
                if (row.size() != mdp.num_states)
                    throw ValidationError("transition: next-state row of wrong length");
                for (const auto& v : row) mdp.transition.push_back(v.get<double>());
            }
        }
        const auto& rw = j.at("reward");
        mdp.reward = Matrix(mdp.num_states, mdp.num_actions);
        for (std::size_t s = 0; s < mdp.num_states; ++s)
            for (std::size_t a = 0; a < mdp.num_actions; ++a)
                mdp.reward(s, a) = rw.at(s).at(a).get<double>();
        for (const auto& v : j.at("initial")) mdp.initial.push_back(v.get<double>());
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    validate(mdp);
    return mdp;
}

void save_mdp(const Mdp& mdp, const std::filesystem::path& path) {
    json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    json tr = json::array();
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        json per_state = json::array();
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            json row = json::array();
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) row.push_back(mdp.t(s, a, s2));
            per_state.push_back(std::move(row));
        }
        tr.push_back(std::move(per_state));
    }
    j["transition"] = std::move(tr);
    json rw = json::array();
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        json row = json::array();
        for (std::size_t a = 0; a < mdp.num_actions; ++a) row.push_back(mdp.reward(s, a));
        rw.push_back(std::move(row));
    }
    j["reward"] = std::move(rw);
    j["initial"] = mdp.initial;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Policy load_policy(const std::filesystem::path& path, const Mdp& mdp) {
    json j = read_json(path);
    Policy p{Matrix(mdp.num_states, mdp.num_actions)};
    try {
        const auto& probs = j.at("probs");
        if (probs.size() != mdp.num_states)
            throw ValidationError(path.string() + ": expected one row per state");
        for (std::size_t s = 0; s < mdp.num_states; ++s) {
            if (probs.at(s).size() != mdp.num_actions)
                throw ValidationError(path.string() + ": expected one entry per action");
            for (std::size_t a = 0; a < mdp.num_actions; ++a)
                p.probs(s, a) = probs.at(s).at(a).get<double>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    validate_policy(mdp, p);
    return p;
}

void save_policy(const Policy& policy, const std::filesystem::path& path) {
    json j;
    json probs = json::array();
    for (std::size_t s = 0; s < policy.num_states(); ++s) {
        json row = json::array();
        for (std::size_t a = 0; a < policy.num_actions(); ++a) row.push_back(policy.probs(s, a));
        probs.push_back(std::move(row));
    }
    j["probs"] = std::move(probs);
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Trajectory load_trajectory_csv(const std::filesystem::path& path, std::size_t num_states) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    Trajectory traj;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("step,", 0) == 0) continue;  // header
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'step,state'");
        long state = 0;
        try {
            state = std::stol(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": unparsable state");
        }
        if (state < 0 || static_cast<std::size_t>(state) >= num_states)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": state " + std::to_string(state) + " out of range");
        traj.states.push_back(static_cast<std::int32_t>(state));
    }
    if (traj.states.size() < 2)
        throw ValidationError(path.string() + ": trajectory needs at least 2 states");
    return traj;
}

void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "step,state\n";
    for (std::size_t t = 0; t < traj.states.size(); ++t)
        out << t + 1 << "," << traj.states[t] << "\n";
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back = std::strtod(probe, nullptr);
        if (back == v) return probe;
    }
    return buf;
}

}  // namespace covertmdp
