// On-disk formats. MDP: JSON with num_states, num_actions, transition
// ([s][a][s']), reward ([s][a]), initial ([s]). Policy: JSON {"probs":
// [[per action], per state]}. Trajectory: CSV "step,state". Loaders enforce
// all invariants.
#pragma once

#include <filesystem>
#include <string>

#include "covertmdp/stats.hpp"

namespace covertmdp {

Mdp load_mdp(const std::filesystem::path& path);
void save_mdp(const Mdp& mdp, const std::filesystem::path& path);

Policy load_policy(const std::filesystem::path& path, const Mdp& mdp);
void save_policy(const Policy& policy, const std::filesystem::path& path);

Trajectory load_trajectory_csv(const std::filesystem::path& path, std::size_t num_states);
void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

// Shortest round-trip decimal form; the single formatting used in every CSV
// so identical runs are byte-identical.
std::string format_double(double v);

}  // namespace covertmdp
