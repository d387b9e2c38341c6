#include "ope/trajectory.hpp"

#include <cmath>
#include <cstdio>

namespace ope {

namespace {
std::string fmt(const char* pattern, int idx) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, idx);
  return buf;
}
}  // namespace

std::vector<std::string> validate_trajectory(const Trajectory& traj) {
  std::vector<std::string> out;
  const int kobs = traj.num_obs();
  if (kobs == 0) {
    out.push_back("times empty");
    return out;
  }
  const int K = kobs - 1;
  if (traj.d < 1) out.push_back("state dimension d < 1");
  if (traj.times[0] != 0.0) out.push_back("times: T_0 != 0");
  for (int k = 1; k < kobs; ++k) {
    if (!(traj.times[k] > traj.times[k - 1]))
      out.push_back(fmt("times not increasing at k=%d", k));
  }
  if (static_cast<int>(traj.gap_times.size()) != kobs) {
    out.push_back(fmt("gap_times: expected %d entries", kobs));
  } else {
    for (int k = 0; k < kobs; ++k) {
      if (!(traj.gap_times[k] > 0.0)) out.push_back(fmt("gap_times: X_%d <= 0", k));
    }
    for (int k = 1; k < kobs; ++k) {
      const double diff = traj.times[k] - traj.times[k - 1];
      if (std::fabs(traj.gap_times[k] - diff) > 1e-12)
        out.push_back(fmt("gap mismatch at k=%d", k));
    }
  }
  if (static_cast<int>(traj.states.size()) != kobs * traj.d)
    out.push_back(fmt("states: expected %d entries", kobs * traj.d));
  const int na = static_cast<int>(traj.actions.size());
  if (na != K && na != K + 1)
    out.push_back(fmt("actions: expected %d (or one more) entries", K));
  if (static_cast<int>(traj.rewards.size()) != K)
    out.push_back(fmt("rewards: expected %d entries", K));
  return out;
}

std::vector<std::string> validate_dataset(const Dataset& data) {
  std::vector<std::string> out;
  if (data.trajectories.empty()) out.push_back("dataset: no trajectories");
  if (data.m < 1) out.push_back("dataset: m < 1");
  long n_k = 0;
  for (size_t i = 0; i < data.trajectories.size(); ++i) {
    const auto& traj = data.trajectories[i];
    if (traj.d != data.d) out.push_back(fmt("trajectory %d: state dimension mismatch", static_cast<int>(i)));
    for (int a : traj.actions) {
      if (a < 0 || a >= data.m) {
        out.push_back(fmt("trajectory %d: action out of range", static_cast<int>(i)));
        break;
      }
    }
    auto sub = validate_trajectory(traj);
    for (auto& v : sub) out.push_back(fmt("trajectory %d: ", static_cast<int>(i)) + v);
    n_k += traj.num_transitions();
  }
  if (!data.trajectories.empty() && n_k < 1) out.push_back("dataset: no transitions");
  return out;
}

}  // namespace ope
