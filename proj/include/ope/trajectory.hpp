#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ope {

enum class RewardMode { Cumulative, Integrated };

inline const char* to_string(RewardMode m) {
  return m == RewardMode::Cumulative ? "cumulative" : "integrated";
}

// One subject's observation sequence. With K transitions the sequence holds
// K+1 observation times T_0..T_K (T_0 = 0), K+1 gap times X_0..X_K
// (X_k = T_k - T_{k-1} for k >= 1; X_0 is supplied), K+1 states, rewards
// R(T_1)..R(T_K), and K or K+1 actions. The final action, when present, is
// carried along but ignored by all estimators.
struct Trajectory {
  int d = 1;                      // state dimension
  std::vector<double> times;      // T_0..T_K
  std::vector<double> gap_times;  // X_0..X_K
  std::vector<double> states;     // (K+1) x d, row-major
  std::vector<int> actions;       // A_0..A_{K-1} or A_0..A_K
  std::vector<double> rewards;    // R(T_1)..R(T_K)

  int num_obs() const { return static_cast<int>(times.size()); }
  int num_transitions() const { return num_obs() - 1; }
  const double* state(int k) const { return states.data() + static_cast<size_t>(k) * d; }
};

struct Dataset {
  int d = 1;
  int m = 2;  // action count
  std::vector<Trajectory> trajectories;

  long total_transitions() const {
    long n = 0;
    for (const auto& t : trajectories) n += t.num_transitions();
    return n;
  }
};

// Reports every invariant violation; never throws. An empty result means the
// trajectory is well formed.
std::vector<std::string> validate_trajectory(const Trajectory& traj);

std::vector<std::string> validate_dataset(const Dataset& data);

}  // namespace ope
