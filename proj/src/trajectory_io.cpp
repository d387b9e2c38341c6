#include "ope/trajectory_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ope {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << data.d << "," << data.m << "\n";
  for (const auto& traj : data.trajectories) {
    const int K = traj.num_transitions();
    for (int k = 0; k <= K; ++k) {
      os << k << "," << format_double(traj.times[k]) << "," << format_double(traj.gap_times[k]);
      for (int j = 0; j < traj.d; ++j) os << "," << format_double(traj.state(k)[j]);
      os << ",";
      if (k < static_cast<int>(traj.actions.size())) os << traj.actions[k];
      os << ",";
      if (k > 0) os << format_double(traj.rewards[k - 1]);
      os << "\n";
    }
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_dataset_csv(os, data);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error(std::string("trajectory csv: bad ") + what + " value '" + s + "'");
  return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory csv: empty file");
  auto header = split_csv(line);
  if (header.size() != 2) throw std::runtime_error("trajectory csv: header must be 'd,m'");
  Dataset data;
  data.d = static_cast<int>(parse_double(header[0], "d"));
  data.m = static_cast<int>(parse_double(header[1], "m"));
  if (data.d < 1 || data.m < 1) throw std::runtime_error("trajectory csv: bad header values");

  Trajectory cur;
  cur.d = data.d;
  bool open = false;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv(line);
    const size_t expect = 5 + static_cast<size_t>(data.d);
    if (f.size() != expect)
      throw std::runtime_error("trajectory csv: line " + std::to_string(lineno) + " has " +
                               std::to_string(f.size()) + " fields, expected " +
                               std::to_string(expect));
    const int k = static_cast<int>(parse_double(f[0], "k"));
    if (k == 0) {
      if (open) data.trajectories.push_back(std::move(cur));
      cur = Trajectory{};
      cur.d = data.d;
      open = true;
    } else if (!open || k != cur.num_obs()) {
      throw std::runtime_error("trajectory csv: unexpected index at line " + std::to_string(lineno));
    }
    cur.times.push_back(parse_double(f[1], "T"));
    cur.gap_times.push_back(parse_double(f[2], "X"));
    for (int j = 0; j < data.d; ++j) cur.states.push_back(parse_double(f[3 + j], "S"));
    const std::string& af = f[3 + data.d];
    if (!af.empty()) cur.actions.push_back(static_cast<int>(parse_double(af, "A")));
    const std::string& rf = f[4 + data.d];
    if (k == 0) {
      if (!rf.empty())
        throw std::runtime_error("trajectory csv: R(T_0) must be blank, line " +
                                 std::to_string(lineno));
    } else {
      cur.rewards.push_back(parse_double(rf, "R"));
    }
  }
  if (open) data.trajectories.push_back(std::move(cur));
  if (data.trajectories.empty()) throw std::runtime_error("trajectory csv: no trajectories");
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_dataset_csv(is);
}

}  // namespace ope
