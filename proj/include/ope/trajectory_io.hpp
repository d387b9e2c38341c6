#pragma once

#include <iosfwd>
#include <string>

#include "ope/trajectory.hpp"

namespace ope {

// Canonical trajectory CSV: header line "d,m", then one row per observation,
//   k, T_k, X_k, S_k[0..d-1], A_k, R(T_k)
// R(T_0) is blank; the final action may be blank. A row with k = 0 starts a
// new trajectory. Doubles are written with 17 significant digits so a
// write/read round trip reproduces every value bit for bit.
void write_dataset_csv(std::ostream& os, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

Dataset read_dataset_csv(std::istream& is);
Dataset read_dataset_csv(const std::string& path);

// Shortest-exact formatting used across all emitted CSV/JSON files.
std::string format_double(double v);

}  // namespace ope
