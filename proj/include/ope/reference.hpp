#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "ope/rng.hpp"

namespace ope {

// Reference distribution over initial (state, gap time) pairs: either a
// uniform density on an axis-aligned box or a point mass.
struct ReferenceDistribution {
  enum class Kind { UniformBox, PointMass };

  Kind kind = Kind::UniformBox;
  std::vector<double> s_lo, s_hi;  // length d
  double x_lo = 0.0, x_hi = 1.0;
  std::vector<double> atom_s;
  double atom_x = 1.0;

  int d() const {
    return kind == Kind::UniformBox ? static_cast<int>(s_lo.size())
                                    : static_cast<int>(atom_s.size());
  }

  static ReferenceDistribution uniform_box(std::vector<double> lo, std::vector<double> hi,
                                           double xlo, double xhi) {
    ReferenceDistribution g;
    g.kind = Kind::UniformBox;
    g.s_lo = std::move(lo);
    g.s_hi = std::move(hi);
    g.x_lo = xlo;
    g.x_hi = xhi;
    g.check();
    return g;
  }

  static ReferenceDistribution uniform_box1(double slo, double shi, double xlo, double xhi) {
    return uniform_box({slo}, {shi}, xlo, xhi);
  }

  static ReferenceDistribution point_mass(std::vector<double> s, double x) {
    ReferenceDistribution g;
    g.kind = Kind::PointMass;
    g.atom_s = std::move(s);
    g.atom_x = x;
    g.check();
    return g;
  }

  void check() const {
    if (kind == Kind::UniformBox) {
      if (s_lo.size() != s_hi.size() || s_lo.empty())
        throw std::invalid_argument("reference box: bad state bounds");
      for (size_t j = 0; j < s_lo.size(); ++j)
        if (!(s_lo[j] < s_hi[j])) throw std::invalid_argument("reference box: bounds not ordered");
      if (!(x_lo < x_hi)) throw std::invalid_argument("reference box: gap bounds not ordered");
    } else {
      if (atom_s.empty()) throw std::invalid_argument("reference atom: empty state");
      if (!(atom_x > 0.0)) throw std::invalid_argument("reference atom: gap time <= 0");
    }
  }
};

inline std::pair<std::vector<double>, double> sample_reference(const ReferenceDistribution& g,
                                                               Rng& rng) {
  if (g.kind == ReferenceDistribution::Kind::PointMass) return {g.atom_s, g.atom_x};
  std::vector<double> s(g.s_lo.size());
  for (size_t j = 0; j < s.size(); ++j) s[j] = rng.uniform(g.s_lo[j], g.s_hi[j]);
  return {std::move(s), rng.uniform(g.x_lo, g.x_hi)};
}

}  // namespace ope
