#pragma once

// Shared helpers for the test binaries: a seeded generator, random measure
// builders, and LP-based oracles written independently of the solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mot/lp.hpp"
#include "mot/measures.hpp"

namespace testsupport {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 gen_;
};

// Atoms on an integer grid, weights in multiples of 1/16 normalized to one.
inline mot::DiscreteMeasure random_grid_measure(Rng& rng, int max_atoms, int lo = -6, int hi = 6) {
  int n = rng.integer(1, max_atoms);
  std::vector<double> a, w;
  for (int i = 0; i < n; ++i) {
    a.push_back(rng.integer(lo, hi));
    w.push_back(rng.integer(1, 16));
  }
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return mot::DiscreteMeasure(a, w);
}

inline mot::DiscreteMeasure random_measure(Rng& rng, int max_atoms, double lo = -3, double hi = 3,
                                           double mass = 1.0) {
  int n = rng.integer(1, max_atoms);
  std::vector<double> a, w;
  for (int i = 0; i < n; ++i) {
    a.push_back(rng.uniform(lo, hi));
    w.push_back(rng.uniform(0.05, 1.0));
  }
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v *= mass / s;
  return mot::DiscreteMeasure(a, w);
}

// Mean-preserving spread: every atom is split by a random binary kernel.
inline mot::DiscreteMeasure random_spread(Rng& rng, const mot::DiscreteMeasure& m, double width = 2.0) {
  std::vector<double> a, w;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double x = m.atom(i);
    if (rng.uniform() < 0.25) {
      a.push_back(x);
      w.push_back(m.weight(i));
      continue;
    }
    double l = x - rng.integer(1, 4) * width / 4;
    double r = x + rng.integer(1, 4) * width / 4;
    a.push_back(l);
    w.push_back(m.weight(i) * (r - x) / (r - l));
    a.push_back(r);
    w.push_back(m.weight(i) * (x - l) / (r - l));
  }
  return mot::DiscreteMeasure(a, w);
}

// Optimal transport value between two equal-mass measures with cost |x-y|^p
// solved as a plain LP.
inline double ot_lp_value(const mot::DiscreteMeasure& a, const mot::DiscreteMeasure& b, double p = 1.0) {
  using namespace mot::lp;
  LinearProgram lp;
  const std::size_t n = a.size(), m = b.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) lp.add_variable(std::pow(std::abs(a.atom(i) - b.atom(j)), p));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> e;
    for (std::size_t j = 0; j < m; ++j) e.push_back({i * m + j, 1.0});
    lp.add_row(e, RowType::Equal, a.weight(i));
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<std::size_t, double>> e;
    for (std::size_t i = 0; i < n; ++i) e.push_back({i * m + j, 1.0});
    lp.add_row(e, RowType::Equal, b.weight(j));
  }
  auto sol = solve_lp(lp);
  return sol.objective;
}

// Non-emptiness of the set of martingale couplings, decided by an LP.
inline bool strassen_feasible(const mot::DiscreteMeasure& a, const mot::DiscreteMeasure& b) {
  using namespace mot::lp;
  LinearProgram lp;
  const std::size_t n = a.size(), m = b.size();
  for (std::size_t k = 0; k < n * m; ++k) lp.add_variable(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> e, mart;
    for (std::size_t j = 0; j < m; ++j) {
      e.push_back({i * m + j, 1.0});
      mart.push_back({i * m + j, b.atom(j) - a.atom(i)});
    }
    lp.add_row(e, RowType::Equal, a.weight(i));
    lp.add_row(mart, RowType::Equal, 0.0);
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<std::size_t, double>> e;
    for (std::size_t i = 0; i < n; ++i) e.push_back({i * m + j, 1.0});
    lp.add_row(e, RowType::Equal, b.weight(j));
  }
  return solve_lp(lp).optimal();
}

inline double potential_at(const mot::DiscreteMeasure& m, double y) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.weight(i) * std::abs(y - m.atom(i));
  return s;
}

inline double max_weight_diff(const mot::DiscreteMeasure& a, const mot::DiscreteMeasure& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.weight(i) - b.weight_at(a.atom(i))));
  for (std::size_t j = 0; j < b.size(); ++j) worst = std::max(worst, std::abs(b.weight(j) - a.weight_at(b.atom(j))));
  return worst;
}

}  // namespace testsupport
