#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mot {

// Atoms closer than this are treated as one point.
inline constexpr double kAtomMergeTol = 1e-12;

class MeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finitely supported nonnegative measure on the real line.
// Atoms are strictly increasing and every stored weight is positive.
// The empty measure is the zero measure.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  // Accepts unsorted atoms; merges near-duplicates and drops zero weights.
  // Negative or non-finite input is rejected.
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteMeasure dirac(double x, double mass = 1.0);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double mass() const { return mass_; }
  double atom(std::size_t i) const { return atoms_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  DiscreteMeasure scaled(double factor) const;
  DiscreteMeasure normalized() const;
  // Weight at x (within the merge tolerance), zero if x is not an atom.
  double weight_at(double x) const;
  // Restriction to the closed interval [lo, hi].
  DiscreteMeasure restricted(double lo, double hi) const;
  DiscreteMeasure restricted_open(double lo, double hi) const;
  double min_atom() const;
  double max_atom() const;

  friend DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b);

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  double mass_ = 0.0;
};

// Atoms (x, u) on R x U where u is a real information label.
struct LiftedAtom {
  double x;
  double u;
};

class LiftedMeasure {
 public:
  LiftedMeasure() = default;
  LiftedMeasure(std::vector<LiftedAtom> atoms, std::vector<double> weights);

  static LiftedMeasure with_label(const DiscreteMeasure& m, double u);

  const std::vector<LiftedAtom>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double mass() const { return mass_; }

  DiscreteMeasure projection_x() const;
  DiscreteMeasure projection_u() const;
  LiftedMeasure scaled(double factor) const;

 private:
  std::vector<LiftedAtom> atoms_;
  std::vector<double> weights_;
  double mass_ = 0.0;
};

// Generalized inverse of the cumulative distribution function.
// quantile(t) = inf{x : F(x) >= t} for t in (0, mass].
class QuantileView {
 public:
  explicit QuantileView(const DiscreteMeasure& m);
  double quantile(double t) const;
  double cdf(double x) const;
  const std::vector<double>& cumulative() const { return cumulative_; }

 private:
  std::vector<double> atoms_;
  std::vector<double> cumulative_;
};

double mean(const DiscreteMeasure& m);

// Line Wasserstein distance between measures of equal mass. For mass other
// than one this is mass^(1/p) times the distance between the normalized laws.
double wasserstein_line(const DiscreteMeasure& a, const DiscreteMeasure& b, double p = 1.0);

struct ConvexOrderCheck {
  bool ordered = false;
  // A point where the potential of the first measure exceeds the second one.
  // Absent when the masses differ.
  std::optional<double> witness;
  // sup over the real line (including the limits at +/- infinity) of u_a - u_b.
  double max_excess = 0.0;
};

ConvexOrderCheck check_convex_order(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                    double tol = 1e-9);

// Conditional means of the quantile function over k equal-mass cells.
DiscreteMeasure quantile_discretize(const DiscreteMeasure& m, std::size_t k);

// Half of the l1 distance between weight vectors.
double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b);
double total_variation(const LiftedMeasure& a, const LiftedMeasure& b);

}  // namespace mot
