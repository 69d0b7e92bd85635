#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mot/measures.hpp"

namespace mot {

// One cell of a joint (x, u, y) weight table.
struct JointAtom {
  double x;
  double u;
  double y;
  double w;
};

// Extended coupling on R x U x R stored as a first marginal on (x, u) and one
// probability kernel per first-marginal atom over a shared y-support.
class DiscreteCoupling {
 public:
  DiscreteCoupling() = default;
  // Row i of `kernels` gives the weights of the kernel at first.atoms()[i] on
  // y_support. Rows must be nonnegative with positive sum and are rescaled to
  // sum to one. The y-support is sorted and deduplicated.
  DiscreteCoupling(LiftedMeasure first, std::vector<double> y_support, std::vector<std::vector<double>> kernels);

  const LiftedMeasure& first_marginal() const { return first_; }
  const std::vector<double>& y_support() const { return y_; }
  const std::vector<std::vector<double>>& kernel_table() const { return k_; }
  const DiscreteMeasure& second_marginal() const { return second_; }
  std::size_t size() const { return first_.size(); }
  double mass() const { return first_.mass(); }

  DiscreteMeasure kernel(std::size_t i) const;
  // Nonzero cells of the joint table, ordered by (x, u, y).
  std::vector<JointAtom> joint() const;
  // Integral of f(x, u, y).
  double integrate(const std::function<double(double, double, double)>& f) const;
  // Same coupling with every label replaced by map(x, u).
  DiscreteCoupling relabeled(const std::function<double(double, double)>& map) const;

 private:
  LiftedMeasure first_;
  std::vector<double> y_;
  std::vector<std::vector<double>> k_;
  DiscreteMeasure second_;
};

// Builds the coupling from a joint table. Rows (x, u) with zero total mass are
// dropped and counted in *dropped_rows when given.
DiscreteCoupling disintegrate(const std::vector<JointAtom>& joint, std::size_t* dropped_rows = nullptr);

// Image of a coupling under (x, u, y) -> (x, u, kernel at (x, u)). Identical
// kernels share one id.
struct LiftedKernelLaw {
  struct Atom {
    double x;
    double u;
    std::size_t kernel;
  };
  std::vector<Atom> atoms;
  std::vector<double> weights;
  std::vector<DiscreteMeasure> kernels;
};

LiftedKernelLaw lift(const DiscreteCoupling& c);
// Joint table of the law (x, u, y) obtained by sampling y from the kernel.
std::vector<JointAtom> reassemble(const LiftedKernelLaw& law);

struct MartingaleCheck {
  bool ok = false;
  double max_deviation = 0.0;
};

// max over first-marginal atoms of |mean(kernel) - x|.
MartingaleCheck check_martingale(const DiscreteCoupling& c, double tol = 1e-9);

// Optimal transport between weight vectors a and b with a cost callback.
// Masses must agree up to rounding.
struct TransportPlan {
  double cost = 0.0;
  std::vector<std::vector<double>> plan;
};
TransportPlan optimal_transport(const std::vector<double>& a, const std::vector<double>& b,
                                const std::function<double(std::size_t, std::size_t)>& cost);

// Flat W_p between the joint laws with ground cost
// |x1 - x2|^p + |u1 - u2|^p + |y1 - y2|^p.
double wasserstein_coupling(const DiscreteCoupling& a, const DiscreteCoupling& b, double p = 1.0);

// W_p between lifted measures with ground cost |x1 - x2|^p + |u1 - u2|^p.
double wasserstein_lifted(const LiftedMeasure& a, const LiftedMeasure& b, double p = 1.0);

// Adapted W_p: outer transport between first marginals with cost
// |x1 - x2|^p + |u1 - u2|^p + W_p(kernel1, kernel2)^p.
double adapted_wasserstein(const DiscreteCoupling& a, const DiscreteCoupling& b, double p = 1.0);

struct SimpleCoupling {
  DiscreteCoupling coupling;
  // Cell index of every first-marginal atom and the label range of each cell.
  std::vector<std::size_t> cell;
  std::vector<std::pair<double, double>> cell_range;
  // Sum over atoms of weight times W1(original kernel, cell mixture).
  double kernel_spread = 0.0;
  // eps + 2 * kernel_spread.
  double aw_bound = 0.0;
};

// Clusters sorted labels greedily into cells of diameter at most eps and
// replaces, for each x and cell, every kernel by the cell mixture. Labels and
// the x-marginal are unchanged.
SimpleCoupling simplify_coupling(const DiscreteCoupling& c, double eps);

struct HausdorffEstimate {
  double lower = 0.0;
  double upper = 0.0;
  // True when both polytopes were enumerated and lower == upper is exact.
  bool exact = false;
  std::size_t vertices_first = 0;
  std::size_t vertices_second = 0;
};

// Hausdorff distance in W_p between the martingale coupling sets of two pairs
// of marginals. Falls back to vertices sampled with random objectives (lower
// bound) and the approximation map (estimate of the upper value) when the
// vertex guard is exceeded.
HausdorffEstimate hausdorff_mot(const LiftedMeasure& mu, const DiscreteMeasure& nu, const LiftedMeasure& mu2,
                                const DiscreteMeasure& nu2, double p = 1.0, std::size_t samples = 16,
                                std::uint64_t seed = 1);

}  // namespace mot
