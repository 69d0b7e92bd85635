#pragma once

// Constructive approximation of a martingale coupling when its marginals are
// perturbed. Given pi in Pi_M(mu_bar, nu) and nearby marginals (mu_bar', nu')
// with proj_x mu_bar' <=cx nu', the pipeline builds pi' in Pi_M(mu_bar', nu')
// that stays close to pi in adapted Wasserstein distance:
//
//   decompose (mu, nu) into irreducible components
//   -> split (mu_bar', nu') into matching pieces       (split_marginals)
//   -> per component, redistribute nu' among the cells  (approximate_pairs)
//   -> per component, fit kernels to the original ones   (anchored LP)
//
// A cell is one atom (x, u) of the first marginal of pi.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mot/couplings.hpp"
#include "mot/measures.hpp"

namespace mot {

// Failure inside one pipeline stage; stage() is "split", "pairs", "fit" or
// "rearrange".
class ApproximationError : public std::runtime_error {
 public:
  ApproximationError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Raised when the rearrangement cost exceeds twice the W1 distance.
class RearrangementBoundError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MarginalPiece {
  // Closure of the irreducible component; left == right for the stationary piece.
  double left = 0.0;
  double right = 0.0;
  // Rows of the original coupling assigned to this piece.
  std::vector<std::size_t> rows;
  // Part of mu_bar' carried by each row under the anchor plan.
  std::vector<LiftedMeasure> cells;
  LiftedMeasure mu_bar;
  DiscreteMeasure nu;
};

struct MarginalSplit {
  std::vector<MarginalPiece> pieces;
  // Rows whose kernel is the Dirac at x, with their share of (mu_bar', nu').
  MarginalPiece stationary;
  // W1-optimal plan from the rows of pi to the atoms of mu_bar' under the
  // ground cost |dx| + |du|.
  TransportPlan anchor;
  // Martingale coupling of (mu_bar', nu') with least int |y - x| whose
  // kernels produce the nu' pieces.
  DiscreteCoupling feasible;
};

// Pieces sum to mu_bar' and nu' and each piece is in convex order. Throws
// ConvexOrderError when proj_x mu_bar' is not dominated by nu' and
// MeasureError when pi is not a martingale coupling.
MarginalSplit split_marginals(const DiscreteCoupling& pi, const LiftedMeasure& mu_bar_new,
                              const DiscreteMeasure& nu_new);

struct Rearrangement {
  DiscreteCoupling coupling;
  double cost = 0.0;   // int |y - x| d chi
  double bound = 0.0;  // 2 W1(theta, nu)
};

// Martingale coupling chi of (theta, nu) with least int |y - x|. The bound
// cost <= 2 W1(theta, nu) is checked on every call; a violation is counted
// and raised as RearrangementBoundError.
Rearrangement min_cost_martingale_rearrangement(const DiscreteMeasure& theta, const DiscreteMeasure& nu);

struct RearrangementStats {
  std::size_t calls = 0;
  std::size_t violations = 0;
  // Largest cost - bound seen (negative when every call had slack).
  double worst_excess = -1e300;
};

// Process-wide counters over all rearrangement calls.
RearrangementStats rearrangement_stats();
void reset_rearrangement_stats();

struct PairsDiagnostics {
  // Mixing weight that passed the order check, and every weight tried.
  double eps = 0.0;
  std::vector<double> eps_trace;
  // max(u_theta - u_nu') for each attempt; an attempt passes at <= 1e-9.
  std::vector<double> margin_trace;
  std::size_t retries = 0;
  // Window [a, b] inside the component used for the trim.
  std::size_t window = 0;
  double a = 0.0;
  double b = 0.0;
  // Sum over cells of W1(trimmed nu_j, nu_j).
  double trim_shift = 0.0;
  double rearrangement_cost = 0.0;
  double rearrangement_bound = 0.0;
};

struct PairsResult {
  std::vector<DiscreteMeasure> nu;
  PairsDiagnostics diagnostics;
};

// Splits nu_new into nu'_j with mu_new_j <=cx nu'_j, each close to nu_j.
// Inputs: cells (mu_j, nu_j) with sum mu_j <=cx sum nu_j irreducible on
// (left, right), perturbed first marginals mu_new_j of the same masses, and
// nu_new dominating sum mu_new_j. Each nu_j is first trimmed to a window
// [a, b] of the component, the smallest dyadic shrink moving every nu_j by
// less than eps/4 in W1 (or the given window index when window > 0). Then
//   nu~_j = (1 - eps) J(mu_new_j, trimmed nu_j) + eps mu_new_j
// is checked for sum nu~_j <=cx nu_new; on failure eps <- (1 + eps) / 2 up to
// max_retries times, then eps = 1 which always passes. Finally sum nu~_j is
// rearranged onto nu_new and each nu~_j is pushed through that coupling.
PairsResult approximate_pairs(const std::vector<DiscreteMeasure>& mu, const std::vector<DiscreteMeasure>& nu,
                              const std::vector<DiscreteMeasure>& mu_new, const DiscreteMeasure& nu_new, double left,
                              double right, double eps, std::size_t window = 0, std::size_t max_retries = 5);

struct ApproximationOptions {
  double eps = 0.05;
  // Fixed window index for every component; 0 chooses it from eps.
  std::size_t window = 0;
  std::size_t max_retries = 5;
  // When positive, pi is first replaced by simplify_coupling(pi, simplify_eps).
  double simplify_eps = 0.0;
};

struct PieceReport {
  double left = 0.0;
  double right = 0.0;
  std::size_t cells = 0;
  PairsDiagnostics pairs;
  // Optimal value of the anchored LP: sum over cells j and atoms k of
  // gamma(j, k) W1(new kernel at k, original kernel of j).
  double fit_cost = 0.0;
};

struct ApproximationResult {
  DiscreteCoupling coupling;
  bool identity = false;
  double aw1 = 0.0;
  // Anchor transport cost plus every fit cost; an upper bound for aw1.
  double aw1_bound = 0.0;
  // Total variation between requested and produced marginals.
  double first_marginal_error = 0.0;
  double second_marginal_error = 0.0;
  std::vector<PieceReport> pieces;
  double stationary_fit_cost = 0.0;
};

ApproximationResult approximate_coupling(const DiscreteCoupling& pi, const LiftedMeasure& mu_bar_new,
                                         const DiscreteMeasure& nu_new, const ApproximationOptions& opts = {});

}  // namespace mot
