#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "mot/couplings.hpp"
#include "mot/lp.hpp"
#include "mot/measures.hpp"

namespace mot {

// Cost c(x, u, y) either given by a callable or tabulated on a finite grid.
class CostSpec {
 public:
  static CostSpec callable(std::function<double(double, double, double)> f, std::string tag = "callable");
  // Pointwise values c(x, u, y); lookups off the table throw.
  static CostSpec tabulated(const std::vector<JointAtom>& table);
  // Cost depending on (x, y) only.
  static CostSpec of_xy(std::function<double(double, double)> f, std::string tag = "callable");

  double operator()(double x, double u, double y) const;
  const std::string& tag() const { return tag_; }

 private:
  std::function<double(double, double, double)> f_;
  std::string tag_;
};

struct MotResult {
  double value = 0.0;
  DiscreteCoupling coupling;
  bool is_vertex = false;
  std::size_t iterations = 0;
};

// Martingale transport LP between mu and nu. Throws ConvexOrderError when
// mu is not dominated by nu.
MotResult solve_mot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                    lp::Sense sense = lp::Sense::Minimize);

// Same over couplings of (x, u, y) whose first marginal is mu_bar and whose
// kernels have mean x.
MotResult solve_extended_mot(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu, const CostSpec& cost,
                             lp::Sense sense = lp::Sense::Minimize);

// C(x, u, rho) convex in rho, with rho represented by weights on a y-grid.
// `gradient` returns dC/d rho_j at every grid point.
struct ConvexCost {
  std::function<double(double x, double u, const std::vector<double>& ys, const std::vector<double>& rho)> value;
  std::function<std::vector<double>(double x, double u, const std::vector<double>& ys, const std::vector<double>& rho)>
      gradient;
};

struct FrankWolfeOptions {
  double tol = 1e-6;
  std::size_t max_iterations = 500;
  // Relative mismatch tolerated between gradient and finite differences.
  double gradient_check_tol = 1e-4;
  bool away_steps = true;
};

struct FrankWolfeResult {
  double value = 0.0;
  DiscreteCoupling coupling;
  double fw_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

class GradientCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Minimizes sum_i w_i C(x_i, u_i, kernel_i) over extended martingale
// couplings. The linear oracle is solve_extended_mot on the gradient.
FrankWolfeResult solve_wmot_fw(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu, const ConvexCost& cost,
                               const FrankWolfeOptions& opts = {});

struct AmericanResult {
  double value = 0.0;
  // Mass stopped at time one and mass continued, per atom of mu.
  std::vector<double> exercise_mass;
  std::vector<double> continue_mass;
  // The branch coupling with label 0 for exercise and 1 for continuation.
  DiscreteCoupling coupling;
};

// Robust price of the option paying phi1(x) when exercised at time one and
// phi2(x, y) otherwise. phi1 is indexed by the atoms of mu.
AmericanResult price_american(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const std::vector<double>& phi1,
                              const std::function<double(double, double)>& phi2);

// l_x(y) = (2 / tau) ln(x / y).
double vix_log_payoff(double x, double y, double tau);

struct VixDualResult {
  double d_lo = 0.0;
  double d_hi = 0.0;
  // Bin edges 0 = e_0 < ... < e_bins.
  std::vector<double> edges;
  // Optimal coupling of the lower problem with the bin's lower edge as label.
  DiscreteCoupling coupling;
};

// Interval-binned relaxation of the constrained martingale problem. Both
// bounds bracket the discrete infimum.
VixDualResult vix_dual_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tau, std::size_t bins);

struct VixPrimalResult {
  double p_value = 0.0;
  std::vector<double> phi;  // per atom of mu
  std::vector<double> psi;  // per atom of nu
  // Indexed [atom of mu][bin].
  std::vector<std::vector<double>> delta_s;
  std::vector<std::vector<double>> delta_l;
  // Multipliers of the bin-width slack; zero when the upper edges never bind.
  std::vector<std::vector<double>> slack;
};

// Subreplication LP over the u-grid (bin edges, ascending, starting at 0).
// With the edges of vix_dual_lp it is the exact LP dual of the lower problem.
VixPrimalResult vix_primal_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tau,
                              const std::vector<double>& u_grid);

// Lifted MOT with cost (1 - u) sqrt(1 + y^2); labels must lie in [0, 1].
MotResult shadow_coupling(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu);

struct Barrier {
  double x = 0.0;
  double u = 0.0;
  double weight = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
};

struct BarrierExtraction {
  std::vector<Barrier> maps;
  std::size_t excluded_count = 0;
  double excluded_mass = 0.0;
};

// Kernel weights at or below this are ignored when reading off supports.
inline constexpr double kSupportThreshold = 1e-10;

// Reads (T1, T2) off kernels with at most two support points.
BarrierExtraction extract_barriers(const DiscreteCoupling& c);

// Mass of barrier entries that break T1(x,u) <= T1(x,v) <= x <= T2(x,v) <= T2(x,u)
// for u < v at the same x.
double barrier_monotonicity_violation(const BarrierExtraction& b, double tol = 1e-9);

// Mass of (x', y') in the (x, y) projection with y' strictly between two
// support points of a kernel at some x < x'.
double left_monotone_violation(const DiscreteCoupling& c, double tol = 1e-9);

enum class Copula { HoeffdingFrechet, Independence, Tabulated };

// Lift of mu with labels (i - 1/2) / m. For the tabulated copula, table[i][k]
// is the mass of label cell i and quantile cell k; rows and columns must sum
// to 1/m.
LiftedMeasure copula_lift(const DiscreteMeasure& mu, Copula copula, std::size_t m,
                          const std::vector<std::vector<double>>& table = {});

}  // namespace mot
