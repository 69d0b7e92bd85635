#pragma once

#include <optional>
#include <vector>

#include "mot/measures.hpp"

namespace mot {

// Convex piecewise-linear function given by its values at sorted breakpoints
// and the slopes of the two unbounded pieces.
class PiecewiseLinearConvex {
 public:
  PiecewiseLinearConvex() = default;
  PiecewiseLinearConvex(std::vector<double> breakpoints, std::vector<double> values, double left_slope,
                        double right_slope);

  double operator()(double y) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  double left_slope() const { return left_slope_; }
  double right_slope() const { return right_slope_; }
  // Slopes of every piece from left to right (size = breakpoints + 1).
  std::vector<double> slopes() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double left_slope_ = 0.0;
  double right_slope_ = 0.0;
};

// u_m(y) = sum_i w_i |y - x_i|.
PiecewiseLinearConvex potential(const DiscreteMeasure& m);

// Measure whose potential is the given function: atoms at kinks with weight
// equal to half the slope jump.
DiscreteMeasure measure_from_potential(const PiecewiseLinearConvex& f, double weight_floor = 0.0);

class ConvexOrderError : public MeasureError {
 public:
  ConvexOrderError(const std::string& what, std::optional<double> witness)
      : MeasureError(what), witness_(witness) {}
  std::optional<double> witness() const { return witness_; }

 private:
  std::optional<double> witness_;
};

struct IrreducibleComponent {
  double left = 0.0;
  double right = 0.0;
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

struct IrreducibleDecomposition {
  std::vector<IrreducibleComponent> components;
  DiscreteMeasure stationary;
  // Largest absolute mismatch when reassembling mu and nu from the pieces.
  double reassembly_error = 0.0;
};

// Components are the maximal open intervals where u_mu < u_nu. Throws
// ConvexOrderError when mu is not dominated by nu.
IrreducibleDecomposition irreducible_decomposition(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                   double tol = 1e-10);

// Measure whose potential is the lower convex envelope of min(u_rho, u_q).
DiscreteMeasure convex_min(const DiscreteMeasure& rho, const DiscreteMeasure& q);

// Supports of both measures plus `refine` equally spaced points on their hull.
std::vector<double> default_projection_grid(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            std::size_t refine = 64);

// Grid-restricted projection of nu onto {eta : mu <=cx eta}: minimizes
// int |F_eta - F_nu| over eta supported on the grid, which must contain both
// supports. Returns a vertex optimizer of that LP.
DiscreteMeasure convex_order_projection(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const std::vector<double>& grid);
// Same as wasserstein_projection.
DiscreteMeasure convex_order_projection(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Exact projection on the whole line. With D(t) the integral over [0, t] of
// q_mu - q_nu (quantile functions), the result has quantile function
// q_nu + (conv D)', where conv D is the convex minorant of D. It minimizes W_p
// to nu for every p >= 1 over measures dominating mu, and the means of mu and
// nu may differ.
DiscreteMeasure wasserstein_projection(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// The law on {l, r} with mean x, or the Dirac at x when l = x or r = x.
DiscreteMeasure binary_kernel(double x, double l, double r);

// W1 between B(x, yk, zk) and B(x, y, z) in closed form.
double w1_binary(double x, double y, double z, double yk, double zk);

}  // namespace mot
