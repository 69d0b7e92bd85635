#include <algorithm>
#include <cmath>
#include <random>

#include "mot/approximation.hpp"
#include "mot/couplings.hpp"
#include "mot/lp.hpp"

namespace mot {

namespace {

double powp(double d, double p) { return p == 1.0 ? std::abs(d) : std::pow(std::abs(d), p); }

// Pi_M(mu, nu) over variables pi(i, j) at index i * |nu| + j.
lp::LinearProgram martingale_polytope(const LiftedMeasure& mu, const DiscreteMeasure& nu) {
  const std::size_t n = mu.size(), m = nu.size();
  lp::LinearProgram p;
  for (std::size_t k = 0; k < n * m; ++k) p.add_variable(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> mass, mart;
    for (std::size_t j = 0; j < m; ++j) {
      mass.push_back({i * m + j, 1.0});
      mart.push_back({i * m + j, nu.atom(j) - mu.atoms()[i].x});
    }
    p.add_row(mass, lp::RowType::Equal, mu.weights()[i]);
    p.add_row(mart, lp::RowType::Equal, 0.0);
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    std::vector<std::pair<std::size_t, double>> col;
    for (std::size_t i = 0; i < n; ++i) col.push_back({i * m + j, 1.0});
    p.add_row(col, lp::RowType::Equal, nu.weight(j) * mu.mass() / nu.mass());
  }
  return p;
}

DiscreteCoupling coupling_of(const std::vector<double>& v, const LiftedMeasure& mu, const DiscreteMeasure& nu) {
  const std::size_t m = nu.size();
  std::vector<std::vector<double>> rows(mu.size(), std::vector<double>(m));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) rows[i][j] = std::max(0.0, v[i * m + j]);
  }
  return DiscreteCoupling(mu, nu.atoms(), rows);
}

// W_p from the joint law `a` to the closest element of Pi_M(mu, nu): one LP
// over the target coupling q and a transport plan from a to q.
double distance_to_polytope(const std::vector<JointAtom>& a, const LiftedMeasure& mu, const DiscreteMeasure& nu,
                            double p) {
  const std::size_t n = mu.size(), m = nu.size(), cells = n * m;
  lp::LinearProgram prog = martingale_polytope(mu, nu);
  const std::size_t tau0 = prog.num_variables();
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t c = 0; c < cells; ++c) {
      const auto& at = mu.atoms()[c / m];
      prog.add_variable(powp(a[s].x - at.x, p) + powp(a[s].u - at.u, p) + powp(a[s].y - nu.atom(c % m), p));
    }
  }
  // Source rows; the last one follows from the others and the target rows.
  for (std::size_t s = 0; s + 1 < a.size(); ++s) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t c = 0; c < cells; ++c) row.push_back({tau0 + s * cells + c, 1.0});
    prog.add_row(row, lp::RowType::Equal, a[s].w);
  }
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<std::pair<std::size_t, double>> row{{c, -1.0}};
    for (std::size_t s = 0; s < a.size(); ++s) row.push_back({tau0 + s * cells + c, 1.0});
    prog.add_row(row, lp::RowType::Equal, 0.0);
  }
  lp::LPSolution sol = lp::solve_lp(prog);
  if (!sol.optimal()) throw lp::LPError(std::string("hausdorff distance LP: ") + lp::to_string(sol.status));
  return std::pow(std::max(0.0, sol.objective), 1.0 / p);
}

std::vector<std::vector<double>> sampled_vertices(const lp::LinearProgram& poly, std::size_t samples,
                                                  std::mt19937_64& gen) {
  std::vector<std::vector<double>> out;
  for (std::size_t s = 0; s < samples; ++s) {
    lp::LinearProgram p = poly;
    for (std::size_t j = 0; j < p.num_variables(); ++j) {
      p.set_cost(j, static_cast<double>(gen() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
    }
    lp::LPSolution sol = lp::solve_lp(p);
    if (!sol.optimal()) throw lp::LPError(std::string("vertex sampling: ") + lp::to_string(sol.status));
    bool seen = false;
    for (const auto& v : out) {
      double d = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) d = std::max(d, std::abs(v[j] - sol.primal[j]));
      if (d < 1e-9) seen = true;
    }
    if (!seen) out.push_back(sol.primal);
  }
  return out;
}

}  // namespace

HausdorffEstimate hausdorff_mot(const LiftedMeasure& mu, const DiscreteMeasure& nu, const LiftedMeasure& mu2,
                                const DiscreteMeasure& nu2, double p, std::size_t samples, std::uint64_t seed) {
  if (!(p >= 1.0)) throw MeasureError("hausdorff_mot: p must be at least 1");
  if (std::abs(mu.mass() - mu2.mass()) > 1e-9 * std::max(1.0, mu.mass()))
    throw MeasureError("hausdorff_mot: pairs have different masses");
  const lp::LinearProgram poly1 = martingale_polytope(mu, nu);
  const lp::LinearProgram poly2 = martingale_polytope(mu2, nu2);

  HausdorffEstimate out;
  std::vector<std::vector<double>> v1, v2;
  bool exact = true;
  try {
    v1 = lp::enumerate_vertices(poly1);
    v2 = lp::enumerate_vertices(poly2);
  } catch (const lp::LPError&) {
    exact = false;
  }
  if (exact && (v1.empty() || v2.empty())) throw MeasureError("hausdorff_mot: empty set of martingale couplings");
  if (!exact) {
    std::mt19937_64 gen(seed);
    v1 = sampled_vertices(poly1, samples, gen);
    v2 = sampled_vertices(poly2, samples, gen);
  }
  out.vertices_first = v1.size();
  out.vertices_second = v2.size();

  // sup over a polytope of the (convex) distance to the other one sits at a
  // vertex, so the maximum over vertices is the exact one-sided distance.
  double lower = 0.0;
  for (const auto& v : v1) lower = std::max(lower, distance_to_polytope(coupling_of(v, mu, nu).joint(), mu2, nu2, p));
  for (const auto& v : v2) lower = std::max(lower, distance_to_polytope(coupling_of(v, mu2, nu2).joint(), mu, nu, p));
  out.lower = lower;
  out.exact = exact;
  if (exact) {
    out.upper = lower;
    return out;
  }

  // Each sampled vertex is mapped into the other set by the approximation
  // pipeline; the resulting distances bound the one-sided distances of the
  // sampled vertices from above.
  const double eps = std::clamp(wasserstein_lifted(mu, mu2) + wasserstein_line(nu, nu2), 1e-3, 1.0);
  ApproximationOptions opts;
  opts.eps = eps;
  double upper = lower;
  for (const auto& v : v1) {
    DiscreteCoupling c = coupling_of(v, mu, nu);
    upper = std::max(upper, wasserstein_coupling(c, approximate_coupling(c, mu2, nu2, opts).coupling, p));
  }
  for (const auto& v : v2) {
    DiscreteCoupling c = coupling_of(v, mu2, nu2);
    upper = std::max(upper, wasserstein_coupling(c, approximate_coupling(c, mu, nu, opts).coupling, p));
  }
  out.upper = upper;
  return out;
}

}  // namespace mot
