#include "mot/convex_order.hpp"

#include <algorithm>
#include <cmath>

#include "mot/lp.hpp"

namespace mot {

namespace {

struct Point {
  double t;
  double v;
};

// Lower convex hull of points sorted by t (monotone chain).
std::vector<Point> lower_hull(const std::vector<Point>& pts) {
  std::vector<Point> h;
  for (const Point& p : pts) {
    while (h.size() >= 2) {
      const Point& a = h[h.size() - 2];
      const Point& b = h.back();
      // Keep b only if it lies strictly below the chord a-p.
      double cross = (b.t - a.t) * (p.v - a.v) - (b.v - a.v) * (p.t - a.t);
      double scale = (std::abs(b.t - a.t) + std::abs(p.t - a.t)) *
                     (std::abs(p.v - a.v) + std::abs(b.v - a.v) + 1e-300);
      if (cross <= 1e-14 * scale) {
        h.pop_back();
      } else {
        break;
      }
    }
    h.push_back(p);
  }
  return h;
}

// Sorted union of the two vectors with near-duplicates merged.
std::vector<double> merged_points(std::vector<double> a, const std::vector<double>& b, double tol) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  std::vector<double> out;
  for (double v : a) {
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  }
  return out;
}

// Adds the crossing points of f and g between consecutive abscissae and
// returns min(f, g) sampled on the refined set.
template <class F, class G>
std::vector<Point> min_with_crossings(const std::vector<double>& ts, F f, G g) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    double fk = f(ts[k]), gk = g(ts[k]);
    if (k > 0) {
      double fp = f(ts[k - 1]), gp = g(ts[k - 1]);
      double d0 = fp - gp, d1 = fk - gk;
      if ((d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0)) {
        double s = d0 / (d0 - d1);
        double t = ts[k - 1] + s * (ts[k] - ts[k - 1]);
        double v = fp + s * (fk - fp);
        pts.push_back({t, v});
      }
    }
    pts.push_back({ts[k], std::min(fk, gk)});
  }
  return pts;
}

void require_same_mass_and_mean(const DiscreteMeasure& a, const DiscreteMeasure& b, const char* who) {
  double scale = std::max({1.0, a.mass(), b.mass()});
  if (std::abs(a.mass() - b.mass()) > 1e-12 * scale) throw MeasureError(std::string(who) + ": mass mismatch");
  if (a.empty()) return;
  double span = std::max(a.max_atom(), b.max_atom()) - std::min(a.min_atom(), b.min_atom());
  if (std::abs(mean(a) - mean(b)) > 1e-9 * (1.0 + span)) throw MeasureError(std::string(who) + ": mean mismatch");
}

}  // namespace

PiecewiseLinearConvex::PiecewiseLinearConvex(std::vector<double> breakpoints, std::vector<double> values,
                                             double left_slope, double right_slope)
    : breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      left_slope_(left_slope),
      right_slope_(right_slope) {
  if (breakpoints_.size() != values_.size()) throw MeasureError("breakpoint/value size mismatch");
}

double PiecewiseLinearConvex::operator()(double y) const {
  if (breakpoints_.empty()) return 0.0;
  if (y <= breakpoints_.front()) return values_.front() + left_slope_ * (y - breakpoints_.front());
  if (y >= breakpoints_.back()) return values_.back() + right_slope_ * (y - breakpoints_.back());
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y);
  std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin());
  double t0 = breakpoints_[k - 1], t1 = breakpoints_[k];
  double s = (y - t0) / (t1 - t0);
  return values_[k - 1] + s * (values_[k] - values_[k - 1]);
}

std::vector<double> PiecewiseLinearConvex::slopes() const {
  std::vector<double> s;
  s.push_back(left_slope_);
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    s.push_back((values_[k] - values_[k - 1]) / (breakpoints_[k] - breakpoints_[k - 1]));
  }
  s.push_back(right_slope_);
  return s;
}

PiecewiseLinearConvex potential(const DiscreteMeasure& m) {
  std::vector<double> values(m.size());
  // Prefix sums give every value in linear time:
  // u(x_k) = x_k (W_<k - W_>k) - (S_<k - S_>k).
  double w_total = m.mass(), s_total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s_total += m.atom(i) * m.weight(i);
  double w_left = 0.0, s_left = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    double x = m.atom(k);
    double w_right = w_total - w_left - m.weight(k);
    double s_right = s_total - s_left - m.atom(k) * m.weight(k);
    values[k] = x * (w_left - w_right) - (s_left - s_right);
    w_left += m.weight(k);
    s_left += m.atom(k) * m.weight(k);
  }
  return PiecewiseLinearConvex(m.atoms(), std::move(values), -m.mass(), m.mass());
}

DiscreteMeasure measure_from_potential(const PiecewiseLinearConvex& f, double weight_floor) {
  std::vector<double> s = f.slopes();
  std::vector<double> atoms, weights;
  for (std::size_t k = 0; k < f.breakpoints().size(); ++k) {
    double w = 0.5 * (s[k + 1] - s[k]);
    if (w > weight_floor) {
      atoms.push_back(f.breakpoints()[k]);
      weights.push_back(w);
    }
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

IrreducibleDecomposition irreducible_decomposition(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                   double tol) {
  auto order = check_convex_order(mu, nu, 1e-9 * std::max(1.0, mu.mass()));
  if (!order.ordered) throw ConvexOrderError("irreducible_decomposition: not in convex order", order.witness);
  IrreducibleDecomposition out;
  if (mu.empty()) return out;

  const auto u_mu = potential(mu);
  const auto u_nu = potential(nu);
  const std::vector<double> pts = merged_points(mu.atoms(), nu.atoms(), kAtomMergeTol);
  const double scale = std::max(1.0, mu.mass() * (pts.back() - pts.front()));
  const double zero_tol = tol * scale;
  std::vector<double> gap(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) gap[k] = u_nu(pts[k]) - u_mu(pts[k]);

  // Maximal runs of breakpoints with a positive gap, bounded by zero points.
  std::vector<std::pair<double, double>> intervals;
  std::size_t k = 0;
  while (k < pts.size()) {
    if (gap[k] <= zero_tol) {
      ++k;
      continue;
    }
    std::size_t start = k;
    while (k < pts.size() && gap[k] > zero_tol) ++k;
    // Outside the convex hull of the supports both potentials coincide, so a
    // run always has zero points on both sides.
    if (start == 0 || k == pts.size()) throw MeasureError("irreducible_decomposition: unbounded component");
    intervals.push_back({pts[start - 1], pts[k]});
  }

  // Stationary part: mu at points where the potentials agree.
  std::vector<double> eta_a, eta_w;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double x = mu.atom(i);
    bool inside = false;
    for (const auto& [a, b] : intervals) inside = inside || (x > a && x < b);
    if (!inside) {
      eta_a.push_back(x);
      eta_w.push_back(mu.weight(i));
    }
  }
  out.stationary = DiscreteMeasure(eta_a, eta_w);

  for (const auto& [a, b] : intervals) {
    IrreducibleComponent c;
    c.left = a;
    c.right = b;
    c.mu = mu.restricted_open(a, b);
    DiscreteMeasure open = nu.restricted_open(a, b);
    double m_mu = c.mu.mass(), s_mu = 0.0;
    for (std::size_t i = 0; i < c.mu.size(); ++i) s_mu += c.mu.atom(i) * c.mu.weight(i);
    double m_open = open.mass(), s_open = 0.0;
    for (std::size_t i = 0; i < open.size(); ++i) s_open += open.atom(i) * open.weight(i);
    // alpha_a + alpha_b = m_mu - m_open ; a alpha_a + b alpha_b = s_mu - s_open
    double rest = m_mu - m_open;
    double alpha_b = (s_mu - s_open - a * rest) / (b - a);
    double alpha_a = rest - alpha_b;
    const double neg_tol = 1e-9 * std::max(1.0, mu.mass());
    if (alpha_a < -neg_tol || alpha_b < -neg_tol) {
      throw MeasureError("irreducible_decomposition: negative endpoint allocation");
    }
    std::vector<double> na = open.atoms(), nw = open.weights();
    if (alpha_a > 0) {
      na.push_back(a);
      nw.push_back(alpha_a);
    }
    if (alpha_b > 0) {
      na.push_back(b);
      nw.push_back(alpha_b);
    }
    c.nu = DiscreteMeasure(na, nw);
    out.components.push_back(std::move(c));
  }

  // Reassembly check: nu = eta + sum nu_n and mu = eta + sum mu_n atomwise.
  DiscreteMeasure mu_sum = out.stationary, nu_sum = out.stationary;
  for (const auto& c : out.components) {
    mu_sum = mu_sum + c.mu;
    nu_sum = nu_sum + c.nu;
  }
  auto atom_gap = [](const DiscreteMeasure& x, const DiscreteMeasure& y) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x.weight(i) - y.weight_at(x.atom(i))));
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y.weight(i) - x.weight_at(y.atom(i))));
    return worst;
  };
  out.reassembly_error = std::max(atom_gap(mu_sum, mu), atom_gap(nu_sum, nu));
  if (out.reassembly_error > 1e-8 * std::max(1.0, mu.mass())) {
    throw MeasureError("irreducible_decomposition: endpoint allocation does not reassemble nu");
  }
  return out;
}

DiscreteMeasure convex_min(const DiscreteMeasure& rho, const DiscreteMeasure& q) {
  require_same_mass_and_mean(rho, q, "convex_min");
  if (rho.empty()) return {};
  const auto ur = potential(rho);
  const auto uq = potential(q);
  const std::vector<double> ts = merged_points(rho.atoms(), q.atoms(), kAtomMergeTol);
  std::vector<Point> pts = min_with_crossings(ts, ur, uq);
  std::vector<Point> hull = lower_hull(pts);
  std::vector<double> bt, bv;
  for (const Point& p : hull) {
    bt.push_back(p.t);
    bv.push_back(p.v);
  }
  const double m = rho.mass();
  return measure_from_potential(PiecewiseLinearConvex(bt, bv, -m, m), 1e-14 * m);
}

std::vector<double> default_projection_grid(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            std::size_t refine) {
  std::vector<double> g = merged_points(mu.atoms(), nu.atoms(), kAtomMergeTol);
  if (g.empty()) return g;
  double lo = g.front(), hi = g.back();
  std::vector<double> extra;
  for (std::size_t k = 0; refine > 1 && k < refine; ++k) {
    extra.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(refine - 1));
  }
  return merged_points(g, extra, 1e-12 * std::max(1.0, hi - lo));
}

DiscreteMeasure convex_order_projection(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const std::vector<double>& grid_in) {
  double scale = std::max({1.0, mu.mass(), nu.mass()});
  if (std::abs(mu.mass() - nu.mass()) > 1e-12 * scale) throw MeasureError("convex_order_projection: mass mismatch");
  if (mu.empty()) return {};
  std::vector<double> grid = merged_points(grid_in, {}, kAtomMergeTol);
  for (double x : mu.atoms()) {
    if (std::none_of(grid.begin(), grid.end(), [&](double g) { return std::abs(g - x) <= kAtomMergeTol; }))
      throw MeasureError("convex_order_projection: grid misses an atom of mu");
  }
  for (double x : nu.atoms()) {
    if (std::none_of(grid.begin(), grid.end(), [&](double g) { return std::abs(g - x) <= kAtomMergeTol; }))
      throw MeasureError("convex_order_projection: grid misses an atom of nu");
  }
  const std::size_t k_n = grid.size();
  const double mass = mu.mass();
  const auto u_mu = potential(mu);
  QuantileView qv(nu);

  using namespace lp;
  LinearProgram p;
  for (std::size_t k = 0; k < k_n; ++k) p.add_variable(0.0);  // eta weights
  for (std::size_t k = 0; k + 1 < k_n; ++k) p.add_variable(grid[k + 1] - grid[k]);  // |F_eta - F_nu|
  std::vector<std::pair<std::size_t, double>> all, first;
  for (std::size_t k = 0; k < k_n; ++k) {
    all.push_back({k, 1.0});
    first.push_back({k, grid[k]});
  }
  p.add_row(all, RowType::Equal, mass);
  p.add_row(first, RowType::Equal, mass * mean(mu));
  for (std::size_t k = 0; k + 1 < k_n; ++k) {
    std::vector<std::pair<std::size_t, double>> up, down;
    for (std::size_t i = 0; i <= k; ++i) {
      up.push_back({i, -1.0});
      down.push_back({i, 1.0});
    }
    up.push_back({k_n + k, 1.0});
    down.push_back({k_n + k, 1.0});
    double fnu = qv.cdf(grid[k] + kAtomMergeTol);
    p.add_row(up, RowType::GreaterEqual, -fnu);
    p.add_row(down, RowType::GreaterEqual, fnu);
  }
  for (std::size_t k = 0; k < k_n; ++k) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < k_n; ++i) {
      if (i != k) row.push_back({i, std::abs(grid[k] - grid[i])});
    }
    p.add_row(row, RowType::GreaterEqual, u_mu(grid[k]));
  }
  LPSolution s = solve_lp(p);
  if (!s.optimal()) throw MeasureError(std::string("convex_order_projection: LP ") + to_string(s.status));

  std::vector<double> w(k_n);
  for (std::size_t k = 0; k < k_n; ++k) w[k] = std::max(0.0, s.primal[k]);
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0) || !std::isfinite(total)) throw MeasureError("convex_order_projection: degenerate LP solution");
  for (double& v : w) v *= mass / total;
  for (double& v : w) {
    if (v < 1e-15 * mass) v = 0.0;
  }
  return DiscreteMeasure(grid, w);
}

DiscreteMeasure convex_order_projection(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return wasserstein_projection(mu, nu);
}

DiscreteMeasure wasserstein_projection(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  double scale = std::max({1.0, mu.mass(), nu.mass()});
  if (std::abs(mu.mass() - nu.mass()) > 1e-12 * scale) throw MeasureError("wasserstein_projection: mass mismatch");
  if (mu.empty()) return {};
  const double mass = mu.mass();
  // Cumulative levels of both quantile functions, merged.
  std::vector<double> tm, tn;
  double acc = 0.0;
  for (double w : mu.weights()) tm.push_back(acc += w);
  acc = 0.0;
  for (double w : nu.weights()) tn.push_back(acc += w);
  tm.back() = mass;
  tn.back() = mass;
  std::vector<double> ts = merged_points(tm, tn, 1e-13 * mass);
  ts.back() = mass;
  ts.insert(ts.begin(), 0.0);

  // D(t) = int_0^t (q_mu - q_nu); q_mu and q_nu are constant on each piece.
  const std::size_t pieces = ts.size() - 1;
  std::vector<double> q_nu(pieces);
  std::vector<Point> d{{0.0, 0.0}};
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k < pieces; ++k) {
    double mid = 0.5 * (ts[k] + ts[k + 1]);
    while (i + 1 < mu.size() && tm[i] < mid) ++i;
    while (j + 1 < nu.size() && tn[j] < mid) ++j;
    q_nu[k] = nu.atom(j);
    d.push_back({ts[k + 1], d.back().v + (ts[k + 1] - ts[k]) * (mu.atom(i) - nu.atom(j))});
  }
  std::vector<Point> hull = lower_hull(d);

  // The projection's quantile is q_nu plus the slope of the convex minorant of D.
  std::vector<double> atoms, weights;
  std::size_t h = 1;
  for (std::size_t k = 0; k < pieces; ++k) {
    double dt = ts[k + 1] - ts[k];
    while (h + 1 < hull.size() && hull[h].t <= ts[k] + 1e-15 * mass) ++h;
    double slope = (hull[h].v - hull[h - 1].v) / (hull[h].t - hull[h - 1].t);
    atoms.push_back(q_nu[k] + slope);
    weights.push_back(dt);
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure binary_kernel(double x, double l, double r) {
  if (!(l <= x && x <= r)) throw MeasureError("binary_kernel: x outside [l, r]");
  if (l < x && x < r) return DiscreteMeasure({l, r}, {(r - x) / (r - l), (x - l) / (r - l)});
  return DiscreteMeasure::dirac(x);
}

double w1_binary(double x, double y, double z, double yk, double zk) {
  if (!(y <= x && x <= z && yk <= x && x <= zk)) throw MeasureError("w1_binary: x outside an interval");
  const bool deg = !(y < x && x < z);
  const bool deg_k = !(yk < x && x < zk);
  if (deg && deg_k) return 0.0;
  if (deg) return 2.0 * (zk - x) * (x - yk) / (zk - yk);
  if (deg_k) return 2.0 * (z - x) * (x - y) / (z - y);
  const double p = (z - x) / (z - y), pk = (zk - x) / (zk - yk);
  const double q = (x - y) / (z - y), qk = (x - yk) / (zk - yk);
  return std::min(p, pk) * std::abs(y - yk) + std::max(0.0, p - pk) * (zk - y) +
         std::max(0.0, pk - p) * (z - yk) + std::min(q, qk) * std::abs(z - zk);
}

}  // namespace mot
