#include "mot/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mot/convex_order.hpp"

namespace mot {

namespace {

using Matrix = std::vector<std::vector<double>>;

void require_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const char* who) {
  if (std::abs(mu.mass() - nu.mass()) > 1e-9 * std::max(1.0, mu.mass()))
    throw MeasureError(std::string(who) + ": marginal masses differ");
  ConvexOrderCheck chk = check_convex_order(mu, nu, 1e-9);
  if (!chk.ordered) throw ConvexOrderError(std::string(who) + ": marginals are not in convex order", chk.witness);
}

struct MartingaleLP {
  DiscreteCoupling coupling;
  double value = 0.0;
  bool is_vertex = false;
  std::size_t iterations = 0;
};

// LP over pi(i, j) >= 0 with row sums w_i, column sums nu_j and kernel means
// x_i. cost[i][j] is the objective coefficient.
MartingaleLP martingale_lp(const LiftedMeasure& first, const DiscreteMeasure& nu, const Matrix& cost,
                           lp::Sense sense) {
  const std::size_t n = first.size(), m = nu.size();
  const double ratio = first.mass() / nu.mass();
  lp::LinearProgram p(sense);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) p.add_variable(cost[i][j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> mass, mart;
    for (std::size_t j = 0; j < m; ++j) {
      mass.push_back({i * m + j, 1.0});
      mart.push_back({i * m + j, nu.atom(j) - first.atoms()[i].x});
    }
    p.add_row(mass, lp::RowType::Equal, first.weights()[i]);
    p.add_row(mart, lp::RowType::Equal, 0.0);
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    std::vector<std::pair<std::size_t, double>> col;
    for (std::size_t i = 0; i < n; ++i) col.push_back({i * m + j, 1.0});
    p.add_row(col, lp::RowType::Equal, nu.weight(j) * ratio);
  }
  lp::LPSolution s = lp::solve_lp(p);
  if (s.status == lp::Status::Infeasible)
    throw ConvexOrderError("martingale LP infeasible", std::nullopt);
  if (!s.optimal()) throw lp::LPError(std::string("martingale LP: ") + lp::to_string(s.status));
  Matrix k(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double v = s.primal[i * m + j];
      k[i][j] = v > 1e-15 * first.mass() ? v : 0.0;
    }
  }
  MartingaleLP out;
  out.coupling = DiscreteCoupling(first, nu.atoms(), k);
  out.value = s.objective;
  out.is_vertex = s.is_vertex;
  out.iterations = s.iterations;
  return out;
}

Matrix cost_matrix(const LiftedMeasure& first, const DiscreteMeasure& nu, const CostSpec& c) {
  Matrix out(first.size(), std::vector<double>(nu.size()));
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) out[i][j] = c(first.atoms()[i].x, first.atoms()[i].u, nu.atom(j));
  }
  return out;
}

}  // namespace

CostSpec CostSpec::callable(std::function<double(double, double, double)> f, std::string tag) {
  CostSpec c;
  c.f_ = std::move(f);
  c.tag_ = std::move(tag);
  return c;
}

CostSpec CostSpec::of_xy(std::function<double(double, double)> f, std::string tag) {
  return callable([f = std::move(f)](double x, double, double y) { return f(x, y); }, std::move(tag));
}

CostSpec CostSpec::tabulated(const std::vector<JointAtom>& table) {
  auto key = [](double x, double u, double y) {
    auto snap = [](double v) { return std::llround(v / kAtomMergeTol); };
    return std::make_tuple(snap(x), snap(u), snap(y));
  };
  std::map<std::tuple<long long, long long, long long>, double> values;
  for (const JointAtom& t : table) {
    if (!std::isfinite(t.w)) throw MeasureError("tabulated cost: non-finite value");
    values[key(t.x, t.u, t.y)] = t.w;
  }
  return callable(
      [values = std::move(values), key](double x, double u, double y) {
        auto it = values.find(key(x, u, y));
        if (it == values.end()) throw MeasureError("tabulated cost: point off the table");
        return it->second;
      },
      "tabulated");
}

double CostSpec::operator()(double x, double u, double y) const {
  if (!f_) throw MeasureError("empty cost");
  return f_(x, u, y);
}

MotResult solve_mot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost, lp::Sense sense) {
  return solve_extended_mot(LiftedMeasure::with_label(mu, 0.0), nu, cost, sense);
}

MotResult solve_extended_mot(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu, const CostSpec& cost,
                             lp::Sense sense) {
  require_order(mu_bar.projection_x(), nu, "solve_extended_mot");
  MartingaleLP r = martingale_lp(mu_bar, nu, cost_matrix(mu_bar, nu, cost), sense);
  return {r.value, std::move(r.coupling), r.is_vertex, r.iterations};
}

FrankWolfeResult solve_wmot_fw(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu, const ConvexCost& cost,
                               const FrankWolfeOptions& opts) {
  require_order(mu_bar.projection_x(), nu, "solve_wmot_fw");
  const std::size_t n = mu_bar.size(), m = nu.size();
  const std::vector<double>& ys = nu.atoms();
  const auto& w = mu_bar.weights();
  auto kernel_of = [&](const Matrix& p, std::size_t i) {
    std::vector<double> k(m);
    for (std::size_t j = 0; j < m; ++j) k[j] = p[i][j] / w[i];
    return k;
  };
  auto objective = [&](const Matrix& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += w[i] * cost.value(mu_bar.atoms()[i].x, mu_bar.atoms()[i].u, ys, kernel_of(p, i));
    }
    return s;
  };
  auto gradient = [&](const Matrix& p) {
    Matrix g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = cost.gradient(mu_bar.atoms()[i].x, mu_bar.atoms()[i].u, ys, kernel_of(p, i));
      if (g[i].size() != m) throw GradientCheckError("solve_wmot_fw: gradient has the wrong length");
    }
    return g;
  };
  auto lmo = [&](const Matrix& g) {
    MartingaleLP r = martingale_lp(mu_bar, nu, g, lp::Sense::Minimize);
    Matrix v(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) v[i][j] = w[i] * r.coupling.kernel_table()[i][j];
    }
    return v;
  };
  auto inner = [&](const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) s += a[i][j] * b[i][j];
    }
    return s;
  };
  auto combine = [&](const Matrix& a, const Matrix& d, double t) {
    Matrix out = a;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) out[i][j] += t * d[i][j];
    }
    return out;
  };
  auto diff = [&](const Matrix& a, const Matrix& b) { return combine(a, b, -1.0) ; };
  auto same = [&](const Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (std::abs(a[i][j] - b[i][j]) > 1e-12) return false;
      }
    }
    return true;
  };

  Matrix zero(n, std::vector<double>(m, 0.0));
  Matrix start = lmo(zero);

  // Central differences along the coordinate directions of every kernel.
  for (std::size_t i = 0; i < n; ++i) {
    const double x = mu_bar.atoms()[i].x, u = mu_bar.atoms()[i].u;
    std::vector<double> k = kernel_of(start, i);
    std::vector<double> g = cost.gradient(x, u, ys, k);
    for (std::size_t j = 0; j < m; ++j) {
      const double h = 1e-6;
      std::vector<double> kp = k, km = k;
      kp[j] += h;
      km[j] -= h;
      double fd = (cost.value(x, u, ys, kp) - cost.value(x, u, ys, km)) / (2 * h);
      if (std::abs(fd - g[j]) > opts.gradient_check_tol * std::max(1.0, std::abs(g[j]))) {
        throw GradientCheckError("solve_wmot_fw: gradient mismatch at x=" + std::to_string(x) +
                                 " u=" + std::to_string(u) + " y=" + std::to_string(ys[j]) +
                                 ": analytic " + std::to_string(g[j]) + " vs finite difference " +
                                 std::to_string(fd));
      }
    }
  }

  Matrix p = lmo(gradient(start));
  std::vector<Matrix> active{p};
  std::vector<double> alpha{1.0};
  FrankWolfeResult out;
  double f = objective(p);
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    out.iterations = it;
    Matrix g = gradient(p);
    Matrix s = lmo(g);
    double gap = inner(g, diff(p, s));
    out.fw_gap = std::max(0.0, gap);
    if (gap <= opts.tol) {
      out.converged = true;
      break;
    }
    // Away vertex: the active vertex with the largest linearized cost.
    std::size_t away = 0;
    double away_val = -INFINITY;
    for (std::size_t a = 0; a < active.size(); ++a) {
      double v = inner(g, active[a]);
      if (v > away_val) {
        away_val = v;
        away = a;
      }
    }
    double away_gap = away_val - inner(g, p);
    bool toward = !opts.away_steps || active.size() == 1 || gap >= away_gap;
    Matrix d = toward ? diff(s, p) : diff(p, active[away]);
    double gmax = toward ? 1.0 : alpha[away] / (1.0 - alpha[away]);

    // Golden-section search on [0, gmax].
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = gmax;
    double c1 = hi - ratio * (hi - lo), c2 = lo + ratio * (hi - lo);
    double f1 = objective(combine(p, d, c1)), f2 = objective(combine(p, d, c2));
    while (hi - lo > 1e-10) {
      if (f1 <= f2) {
        hi = c2;
        c2 = c1;
        f2 = f1;
        c1 = hi - ratio * (hi - lo);
        f1 = objective(combine(p, d, c1));
      } else {
        lo = c1;
        c1 = c2;
        f1 = f2;
        c2 = lo + ratio * (hi - lo);
        f2 = objective(combine(p, d, c2));
      }
    }
    double gamma = 0.5 * (lo + hi);
    // Snap to the segment ends when they are at least as good.
    if (gmax - gamma < 1e-9 && objective(combine(p, d, gmax)) <= objective(combine(p, d, gamma))) gamma = gmax;
    double f_new = objective(combine(p, d, gamma));
    if (f_new > f) {
      gamma = toward ? 2.0 / (static_cast<double>(it) + 2.0) : 0.0;
      f_new = objective(combine(p, d, gamma));
    }
    p = combine(p, d, gamma);
    f = f_new;
    if (toward) {
      for (double& a : alpha) a *= (1.0 - gamma);
      std::size_t idx = active.size();
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (same(active[a], s)) idx = a;
      }
      if (idx == active.size()) {
        active.push_back(s);
        alpha.push_back(0.0);
      }
      alpha[idx] += gamma;
      if (gamma >= 1.0 - 1e-12) {
        active = {s};
        alpha = {1.0};
      }
    } else {
      for (double& a : alpha) a *= (1.0 + gamma);
      alpha[away] -= gamma;
    }
    for (std::size_t a = active.size(); a-- > 0;) {
      if (alpha[a] <= 1e-14) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(a));
        alpha.erase(alpha.begin() + static_cast<std::ptrdiff_t>(a));
      }
    }
  }
  Matrix k(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) k[i][j] = std::max(0.0, p[i][j]);
  }
  out.coupling = DiscreteCoupling(mu_bar, nu.atoms(), k);
  out.value = objective(p);
  return out;
}

AmericanResult price_american(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const std::vector<double>& phi1,
                              const std::function<double(double, double)>& phi2) {
  if (phi1.size() != mu.size()) throw MeasureError("price_american: one exercise value per atom of mu required");
  require_order(mu, nu, "price_american");
  const std::size_t n = mu.size(), m = nu.size();
  const double ratio = mu.mass() / nu.mass();
  lp::LinearProgram p(lp::Sense::Maximize);
  // Variable (b, i, j) at index (b * n + i) * m + j.
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) p.add_variable(b == 0 ? phi1[i] : phi2(mu.atom(i), nu.atom(j)));
    }
  }
  auto var = [&](std::size_t b, std::size_t i, std::size_t j) { return (b * n + i) * m + j; };
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> mass;
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<std::pair<std::size_t, double>> mart;
      for (std::size_t j = 0; j < m; ++j) {
        mass.push_back({var(b, i, j), 1.0});
        mart.push_back({var(b, i, j), nu.atom(j) - mu.atom(i)});
      }
      p.add_row(mart, lp::RowType::Equal, 0.0);
    }
    p.add_row(mass, lp::RowType::Equal, mu.weight(i));
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    std::vector<std::pair<std::size_t, double>> col;
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t i = 0; i < n; ++i) col.push_back({var(b, i, j), 1.0});
    }
    p.add_row(col, lp::RowType::Equal, nu.weight(j) * ratio);
  }
  lp::LPSolution s = lp::solve_lp(p);
  if (!s.optimal()) throw lp::LPError(std::string("price_american: ") + lp::to_string(s.status));
  AmericanResult out;
  out.value = s.objective;
  out.exercise_mass.assign(n, 0.0);
  out.continue_mass.assign(n, 0.0);
  std::vector<JointAtom> table;
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double v = s.primal[var(b, i, j)];
        if (v <= 1e-15) continue;
        (b == 0 ? out.exercise_mass : out.continue_mass)[i] += v;
        table.push_back({mu.atom(i), static_cast<double>(b), nu.atom(j), v});
      }
    }
  }
  out.coupling = disintegrate(table);
  return out;
}

double vix_log_payoff(double x, double y, double tau) { return 2.0 / tau * std::log(x / y); }

namespace {

void require_positive(const DiscreteMeasure& m, const char* who) {
  if (!m.empty() && m.min_atom() <= 0.0) throw MeasureError(std::string(who) + ": atoms must be positive");
}

}  // namespace

VixDualResult vix_dual_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tau, std::size_t bins) {
  if (!(tau > 0.0)) throw MeasureError("vix_dual_lp: tau must be positive");
  if (bins == 0) throw MeasureError("vix_dual_lp: at least one bin required");
  require_positive(mu, "vix_dual_lp");
  require_positive(nu, "vix_dual_lp");
  require_order(mu, nu, "vix_dual_lp");
  const std::size_t n = mu.size(), m = nu.size(), nb = bins;
  double lmax = 0.0;
  for (double x : mu.atoms()) {
    for (double y : nu.atoms()) lmax = std::max(lmax, vix_log_payoff(x, y, tau));
  }
  VixDualResult out;
  const double top = std::sqrt(lmax);
  for (std::size_t b = 0; b <= nb; ++b) out.edges.push_back(top * static_cast<double>(b) / static_cast<double>(nb));
  const double ratio = mu.mass() / nu.mass();
  auto var = [&](std::size_t i, std::size_t b, std::size_t j) { return (i * nb + b) * m + j; };

  auto solve = [&](bool upper) {
    lp::LinearProgram p;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t j = 0; j < m; ++j) p.add_variable(upper ? out.edges[b + 1] : out.edges[b]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<std::size_t, double>> mass;
      for (std::size_t b = 0; b < nb; ++b) {
        std::vector<std::pair<std::size_t, double>> mart, lo, hi;
        const double l2 = out.edges[b] * out.edges[b], h2 = out.edges[b + 1] * out.edges[b + 1];
        for (std::size_t j = 0; j < m; ++j) {
          const double ell = vix_log_payoff(mu.atom(i), nu.atom(j), tau);
          mass.push_back({var(i, b, j), 1.0});
          mart.push_back({var(i, b, j), nu.atom(j) - mu.atom(i)});
          lo.push_back({var(i, b, j), ell - l2});
          hi.push_back({var(i, b, j), h2 - ell});
        }
        p.add_row(mart, lp::RowType::Equal, 0.0);
        p.add_row(lo, lp::RowType::GreaterEqual, 0.0);
        p.add_row(hi, lp::RowType::GreaterEqual, 0.0);
      }
      p.add_row(mass, lp::RowType::Equal, mu.weight(i));
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
      std::vector<std::pair<std::size_t, double>> col;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < nb; ++b) col.push_back({var(i, b, j), 1.0});
      }
      p.add_row(col, lp::RowType::Equal, nu.weight(j) * ratio);
    }
    lp::LPSolution s = lp::solve_lp(p);
    if (!s.optimal()) throw lp::LPError(std::string("vix_dual_lp: ") + lp::to_string(s.status));
    return s;
  };
  lp::LPSolution lo = solve(false);
  lp::LPSolution hi = solve(true);
  out.d_lo = lo.objective;
  out.d_hi = hi.objective;
  std::vector<JointAtom> table;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t j = 0; j < m; ++j) {
        double v = lo.primal[var(i, b, j)];
        if (v > 1e-15) table.push_back({mu.atom(i), out.edges[b], nu.atom(j), v});
      }
    }
  }
  out.coupling = disintegrate(table);
  return out;
}

VixPrimalResult vix_primal_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tau,
                              const std::vector<double>& u_grid) {
  if (!(tau > 0.0)) throw MeasureError("vix_primal_lp: tau must be positive");
  if (u_grid.size() < 2) throw MeasureError("vix_primal_lp: need at least two grid points");
  for (std::size_t b = 0; b < u_grid.size(); ++b) {
    if (u_grid[b] < 0.0 || (b > 0 && u_grid[b] < u_grid[b - 1]))
      throw MeasureError("vix_primal_lp: grid must be nonnegative and ascending");
  }
  require_positive(mu, "vix_primal_lp");
  require_positive(nu, "vix_primal_lp");
  const std::size_t n = mu.size(), m = nu.size(), nb = u_grid.size() - 1;
  const double ratio = mu.mass() / nu.mass();
  lp::LinearProgram p(lp::Sense::Maximize);
  std::vector<std::size_t> phi(n), psi(m);
  for (std::size_t i = 0; i < n; ++i) phi[i] = p.add_variable(mu.weight(i), -lp::kInf, lp::kInf);
  for (std::size_t j = 0; j < m; ++j) psi[j] = p.add_variable(nu.weight(j) * ratio, -lp::kInf, lp::kInf);
  std::vector<std::vector<std::size_t>> ds(n, std::vector<std::size_t>(nb)), al(n, std::vector<std::size_t>(nb)),
      be(n, std::vector<std::size_t>(nb));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      ds[i][b] = p.add_variable(0.0, -lp::kInf, lp::kInf);
      al[i][b] = p.add_variable(0.0);
      be[i][b] = p.add_variable(0.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      const double l2 = u_grid[b] * u_grid[b], h2 = u_grid[b + 1] * u_grid[b + 1];
      for (std::size_t j = 0; j < m; ++j) {
        const double ell = vix_log_payoff(mu.atom(i), nu.atom(j), tau);
        p.add_row({{phi[i], 1.0},
                   {psi[j], 1.0},
                   {ds[i][b], nu.atom(j) - mu.atom(i)},
                   {al[i][b], ell - l2},
                   {be[i][b], h2 - ell}},
                  lp::RowType::LessEqual, u_grid[b]);
      }
    }
  }
  lp::LPSolution s = lp::solve_lp(p);
  if (!s.optimal()) throw lp::LPError(std::string("vix_primal_lp: ") + lp::to_string(s.status));
  VixPrimalResult out;
  out.p_value = s.objective;
  for (std::size_t i = 0; i < n; ++i) out.phi.push_back(s.primal[phi[i]]);
  for (std::size_t j = 0; j < m; ++j) out.psi.push_back(s.primal[psi[j]]);
  out.delta_s.assign(n, std::vector<double>(nb));
  out.delta_l.assign(n, std::vector<double>(nb));
  out.slack.assign(n, std::vector<double>(nb));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      out.delta_s[i][b] = s.primal[ds[i][b]];
      out.delta_l[i][b] = s.primal[al[i][b]] - s.primal[be[i][b]];
      out.slack[i][b] = s.primal[be[i][b]];
    }
  }
  return out;
}

MotResult shadow_coupling(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu) {
  for (const auto& a : mu_bar.atoms()) {
    if (a.u < 0.0 || a.u > 1.0) throw MeasureError("shadow_coupling: labels must lie in [0, 1]");
  }
  return solve_extended_mot(
      mu_bar, nu, CostSpec::callable([](double, double u, double y) { return (1.0 - u) * std::sqrt(1.0 + y * y); },
                                     "shadow"));
}

BarrierExtraction extract_barriers(const DiscreteCoupling& c) {
  BarrierExtraction out;
  const auto& first = c.first_marginal();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = first.atoms()[i].x;
    std::vector<double> support;
    for (std::size_t j = 0; j < c.y_support().size(); ++j) {
      if (c.kernel_table()[i][j] > kSupportThreshold) support.push_back(c.y_support()[j]);
    }
    if (support.size() > 2) {
      ++out.excluded_count;
      out.excluded_mass += first.weights()[i];
      continue;
    }
    Barrier b{x, first.atoms()[i].u, first.weights()[i], x, x};
    if (support.size() == 2) {
      b.t1 = support.front();
      b.t2 = support.back();
    }
    out.maps.push_back(b);
  }
  return out;
}

double barrier_monotonicity_violation(const BarrierExtraction& b, double tol) {
  std::vector<Barrier> maps = b.maps;
  std::sort(maps.begin(), maps.end(), [](const Barrier& a, const Barrier& c) {
    return a.x != c.x ? a.x < c.x : a.u < c.u;
  });
  std::vector<bool> bad(maps.size(), false);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].t1 > maps[i].x + tol || maps[i].t2 < maps[i].x - tol) bad[i] = true;
    for (std::size_t k = i + 1; k < maps.size() && maps[k].x == maps[i].x; ++k) {
      // maps[i].u < maps[k].u: the larger label needs the wider interval.
      if (maps[k].t1 > maps[i].t1 + tol || maps[k].t2 < maps[i].t2 - tol) {
        bad[i] = true;
        bad[k] = true;
      }
    }
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (bad[i]) mass += maps[i].weight;
  }
  return mass;
}

double left_monotone_violation(const DiscreteCoupling& c, double tol) {
  // Support of the (x, y) projection per distinct x.
  std::vector<double> xs;
  std::vector<std::vector<double>> mass;
  const auto& first = c.first_marginal();
  const std::size_t m = c.y_support().size();
  for (std::size_t i = 0; i < c.size(); ++i) {
    double x = first.atoms()[i].x;
    if (xs.empty() || xs.back() != x) {
      xs.push_back(x);
      mass.emplace_back(m, 0.0);
    }
    for (std::size_t j = 0; j < m; ++j) mass.back()[j] += first.weights()[i] * c.kernel_table()[i][j];
  }
  double violation = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      if (mass[k][j] <= kSupportThreshold) continue;
      const double y = c.y_support()[j];
      bool bad = false;
      for (std::size_t l = 0; l < k && !bad; ++l) {
        bool below = false, above = false;
        for (std::size_t t = 0; t < m; ++t) {
          if (mass[l][t] <= kSupportThreshold) continue;
          if (c.y_support()[t] < y - tol) below = true;
          if (c.y_support()[t] > y + tol) above = true;
        }
        bad = below && above;
      }
      if (bad) violation += mass[k][j];
    }
  }
  return violation;
}

LiftedMeasure copula_lift(const DiscreteMeasure& mu, Copula copula, std::size_t m,
                          const std::vector<std::vector<double>>& table) {
  if (m == 0) throw MeasureError("copula_lift: m must be positive");
  const double mass = mu.mass();
  std::vector<double> cum{0.0};
  for (double w : mu.weights()) cum.push_back(cum.back() + w / mass);
  cum.back() = 1.0;
  // Mass of atom i inside the quantile cell [a, b].
  auto overlap = [&](std::size_t i, double a, double b) {
    return std::max(0.0, std::min(b, cum[i + 1]) - std::max(a, cum[i]));
  };
  std::vector<std::vector<double>> chi(m, std::vector<double>(m, 0.0));
  const double cell = 1.0 / static_cast<double>(m);
  switch (copula) {
    case Copula::HoeffdingFrechet:
      for (std::size_t i = 0; i < m; ++i) chi[i][i] = cell;
      break;
    case Copula::Independence:
      for (auto& row : chi) std::fill(row.begin(), row.end(), cell * cell);
      break;
    case Copula::Tabulated: {
      if (table.size() != m) throw MeasureError("copula_lift: table must be m x m");
      std::vector<double> col(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        if (table[i].size() != m) throw MeasureError("copula_lift: table must be m x m");
        double row = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          if (table[i][k] < 0.0) throw MeasureError("copula_lift: negative table entry");
          row += table[i][k];
          col[k] += table[i][k];
        }
        if (std::abs(row - cell) > 1e-9) throw MeasureError("copula_lift: table rows must sum to 1/m");
      }
      for (double v : col) {
        if (std::abs(v - cell) > 1e-9) throw MeasureError("copula_lift: table columns must sum to 1/m");
      }
      chi = table;
      break;
    }
  }
  std::vector<LiftedAtom> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < m; ++i) {
    const double label = (static_cast<double>(i) + 0.5) * cell;
    for (std::size_t k = 0; k < m; ++k) {
      if (chi[i][k] <= 0.0) continue;
      const double a = static_cast<double>(k) * cell, b = static_cast<double>(k + 1) * cell;
      for (std::size_t t = 0; t < mu.size(); ++t) {
        double o = overlap(t, a, b);
        if (o <= 0.0) continue;
        atoms.push_back({mu.atom(t), label});
        weights.push_back(mass * chi[i][k] * o / cell);
      }
    }
  }
  return LiftedMeasure(atoms, weights);
}

}  // namespace mot
