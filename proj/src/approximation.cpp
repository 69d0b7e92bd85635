#include "mot/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "mot/convex_order.hpp"
#include "mot/lp.hpp"
#include "mot/solvers.hpp"

namespace mot {

namespace {

std::mutex g_stats_mutex;
RearrangementStats g_stats;

void require_dominated(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const char* who) {
  ConvexOrderCheck chk = check_convex_order(mu, nu, 1e-9);
  if (!chk.ordered) throw ConvexOrderError(std::string(who) + ": marginals are not in convex order", chk.witness);
}

// Index of the atom of m within the merge tolerance of x.
std::size_t atom_index(const DiscreteMeasure& m, double x) {
  const auto& a = m.atoms();
  auto it = std::lower_bound(a.begin(), a.end(), x - kAtomMergeTol);
  if (it == a.end() || std::abs(*it - x) > kAtomMergeTol) throw MeasureError("atom not found");
  return static_cast<std::size_t>(it - a.begin());
}

DiscreteMeasure mix(const DiscreteMeasure& a, double wa, const DiscreteMeasure& b, double wb) {
  if (wa <= 0.0) return b.scaled(wb);
  if (wb <= 0.0) return a.scaled(wa);
  return a.scaled(wa) + b.scaled(wb);
}

DiscreteMeasure sum_of(const std::vector<DiscreteMeasure>& v) {
  DiscreteMeasure s;
  for (const auto& m : v) s = s + m;
  return s;
}

// sum_x m(x) B(x, a, b): every atom spread to the window ends.
DiscreteMeasure spread_to_window(const DiscreteMeasure& m, double a, double b) {
  DiscreteMeasure out;
  for (std::size_t i = 0; i < m.size(); ++i) out = out + binary_kernel(m.atom(i), a, b).scaled(m.weight(i));
  return out;
}

struct FitCell {
  LiftedMeasure first;
  DiscreteMeasure target;  // probability kernel
};

struct FitOutput {
  std::vector<JointAtom> joint;
  double cost = 0.0;
};

// One LP over martingale couplings pi_c of (cells[c].first, part of nu) with
// sum_c second marginals = nu, minimizing
//   sum_c sum_k w_k W1(kernel of pi_c at k, cells[c].target).
FitOutput anchored_fit(const std::vector<FitCell>& cells, const DiscreteMeasure& nu) {
  const std::size_t L = nu.size();
  double first_mass = 0.0;
  for (const auto& c : cells) first_mass += c.first.mass();
  const double ratio = first_mass / nu.mass();

  struct Block {
    std::size_t cell, k, pi0, tau0;
  };
  lp::LinearProgram p;
  std::vector<Block> blocks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& t = cells[c].target;
    const std::size_t S = t.size();
    for (std::size_t k = 0; k < cells[c].first.size(); ++k) {
      Block b{c, k, p.num_variables(), 0};
      for (std::size_t l = 0; l < L; ++l) p.add_variable(S == 1 ? std::abs(nu.atom(l) - t.atom(0)) : 0.0);
      b.tau0 = p.num_variables();
      if (S > 1) {
        for (std::size_t l = 0; l < L; ++l) {
          for (std::size_t s = 0; s < S; ++s) p.add_variable(std::abs(nu.atom(l) - t.atom(s)));
        }
      }
      blocks.push_back(b);
    }
  }
  for (const auto& b : blocks) {
    const auto& first = cells[b.cell].first;
    const auto& t = cells[b.cell].target;
    const std::size_t S = t.size();
    const double w = first.weights()[b.k], x = first.atoms()[b.k].x;
    std::vector<std::pair<std::size_t, double>> mass, mart;
    for (std::size_t l = 0; l < L; ++l) {
      mass.push_back({b.pi0 + l, 1.0});
      mart.push_back({b.pi0 + l, nu.atom(l) - x});
    }
    p.add_row(mass, lp::RowType::Equal, w);
    p.add_row(mart, lp::RowType::Equal, 0.0);
    if (S > 1) {
      // Target side of the inner plan; the last row follows from the mass row.
      for (std::size_t s = 0; s + 1 < S; ++s) {
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t l = 0; l < L; ++l) row.push_back({b.tau0 + l * S + s, 1.0});
        p.add_row(row, lp::RowType::Equal, w * t.weight(s) / t.mass());
      }
      for (std::size_t l = 0; l < L; ++l) {
        std::vector<std::pair<std::size_t, double>> row{{b.pi0 + l, -1.0}};
        for (std::size_t s = 0; s < S; ++s) row.push_back({b.tau0 + l * S + s, 1.0});
        p.add_row(row, lp::RowType::Equal, 0.0);
      }
    }
  }
  for (std::size_t l = 0; l + 1 < L; ++l) {
    std::vector<std::pair<std::size_t, double>> row;
    for (const auto& b : blocks) row.push_back({b.pi0 + l, 1.0});
    p.add_row(row, lp::RowType::Equal, nu.weight(l) * ratio);
  }
  lp::LPSolution s = lp::solve_lp(p);
  if (!s.optimal()) throw ApproximationError("fit", std::string("kernel fit LP ") + lp::to_string(s.status));
  FitOutput out;
  out.cost = s.objective;
  for (const auto& b : blocks) {
    const auto& a = cells[b.cell].first.atoms()[b.k];
    for (std::size_t l = 0; l < L; ++l) {
      double v = s.primal[b.pi0 + l];
      if (v > 0.0) out.joint.push_back({a.x, a.u, nu.atom(l), v});
    }
  }
  return out;
}

}  // namespace

RearrangementStats rearrangement_stats() {
  std::lock_guard<std::mutex> lock(g_stats_mutex);
  return g_stats;
}

void reset_rearrangement_stats() {
  std::lock_guard<std::mutex> lock(g_stats_mutex);
  g_stats = RearrangementStats{};
}

Rearrangement min_cost_martingale_rearrangement(const DiscreteMeasure& theta, const DiscreteMeasure& nu) {
  MotResult r = solve_mot(theta, nu, CostSpec::of_xy([](double x, double y) { return std::abs(y - x); }, "abs"));
  Rearrangement out;
  out.coupling = std::move(r.coupling);
  out.cost = r.value;
  out.bound = 2.0 * wasserstein_line(theta, nu);
  const double scale =
      std::max(1.0, nu.mass() * std::max({std::abs(nu.min_atom()), std::abs(nu.max_atom()), 1.0}));
  const double excess = out.cost - out.bound;
  const bool violated = excess > 1e-9 * scale;
  {
    std::lock_guard<std::mutex> lock(g_stats_mutex);
    ++g_stats.calls;
    if (violated) ++g_stats.violations;
    g_stats.worst_excess = std::max(g_stats.worst_excess, excess);
  }
  if (violated) {
    throw RearrangementBoundError("rearrangement cost " + std::to_string(out.cost) + " exceeds 2 W1 = " +
                                  std::to_string(out.bound));
  }
  return out;
}

MarginalSplit split_marginals(const DiscreteCoupling& pi, const LiftedMeasure& mu_bar_new,
                              const DiscreteMeasure& nu_new) {
  if (!check_martingale(pi, 1e-8).ok) throw MeasureError("split_marginals: coupling is not a martingale");
  require_dominated(mu_bar_new.projection_x(), nu_new, "split_marginals");

  const LiftedMeasure& first = pi.first_marginal();
  IrreducibleDecomposition dec = irreducible_decomposition(first.projection_x(), pi.second_marginal());

  MarginalSplit out;
  out.anchor = optimal_transport(first.weights(), mu_bar_new.weights(), [&](std::size_t i, std::size_t k) {
    return std::abs(first.atoms()[i].x - mu_bar_new.atoms()[k].x) +
           std::abs(first.atoms()[i].u - mu_bar_new.atoms()[k].u);
  });
  for (auto& row : out.anchor.plan) {
    for (double& v : row) v = std::max(v, 0.0);
  }
  out.feasible =
      solve_extended_mot(mu_bar_new, nu_new, CostSpec::of_xy([](double x, double y) { return std::abs(y - x); }))
          .coupling;

  out.pieces.resize(dec.components.size());
  for (std::size_t n = 0; n < dec.components.size(); ++n) {
    out.pieces[n].left = dec.components[n].left;
    out.pieces[n].right = dec.components[n].right;
  }
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double x = first.atoms()[i].x;
    MarginalPiece* target = &out.stationary;
    for (auto& piece : out.pieces) {
      if (x > piece.left && x < piece.right) target = &piece;
    }
    target->rows.push_back(i);
  }

  const auto& ys = out.feasible.y_support();
  const auto& kt = out.feasible.kernel_table();
  auto fill = [&](MarginalPiece& piece) {
    std::vector<double> col(mu_bar_new.size(), 0.0);
    for (std::size_t i : piece.rows) {
      std::vector<LiftedAtom> atoms;
      std::vector<double> w;
      for (std::size_t k = 0; k < mu_bar_new.size(); ++k) {
        double v = out.anchor.plan[i][k];
        if (v <= 0.0) continue;
        atoms.push_back(mu_bar_new.atoms()[k]);
        w.push_back(v);
        col[k] += v;
      }
      piece.cells.emplace_back(atoms, w);
    }
    std::vector<LiftedAtom> atoms;
    std::vector<double> w;
    std::vector<double> nu_w(ys.size(), 0.0);
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (col[k] <= 0.0) continue;
      atoms.push_back(mu_bar_new.atoms()[k]);
      w.push_back(col[k]);
      for (std::size_t l = 0; l < ys.size(); ++l) nu_w[l] += col[k] * kt[k][l];
    }
    piece.mu_bar = LiftedMeasure(atoms, w);
    DiscreteMeasure nu_piece(ys, nu_w);
    // Align the mass with mu_bar exactly; the two differ only by rounding.
    piece.nu = nu_piece.empty() ? nu_piece : nu_piece.scaled(piece.mu_bar.mass() / nu_piece.mass());
  };
  for (auto& piece : out.pieces) fill(piece);
  fill(out.stationary);
  return out;
}

PairsResult approximate_pairs(const std::vector<DiscreteMeasure>& mu, const std::vector<DiscreteMeasure>& nu,
                              const std::vector<DiscreteMeasure>& mu_new, const DiscreteMeasure& nu_new, double left,
                              double right, double eps, std::size_t window, std::size_t max_retries) {
  const std::size_t J = mu.size();
  if (nu.size() != J || mu_new.size() != J) throw MeasureError("approximate_pairs: cell counts differ");
  PairsResult out;
  if (J == 0) return out;
  if (!(left < right)) throw MeasureError("approximate_pairs: empty component");
  const DiscreteMeasure mu_sum = sum_of(mu), nu_sum = sum_of(nu);
  require_dominated(mu_sum, nu_sum, "approximate_pairs");
  require_dominated(sum_of(mu_new), nu_new, "approximate_pairs");
  const double tol = 1e-12 * std::max({1.0, std::abs(left), std::abs(right)});
  if (mu_sum.min_atom() <= left || mu_sum.max_atom() >= right || nu_sum.min_atom() < left - tol ||
      nu_sum.max_atom() > right + tol)
    throw MeasureError("approximate_pairs: cells are not supported on the component");
  for (std::size_t j = 0; j < J; ++j) {
    if (std::abs(mu[j].mass() - mu_new[j].mass()) > 1e-9 * std::max(1.0, mu[j].mass()))
      throw MeasureError("approximate_pairs: perturbed cell mass differs");
  }
  eps = std::clamp(eps, 0.0, 1.0);
  PairsDiagnostics& d = out.diagnostics;

  // Step 1: trim every nu_j to a window inside the component.
  const double lo = mu_sum.min_atom(), hi = mu_sum.max_atom();
  std::vector<DiscreteMeasure> trimmed(J);
  for (std::size_t m = window > 0 ? window : 0;; ++m) {
    const double f = std::ldexp(1.0, -static_cast<int>(m));
    d.window = m;
    d.a = left + f * (lo - left);
    d.b = right - f * (right - hi);
    d.trim_shift = 0.0;
    bool small = true;
    for (std::size_t j = 0; j < J; ++j) {
      trimmed[j] = convex_min(nu[j], spread_to_window(mu[j], d.a, d.b));
      double shift = wasserstein_line(trimmed[j], nu[j]);
      d.trim_shift += shift;
      if (!(shift < 0.25 * eps * mu[j].mass())) small = false;
    }
    if (window > 0 || small || m >= 60) break;
  }

  // Step 2: projection mix and the order check against nu_new.
  std::vector<DiscreteMeasure> proj(J), tilde(J);
  for (std::size_t j = 0; j < J; ++j) proj[j] = wasserstein_projection(mu_new[j], trimmed[j]);
  DiscreteMeasure theta;
  double e = eps;
  for (;;) {
    for (std::size_t j = 0; j < J; ++j) tilde[j] = mix(proj[j], 1.0 - e, mu_new[j], e);
    theta = sum_of(tilde);
    theta = theta.scaled(nu_new.mass() / theta.mass());
    ConvexOrderCheck chk = check_convex_order(theta, nu_new, 1e-9);
    d.eps_trace.push_back(e);
    d.margin_trace.push_back(chk.max_excess);
    if (chk.ordered) break;
    if (e >= 1.0) throw ApproximationError("pairs", "order check failed even with eps = 1");
    e = d.retries < max_retries ? 0.5 * (1.0 + e) : 1.0;
    ++d.retries;
  }
  d.eps = e;

  // Step 3: move theta onto nu_new and carry every nu~_j along.
  Rearrangement r = min_cost_martingale_rearrangement(theta, nu_new);
  d.rearrangement_cost = r.cost;
  d.rearrangement_bound = r.bound;
  const auto& ys = r.coupling.y_support();
  const auto& kt = r.coupling.kernel_table();
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<double> w(ys.size(), 0.0);
    for (std::size_t t = 0; t < tilde[j].size(); ++t) {
      std::size_t row = atom_index(theta, tilde[j].atom(t));
      for (std::size_t l = 0; l < ys.size(); ++l) w[l] += tilde[j].weight(t) * kt[row][l];
    }
    out.nu.emplace_back(ys, w);
  }
  return out;
}

ApproximationResult approximate_coupling(const DiscreteCoupling& pi_in, const LiftedMeasure& mu_bar_new,
                                         const DiscreteMeasure& nu_new, const ApproximationOptions& opts) {
  require_dominated(mu_bar_new.projection_x(), nu_new, "approximate_coupling");
  ApproximationResult out;
  if (total_variation(pi_in.first_marginal(), mu_bar_new) <= 1e-12 &&
      total_variation(pi_in.second_marginal(), nu_new) <= 1e-12) {
    out.coupling = pi_in;
    out.identity = true;
    return out;
  }
  DiscreteCoupling pi = pi_in;
  if (opts.simplify_eps > 0.0) {
    SimpleCoupling s = simplify_coupling(pi_in, opts.simplify_eps);
    pi = s.coupling;
    out.aw1_bound += s.aw_bound;
  }

  MarginalSplit split;
  try {
    split = split_marginals(pi, mu_bar_new, nu_new);
  } catch (const ApproximationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ApproximationError("split", e.what());
  }
  out.aw1_bound += split.anchor.cost;

  const LiftedMeasure& first = pi.first_marginal();
  std::vector<JointAtom> joint;
  for (const auto& piece : split.pieces) {
    if (piece.rows.empty()) continue;
    PieceReport rep;
    rep.left = piece.left;
    rep.right = piece.right;
    rep.cells = piece.rows.size();
    std::vector<DiscreteMeasure> mu, nu, mu_new;
    for (std::size_t c = 0; c < piece.rows.size(); ++c) {
      const std::size_t i = piece.rows[c];
      mu.push_back(DiscreteMeasure::dirac(first.atoms()[i].x, first.weights()[i]));
      nu.push_back(pi.kernel(i).scaled(first.weights()[i]));
      mu_new.push_back(piece.cells[c].projection_x());
    }
    PairsResult pr;
    try {
      pr = approximate_pairs(mu, nu, mu_new, piece.nu, piece.left, piece.right, opts.eps, opts.window,
                             opts.max_retries);
    } catch (const ApproximationError&) {
      throw;
    } catch (const RearrangementBoundError&) {
      throw;
    } catch (const std::exception& e) {
      throw ApproximationError("pairs", e.what());
    }
    rep.pairs = pr.diagnostics;
    // The cell targets nu'_j certify that the fit below is feasible cell by
    // cell; the LP itself only fixes the piece total and may share nu' more
    // favourably between cells.
    std::vector<FitCell> cells;
    for (std::size_t c = 0; c < piece.rows.size(); ++c) cells.push_back({piece.cells[c], pi.kernel(piece.rows[c])});
    FitOutput f = anchored_fit(cells, piece.nu);
    rep.fit_cost = f.cost;
    joint.insert(joint.end(), f.joint.begin(), f.joint.end());
    out.aw1_bound += rep.fit_cost;
    out.pieces.push_back(std::move(rep));
  }
  if (!split.stationary.rows.empty()) {
    std::vector<FitCell> cells;
    for (std::size_t c = 0; c < split.stationary.rows.size(); ++c) {
      const std::size_t i = split.stationary.rows[c];
      cells.push_back({split.stationary.cells[c], DiscreteMeasure::dirac(first.atoms()[i].x)});
    }
    FitOutput f = anchored_fit(cells, split.stationary.nu);
    out.stationary_fit_cost = f.cost;
    out.aw1_bound += f.cost;
    joint.insert(joint.end(), f.joint.begin(), f.joint.end());
  }

  out.coupling = disintegrate(joint);
  out.first_marginal_error = total_variation(out.coupling.first_marginal(), mu_bar_new);
  out.second_marginal_error = total_variation(out.coupling.second_marginal(), nu_new);
  out.aw1 = adapted_wasserstein(out.coupling, pi_in);
  return out;
}

}  // namespace mot
