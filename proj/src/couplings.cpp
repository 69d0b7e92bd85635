#include "mot/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mot/lp.hpp"

namespace mot {

namespace {

// Sorted copy of v with entries closer than the merge tolerance collapsed.
std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double a : v) {
    if (out.empty() || a - out.back() > kAtomMergeTol) out.push_back(a);
  }
  return out;
}

std::size_t locate(const std::vector<double>& sorted, double v) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v - kAtomMergeTol);
  if (it == sorted.end() || std::abs(*it - v) > kAtomMergeTol) throw MeasureError("value not in support");
  return static_cast<std::size_t>(it - sorted.begin());
}

double powp(double d, double p) { return p == 1.0 ? std::abs(d) : std::pow(std::abs(d), p); }

}  // namespace

DiscreteCoupling::DiscreteCoupling(LiftedMeasure first, std::vector<double> y_support,
                                   std::vector<std::vector<double>> kernels)
    : first_(std::move(first)) {
  if (kernels.size() != first_.size()) throw MeasureError("coupling: one kernel row per first-marginal atom required");
  for (const auto& row : kernels) {
    if (row.size() != y_support.size()) throw MeasureError("coupling: kernel row length differs from y-support");
  }
  y_ = unique_sorted(y_support);
  k_.assign(first_.size(), std::vector<double>(y_.size(), 0.0));
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < y_support.size(); ++j) {
      double w = kernels[i][j];
      if (!(w >= 0.0) || !std::isfinite(w)) throw MeasureError("coupling: invalid kernel weight");
      k_[i][locate(y_, y_support[j])] += w;
      total += w;
    }
    if (!(total > 0.0)) throw MeasureError("coupling: kernel with zero mass");
    for (double& w : k_[i]) w /= total;
  }
  std::vector<double> nu(y_.size(), 0.0);
  for (std::size_t i = 0; i < k_.size(); ++i) {
    for (std::size_t j = 0; j < y_.size(); ++j) nu[j] += first_.weights()[i] * k_[i][j];
  }
  second_ = DiscreteMeasure(y_, nu);
}

DiscreteMeasure DiscreteCoupling::kernel(std::size_t i) const { return DiscreteMeasure(y_, k_.at(i)); }

std::vector<JointAtom> DiscreteCoupling::joint() const {
  std::vector<JointAtom> out;
  for (std::size_t i = 0; i < k_.size(); ++i) {
    const LiftedAtom& a = first_.atoms()[i];
    for (std::size_t j = 0; j < y_.size(); ++j) {
      double w = first_.weights()[i] * k_[i][j];
      if (w > 0.0) out.push_back({a.x, a.u, y_[j], w});
    }
  }
  return out;
}

double DiscreteCoupling::integrate(const std::function<double(double, double, double)>& f) const {
  double s = 0.0;
  for (const JointAtom& j : joint()) s += j.w * f(j.x, j.u, j.y);
  return s;
}

DiscreteCoupling DiscreteCoupling::relabeled(const std::function<double(double, double)>& map) const {
  std::vector<JointAtom> table = joint();
  for (JointAtom& j : table) j.u = map(j.x, j.u);
  return disintegrate(table);
}

DiscreteCoupling disintegrate(const std::vector<JointAtom>& joint, std::size_t* dropped_rows) {
  std::vector<LiftedAtom> keys;
  std::vector<double> row_mass;
  std::vector<double> ys;
  for (const JointAtom& j : joint) {
    if (!(j.w >= 0.0) || !std::isfinite(j.w)) throw MeasureError("disintegrate: invalid weight");
    keys.push_back({j.x, j.u});
    row_mass.push_back(j.w);
    ys.push_back(j.y);
  }
  // The lifted measure of all rows, zero-mass rows included with a dummy
  // weight, fixes the canonical row order and merge behaviour.
  std::vector<double> ones(keys.size(), 1.0);
  LiftedMeasure all_rows(keys, ones);
  auto row_of = [&](double x, double u) {
    const auto& at = all_rows.atoms();
    auto it = std::lower_bound(at.begin(), at.end(), LiftedAtom{x - kAtomMergeTol, 0.0},
                               [](const LiftedAtom& a, const LiftedAtom& b) { return a.x < b.x; });
    for (; it != at.end() && it->x <= x + kAtomMergeTol; ++it) {
      if (std::abs(it->u - u) <= kAtomMergeTol) return static_cast<std::size_t>(it - at.begin());
    }
    // Merging can shift a representative by up to one tolerance per link.
    std::size_t best = 0;
    double dist = INFINITY;
    for (std::size_t r = 0; r < at.size(); ++r) {
      double d = std::abs(at[r].x - x) + std::abs(at[r].u - u);
      if (d < dist) {
        dist = d;
        best = r;
      }
    }
    return best;
  };
  std::vector<double> y = unique_sorted(ys);
  std::vector<std::vector<double>> table(all_rows.size(), std::vector<double>(y.size(), 0.0));
  for (const JointAtom& j : joint) table[row_of(j.x, j.u)][locate(y, j.y)] += j.w;

  std::vector<LiftedAtom> kept;
  std::vector<double> weights;
  std::vector<std::vector<double>> kernels;
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < table.size(); ++r) {
    double m = std::accumulate(table[r].begin(), table[r].end(), 0.0);
    if (m <= 0.0) {
      ++dropped;
      continue;
    }
    kept.push_back(all_rows.atoms()[r]);
    weights.push_back(m);
    kernels.push_back(table[r]);
  }
  if (dropped_rows) *dropped_rows = dropped;
  LiftedMeasure first(kept, weights);
  if (first.size() != kept.size()) throw MeasureError("disintegrate: rows merged unexpectedly");
  return DiscreteCoupling(std::move(first), std::move(y), std::move(kernels));
}

LiftedKernelLaw lift(const DiscreteCoupling& c) {
  LiftedKernelLaw law;
  std::map<std::vector<double>, std::size_t> ids;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& row = c.kernel_table()[i];
    auto [it, inserted] = ids.emplace(row, law.kernels.size());
    if (inserted) law.kernels.push_back(c.kernel(i));
    const LiftedAtom& a = c.first_marginal().atoms()[i];
    law.atoms.push_back({a.x, a.u, it->second});
    law.weights.push_back(c.first_marginal().weights()[i]);
  }
  return law;
}

std::vector<JointAtom> reassemble(const LiftedKernelLaw& law) {
  std::vector<JointAtom> out;
  for (std::size_t i = 0; i < law.atoms.size(); ++i) {
    const DiscreteMeasure& k = law.kernels.at(law.atoms[i].kernel);
    for (std::size_t j = 0; j < k.size(); ++j) {
      out.push_back({law.atoms[i].x, law.atoms[i].u, k.atom(j), law.weights[i] * k.weight(j)});
    }
  }
  return out;
}

MartingaleCheck check_martingale(const DiscreteCoupling& c, double tol) {
  MartingaleCheck out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < c.y_support().size(); ++j) m += c.kernel_table()[i][j] * c.y_support()[j];
    out.max_deviation = std::max(out.max_deviation, std::abs(m - c.first_marginal().atoms()[i].x));
  }
  out.ok = out.max_deviation <= tol;
  return out;
}

TransportPlan optimal_transport(const std::vector<double>& a, const std::vector<double>& b,
                                const std::function<double(std::size_t, std::size_t)>& cost) {
  const double ma = std::accumulate(a.begin(), a.end(), 0.0);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(ma - mb) > 1e-9 * std::max(1.0, ma)) throw MeasureError("optimal_transport: mass mismatch");
  const std::size_t n = a.size(), m = b.size();
  TransportPlan out;
  out.plan.assign(n, std::vector<double>(m, 0.0));
  if (n == 0 || m == 0) return out;
  // Trivial shapes need no LP.
  if (n == 1 || m == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        out.plan[i][j] = n == 1 ? b[j] * ma / mb : a[i];
        out.cost += out.plan[i][j] * cost(i, j);
      }
    }
    return out;
  }
  lp::LinearProgram p;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) p.add_variable(cost(i, j));
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t j = 0; j < m; ++j) row.push_back({i * m + j, 1.0});
    p.add_row(row, lp::RowType::Equal, a[i]);
  }
  // The last column constraint is implied by the others.
  for (std::size_t j = 0; j + 1 < m; ++j) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < n; ++i) row.push_back({i * m + j, 1.0});
    p.add_row(row, lp::RowType::Equal, b[j] * ma / mb);
  }
  lp::LPSolution s = lp::solve_lp(p);
  if (!s.optimal()) throw lp::LPError(std::string("optimal_transport: ") + lp::to_string(s.status));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out.plan[i][j] = s.primal[i * m + j];
  }
  out.cost = s.objective;
  return out;
}

double wasserstein_coupling(const DiscreteCoupling& a, const DiscreteCoupling& b, double p) {
  auto ja = a.joint(), jb = b.joint();
  std::vector<double> wa, wb;
  for (const auto& j : ja) wa.push_back(j.w);
  for (const auto& j : jb) wb.push_back(j.w);
  auto plan = optimal_transport(wa, wb, [&](std::size_t i, std::size_t k) {
    return powp(ja[i].x - jb[k].x, p) + powp(ja[i].u - jb[k].u, p) + powp(ja[i].y - jb[k].y, p);
  });
  return std::pow(std::max(0.0, plan.cost), 1.0 / p);
}

double wasserstein_lifted(const LiftedMeasure& a, const LiftedMeasure& b, double p) {
  auto plan = optimal_transport(a.weights(), b.weights(), [&](std::size_t i, std::size_t k) {
    return powp(a.atoms()[i].x - b.atoms()[k].x, p) + powp(a.atoms()[i].u - b.atoms()[k].u, p);
  });
  return std::pow(std::max(0.0, plan.cost), 1.0 / p);
}

double adapted_wasserstein(const DiscreteCoupling& a, const DiscreteCoupling& b, double p) {
  std::vector<DiscreteMeasure> ka, kb;
  for (std::size_t i = 0; i < a.size(); ++i) ka.push_back(a.kernel(i));
  for (std::size_t i = 0; i < b.size(); ++i) kb.push_back(b.kernel(i));
  const auto& fa = a.first_marginal();
  const auto& fb = b.first_marginal();
  auto plan = optimal_transport(fa.weights(), fb.weights(), [&](std::size_t i, std::size_t k) {
    double inner = std::pow(wasserstein_line(ka[i], kb[k], p), p);
    return powp(fa.atoms()[i].x - fb.atoms()[k].x, p) + powp(fa.atoms()[i].u - fb.atoms()[k].u, p) + inner;
  });
  return std::pow(std::max(0.0, plan.cost), 1.0 / p);
}

SimpleCoupling simplify_coupling(const DiscreteCoupling& c, double eps) {
  if (!(eps >= 0.0)) throw MeasureError("simplify_coupling: eps must be nonnegative");
  SimpleCoupling out;
  const auto& first = c.first_marginal();
  std::vector<double> labels;
  for (const auto& a : first.atoms()) labels.push_back(a.u);
  labels = unique_sorted(labels);
  std::vector<std::size_t> cell_of_label(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k == 0 || labels[k] - out.cell_range.back().first > eps) {
      out.cell_range.push_back({labels[k], labels[k]});
    } else {
      out.cell_range.back().second = labels[k];
    }
    cell_of_label[k] = out.cell_range.size() - 1;
  }
  const std::size_t n = c.size(), ny = c.y_support().size();
  out.cell.resize(n);
  // Mixture per (x, cell); x values are exact after the lifted merge.
  std::map<std::pair<double, std::size_t>, std::vector<double>> mix;
  for (std::size_t i = 0; i < n; ++i) {
    const LiftedAtom& a = first.atoms()[i];
    out.cell[i] = cell_of_label[locate(labels, a.u)];
    auto& acc = mix[{a.x, out.cell[i]}];
    acc.resize(ny, 0.0);
    for (std::size_t j = 0; j < ny; ++j) acc[j] += first.weights()[i] * c.kernel_table()[i][j];
  }
  std::vector<std::vector<double>> kernels(n);
  for (std::size_t i = 0; i < n; ++i) {
    kernels[i] = mix[{first.atoms()[i].x, out.cell[i]}];
    double s = std::accumulate(kernels[i].begin(), kernels[i].end(), 0.0);
    for (double& w : kernels[i]) w /= s;
  }
  out.coupling = DiscreteCoupling(first, c.y_support(), kernels);
  for (std::size_t i = 0; i < n; ++i) {
    out.kernel_spread += first.weights()[i] * wasserstein_line(c.kernel(i), out.coupling.kernel(i));
  }
  out.aw_bound = eps + 2.0 * out.kernel_spread;
  return out;
}

}  // namespace mot
