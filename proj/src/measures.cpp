#include "mot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mot {

namespace {

void check_input(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw MeasureError(std::string("non-finite ") + what);
  }
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size()) throw MeasureError("atoms/weights length mismatch");
  check_input(atoms, "atom");
  check_input(weights, "weight");
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  for (std::size_t idx : order) {
    double w = weights[idx];
    if (w < 0) throw MeasureError("negative weight");
    if (w == 0) continue;
    double x = atoms[idx];
    if (!atoms_.empty() && x - atoms_.back() <= kAtomMergeTol) {
      weights_.back() += w;
    } else {
      atoms_.push_back(x);
      weights_.push_back(w);
    }
  }
  mass_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

DiscreteMeasure DiscreteMeasure::dirac(double x, double mass) { return DiscreteMeasure({x}, {mass}); }

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
  if (factor < 0) throw MeasureError("negative scale factor");
  std::vector<double> w = weights_;
  for (double& v : w) v *= factor;
  return DiscreteMeasure(atoms_, std::move(w));
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  if (mass_ <= 0) throw MeasureError("empty measure");
  return scaled(1.0 / mass_);
}

double DiscreteMeasure::weight_at(double x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x - kAtomMergeTol);
  if (it != atoms_.end() && std::abs(*it - x) <= kAtomMergeTol) return weights_[it - atoms_.begin()];
  return 0.0;
}

DiscreteMeasure DiscreteMeasure::restricted(double lo, double hi) const {
  std::vector<double> a, w;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i] >= lo && atoms_[i] <= hi) {
      a.push_back(atoms_[i]);
      w.push_back(weights_[i]);
    }
  }
  return DiscreteMeasure(std::move(a), std::move(w));
}

DiscreteMeasure DiscreteMeasure::restricted_open(double lo, double hi) const {
  std::vector<double> a, w;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i] > lo && atoms_[i] < hi) {
      a.push_back(atoms_[i]);
      w.push_back(weights_[i]);
    }
  }
  return DiscreteMeasure(std::move(a), std::move(w));
}

double DiscreteMeasure::min_atom() const {
  if (atoms_.empty()) throw MeasureError("empty measure");
  return atoms_.front();
}

double DiscreteMeasure::max_atom() const {
  if (atoms_.empty()) throw MeasureError("empty measure");
  return atoms_.back();
}

DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> atoms = a.atoms_;
  std::vector<double> weights = a.weights_;
  atoms.insert(atoms.end(), b.atoms_.begin(), b.atoms_.end());
  weights.insert(weights.end(), b.weights_.begin(), b.weights_.end());
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

LiftedMeasure::LiftedMeasure(std::vector<LiftedAtom> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size()) throw MeasureError("atoms/weights length mismatch");
  check_input(weights, "weight");
  for (const auto& a : atoms) {
    if (!std::isfinite(a.x) || !std::isfinite(a.u)) throw MeasureError("non-finite lifted atom");
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (atoms[a].x != atoms[b].x) return atoms[a].x < atoms[b].x;
    return atoms[a].u < atoms[b].u;
  });
  // Near-equal x values are snapped to the first representative so that
  // the lexicographic merge below sees them as one x.
  double last_x = 0.0;
  bool have_x = false;
  for (std::size_t idx : order) {
    if (have_x && atoms[idx].x - last_x <= kAtomMergeTol) atoms[idx].x = last_x;
    last_x = atoms[idx].x;
    have_x = true;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (atoms[a].x != atoms[b].x) return atoms[a].x < atoms[b].x;
    return atoms[a].u < atoms[b].u;
  });
  for (std::size_t idx : order) {
    double w = weights[idx];
    if (w < 0) throw MeasureError("negative weight");
    if (w == 0) continue;
    const LiftedAtom& a = atoms[idx];
    if (!atoms_.empty() && atoms_.back().x == a.x && a.u - atoms_.back().u <= kAtomMergeTol) {
      weights_.back() += w;
    } else {
      atoms_.push_back(a);
      weights_.push_back(w);
    }
  }
  mass_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

LiftedMeasure LiftedMeasure::with_label(const DiscreteMeasure& m, double u) {
  std::vector<LiftedAtom> atoms;
  for (double x : m.atoms()) atoms.push_back({x, u});
  return LiftedMeasure(std::move(atoms), m.weights());
}

DiscreteMeasure LiftedMeasure::projection_x() const {
  std::vector<double> xs;
  for (const auto& a : atoms_) xs.push_back(a.x);
  return DiscreteMeasure(std::move(xs), weights_);
}

DiscreteMeasure LiftedMeasure::projection_u() const {
  std::vector<double> us;
  for (const auto& a : atoms_) us.push_back(a.u);
  return DiscreteMeasure(std::move(us), weights_);
}

LiftedMeasure LiftedMeasure::scaled(double factor) const {
  std::vector<double> w = weights_;
  for (double& v : w) v *= factor;
  return LiftedMeasure(atoms_, std::move(w));
}

QuantileView::QuantileView(const DiscreteMeasure& m) : atoms_(m.atoms()) {
  cumulative_.reserve(atoms_.size());
  double acc = 0.0;
  for (double w : m.weights()) {
    acc += w;
    cumulative_.push_back(acc);
  }
}

double QuantileView::quantile(double t) const {
  if (atoms_.empty()) throw MeasureError("empty measure");
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), t);
  if (it == cumulative_.end()) return atoms_.back();
  return atoms_[it - cumulative_.begin()];
}

double QuantileView::cdf(double x) const {
  auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
  if (it == atoms_.begin()) return 0.0;
  return cumulative_[(it - atoms_.begin()) - 1];
}

double mean(const DiscreteMeasure& m) {
  if (m.empty()) throw MeasureError("empty measure");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.atom(i) * m.weight(i);
  return s / m.mass();
}

double wasserstein_line(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  if (a.empty() || b.empty()) throw MeasureError("empty measure");
  if (p < 1.0) throw MeasureError("p must be >= 1");
  double scale = std::max({1.0, a.mass(), b.mass()});
  if (std::abs(a.mass() - b.mass()) > 1e-12 * scale) throw MeasureError("mass mismatch");
  // Sweep the merged cumulative levels; between two levels both quantile
  // functions are constant.
  std::size_t i = 0, j = 0;
  double ca = a.weight(0), cb = b.weight(0);
  double level = 0.0, total = 0.0;
  const double mass = std::min(a.mass(), b.mass());
  while (true) {
    double next = std::min({ca, cb, mass});
    double d = std::abs(a.atom(i) - b.atom(j));
    total += (next - level) * (p == 1.0 ? d : std::pow(d, p));
    level = next;
    if (level >= mass) break;
    bool adv_a = ca <= next && i + 1 < a.size();
    bool adv_b = cb <= next && j + 1 < b.size();
    if (!adv_a && !adv_b) break;
    if (adv_a) ca += a.weight(++i);
    if (adv_b) cb += b.weight(++j);
  }
  return p == 1.0 ? total : std::pow(total, 1.0 / p);
}

ConvexOrderCheck check_convex_order(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  ConvexOrderCheck out;
  double scale = std::max({1.0, a.mass(), b.mass()});
  if (std::abs(a.mass() - b.mass()) > 1e-12 * scale) {
    out.ordered = false;
    out.max_excess = std::abs(a.mass() - b.mass());
    return out;
  }
  if (a.empty()) {
    out.ordered = true;
    return out;
  }
  auto potential_at = [](const DiscreteMeasure& m, double y) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) s += m.weight(k) * std::abs(y - m.atom(k));
    return s;
  };
  double first_a = 0, first_b = 0;
  for (std::size_t k = 0; k < a.size(); ++k) first_a += a.atom(k) * a.weight(k);
  for (std::size_t k = 0; k < b.size(); ++k) first_b += b.atom(k) * b.weight(k);
  // Asymptotically u_a - u_b tends to (first_b - first_a) at +inf and to
  // (first_a - first_b) at -inf.
  double lo = std::min(a.min_atom(), b.min_atom());
  double hi = std::max(a.max_atom(), b.max_atom());
  out.max_excess = std::abs(first_a - first_b);
  double arg = first_a < first_b ? hi : lo;
  std::vector<double> pts = a.atoms();
  pts.insert(pts.end(), b.atoms().begin(), b.atoms().end());
  for (double y : pts) {
    double d = potential_at(a, y) - potential_at(b, y);
    if (d > out.max_excess) {
      out.max_excess = d;
      arg = y;
    }
  }
  out.ordered = out.max_excess <= tol;
  if (!out.ordered) out.witness = arg;
  return out;
}

DiscreteMeasure quantile_discretize(const DiscreteMeasure& m, std::size_t k) {
  if (m.empty()) throw MeasureError("empty measure");
  if (k == 0) throw MeasureError("k must be positive");
  const double mass = m.mass();
  const double cell = mass / static_cast<double>(k);
  std::vector<double> cum(m.size() + 1, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) cum[i + 1] = cum[i] + m.weight(i);
  std::vector<double> atoms(k), weights(k, cell);
  std::size_t start = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double lo = cell * static_cast<double>(c);
    double hi = c + 1 == k ? mass : cell * static_cast<double>(c + 1);
    while (start + 1 < m.size() && cum[start + 1] <= lo) ++start;
    double first = 0.0;
    for (std::size_t i = start; i < m.size() && cum[i] < hi; ++i) {
      double overlap = std::min(hi, cum[i + 1]) - std::max(lo, cum[i]);
      if (overlap > 0) first += overlap * m.atom(i);
    }
    atoms[c] = first / (hi - lo);
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

double total_variation(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j >= b.size() || (i < a.size() && a.atom(i) < b.atom(j) - kAtomMergeTol)) {
      s += a.weight(i++);
    } else if (i >= a.size() || b.atom(j) < a.atom(i) - kAtomMergeTol) {
      s += b.weight(j++);
    } else {
      s += std::abs(a.weight(i++) - b.weight(j++));
    }
  }
  return 0.5 * s;
}

double total_variation(const LiftedMeasure& a, const LiftedMeasure& b) {
  auto less = [](const LiftedAtom& p, const LiftedAtom& q) {
    if (std::abs(p.x - q.x) > kAtomMergeTol) return p.x < q.x;
    if (std::abs(p.u - q.u) > kAtomMergeTol) return p.u < q.u;
    return false;
  };
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j >= b.size() || (i < a.size() && less(a.atoms()[i], b.atoms()[j]))) {
      s += a.weights()[i++];
    } else if (i >= a.size() || less(b.atoms()[j], a.atoms()[i])) {
      s += b.weights()[j++];
    } else {
      s += std::abs(a.weights()[i++] - b.weights()[j++]);
    }
  }
  return 0.5 * s;
}

}  // namespace mot
