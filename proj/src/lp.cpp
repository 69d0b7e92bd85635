#include "mot/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mot::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

std::size_t LinearProgram::add_variable(double cost, double lower, double upper) {
  cost_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  return cost_.size() - 1;
}

std::size_t LinearProgram::add_row(std::vector<std::pair<std::size_t, double>> entries, RowType type,
                                   double rhs) {
  Row r;
  r.entries = std::move(entries);
  r.type = type;
  r.rhs = rhs;
  rows_.push_back(std::move(r));
  return rows_.size() - 1;
}

void LinearProgram::set_bounds(std::size_t j, double lower, double upper) {
  lower_.at(j) = lower;
  upper_.at(j) = upper;
}

void LinearProgram::validate() const {
  const std::size_t n = cost_.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(cost_[j])) throw LPError("non-finite cost");
    if (lower_[j] > upper_[j]) throw LPError("empty variable bounds");
    if (std::isinf(lower_[j]) && lower_[j] > 0) throw LPError("lower bound +inf");
    if (std::isinf(upper_[j]) && upper_[j] < 0) throw LPError("upper bound -inf");
  }
  for (const auto& r : rows_) {
    if (!std::isfinite(r.rhs)) throw LPError("non-finite rhs");
    for (const auto& [j, a] : r.entries) {
      if (j >= n) throw LPError("row references unknown variable");
      if (!std::isfinite(a)) throw LPError("non-finite coefficient");
    }
  }
}

double max_violation(const LinearProgram& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    worst = std::max(worst, p.lower()[j] - x[j]);
    worst = std::max(worst, x[j] - p.upper()[j]);
  }
  for (const auto& r : p.rows()) {
    double s = 0.0;
    for (const auto& [j, a] : r.entries) s += a * x[j];
    double v = s - r.rhs;
    switch (r.type) {
      case RowType::Equal: worst = std::max(worst, std::abs(v)); break;
      case RowType::LessEqual: worst = std::max(worst, v); break;
      case RowType::GreaterEqual: worst = std::max(worst, -v); break;
    }
  }
  return worst;
}

namespace {

using SparseCol = std::vector<std::pair<int, double>>;

// min c'x, Ax = b, x >= 0, b >= 0 together with the map back to the
// caller's variables and rows.
struct StandardForm {
  int m = 0;
  std::vector<SparseCol> cols;
  std::vector<double> b;
  std::vector<double> c;
  // Original variable j = offset[j] + sum coef * x_std[col].
  std::vector<double> offset;
  std::vector<std::vector<std::pair<int, double>>> var_map;
  // Sign applied to each original row when b was made nonnegative.
  std::vector<double> row_sign;
  std::vector<int> slack_of_row;
  std::vector<double> row_scale;
  std::vector<double> col_scale;
  double obj_sign = 1.0;
};

StandardForm to_standard_form(const LinearProgram& p) {
  StandardForm sf;
  const std::size_t n = p.num_variables();
  sf.obj_sign = p.sense() == Sense::Maximize ? -1.0 : 1.0;
  sf.offset.assign(n, 0.0);
  sf.var_map.resize(n);
  auto new_col = [&](double cost) {
    sf.cols.emplace_back();
    sf.c.push_back(cost);
    return static_cast<int>(sf.cols.size()) - 1;
  };
  // Extra rows coming from finite upper bounds: (col, width).
  std::vector<std::pair<int, double>> upper_rows;
  for (std::size_t j = 0; j < n; ++j) {
    double l = p.lower()[j], u = p.upper()[j];
    double cj = sf.obj_sign * p.cost()[j];
    if (std::isfinite(l)) {
      int col = new_col(cj);
      sf.offset[j] = l;
      sf.var_map[j].push_back({col, 1.0});
      if (std::isfinite(u)) upper_rows.push_back({col, u - l});
    } else if (std::isfinite(u)) {
      int col = new_col(-cj);
      sf.offset[j] = u;
      sf.var_map[j].push_back({col, -1.0});
    } else {
      int cp = new_col(cj);
      int cm = new_col(-cj);
      sf.var_map[j].push_back({cp, 1.0});
      sf.var_map[j].push_back({cm, -1.0});
    }
  }
  const int m_orig = static_cast<int>(p.num_rows());
  sf.m = m_orig + static_cast<int>(upper_rows.size());
  sf.b.assign(sf.m, 0.0);
  sf.row_sign.assign(sf.m, 1.0);
  sf.slack_of_row.assign(sf.m, -1);
  for (int i = 0; i < m_orig; ++i) {
    const Row& r = p.rows()[i];
    double b = r.rhs;
    for (const auto& [j, a] : r.entries) {
      if (a == 0.0) continue;
      b -= a * sf.offset[j];
      for (const auto& [col, coef] : sf.var_map[j]) sf.cols[col].push_back({i, a * coef});
    }
    if (r.type != RowType::Equal) {
      int s = new_col(0.0);
      sf.cols[s].push_back({i, r.type == RowType::LessEqual ? 1.0 : -1.0});
      sf.slack_of_row[i] = s;
    }
    sf.b[i] = b;
  }
  for (std::size_t k = 0; k < upper_rows.size(); ++k) {
    int i = m_orig + static_cast<int>(k);
    sf.cols[upper_rows[k].first].push_back({i, 1.0});
    int s = new_col(0.0);
    sf.cols[s].push_back({i, 1.0});
    sf.slack_of_row[i] = s;
    sf.b[i] = upper_rows[k].second;
  }
  // Merge duplicate row indices inside a column (a variable listed twice).
  for (auto& col : sf.cols) {
    std::sort(col.begin(), col.end());
    SparseCol merged;
    for (const auto& e : col) {
      if (!merged.empty() && merged.back().first == e.first) {
        merged.back().second += e.second;
      } else {
        merged.push_back(e);
      }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const auto& e) { return e.second == 0.0; }),
                 merged.end());
    col = std::move(merged);
  }
  for (int i = 0; i < sf.m; ++i) {
    if (sf.b[i] < 0) {
      sf.row_sign[i] = -1.0;
      sf.b[i] = -sf.b[i];
    }
  }
  for (auto& col : sf.cols) {
    for (auto& e : col) e.second *= sf.row_sign[e.first];
  }
  sf.row_scale.assign(sf.m, 1.0);
  sf.col_scale.assign(sf.cols.size(), 1.0);
  return sf;
}

// Equilibrate rows and then columns to unit max-norm; applied in place.
void equilibrate(StandardForm& sf) {
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> rmax(sf.m, 0.0);
    for (const auto& col : sf.cols) {
      for (const auto& [i, a] : col) rmax[i] = std::max(rmax[i], std::abs(a));
    }
    for (int i = 0; i < sf.m; ++i) {
      double s = rmax[i] > 0 ? 1.0 / rmax[i] : 1.0;
      sf.row_scale[i] *= s;
      sf.b[i] *= s;
      rmax[i] = s;
    }
    for (auto& col : sf.cols) {
      for (auto& e : col) e.second *= rmax[e.first];
    }
    for (std::size_t j = 0; j < sf.cols.size(); ++j) {
      double cmax = 0.0;
      for (const auto& e : sf.cols[j]) cmax = std::max(cmax, std::abs(e.second));
      double s = cmax > 0 ? 1.0 / cmax : 1.0;
      sf.col_scale[j] *= s;
      sf.c[j] *= s;
      for (auto& e : sf.cols[j]) e.second *= s;
    }
  }
}

// Revised simplex on a standard form with an explicit dense basis inverse.
class RevisedSimplex {
 public:
  RevisedSimplex(const StandardForm& sf, const SolverOptions& opts)
      : sf_(sf), opts_(opts), m_(sf.m), n_(static_cast<int>(sf.cols.size())) {}

  Status run(std::size_t& iterations) {
    setup_initial_basis();
    if (n_art_ > 0) {
      std::vector<double> c1(n_ + n_art_, 0.0);
      for (int k = 0; k < n_art_; ++k) c1[n_ + k] = 1.0;
      Status s = iterate(c1, iterations);
      if (s == Status::IterationLimit) return s;
      double infeas = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] >= n_) infeas += std::max(0.0, x_b_[i]);
      }
      double bnorm = 0.0;
      for (double v : sf_.b) bnorm = std::max(bnorm, v);
      if (infeas > 10.0 * opts_.feasibility_tol * std::max(1.0, bnorm)) return Status::Infeasible;
      drive_out_artificials();
    }
    std::vector<double> c2(n_ + n_art_, 0.0);
    for (int j = 0; j < n_; ++j) c2[j] = sf_.c[j];
    Status s = iterate(c2, iterations);
    if (s != Status::Optimal) return s;
    refactor();
    compute_duals(c2);
    return Status::Optimal;
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x[basis_[i]] = std::max(0.0, x_b_[i]);
    }
    return x;
  }
  const Eigen::VectorXd& duals() const { return y_; }

 private:
  double col_dot(const Eigen::VectorXd& y, int j) const {
    if (j >= n_) return y[art_row_[j - n_]];
    double s = 0.0;
    for (const auto& [i, a] : sf_.cols[j]) s += y[i] * a;
    return s;
  }

  Eigen::VectorXd ftran(int j) const {
    if (j >= n_) return binv_.col(art_row_[j - n_]);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    for (const auto& [i, a] : sf_.cols[j]) out.noalias() += a * binv_.col(i);
    return out;
  }

  void setup_initial_basis() {
    basis_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      int s = sf_.slack_of_row[i];
      if (s >= 0 && sf_.cols[s].size() == 1 && sf_.cols[s][0].second > 0) basis_[i] = s;
    }
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < 0) {
        art_row_.push_back(i);
        basis_[i] = n_ + n_art_;
        ++n_art_;
      }
    }
    in_basis_.assign(n_ + n_art_, -1);
    for (int i = 0; i < m_; ++i) in_basis_[basis_[i]] = i;
    refactor();
  }

  void refactor() {
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      int j = basis_[i];
      if (j >= n_) {
        bmat(art_row_[j - n_], i) = 1.0;
      } else {
        for (const auto& [r, a] : sf_.cols[j]) bmat(r, i) = a;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    binv_ = lu.inverse();
    Eigen::VectorXd b(m_);
    for (int i = 0; i < m_; ++i) b[i] = sf_.b[i];
    x_b_ = lu.solve(b);
    // One round of iterative refinement on the basic solution.
    x_b_ += lu.solve(b - bmat * x_b_);
    for (int i = 0; i < m_; ++i) {
      if (x_b_[i] < 0 && x_b_[i] > -opts_.feasibility_tol) x_b_[i] = 0.0;
    }
    since_refactor_ = 0;
  }

  void pivot(int r, int q, const Eigen::VectorXd& alpha, double theta) {
    x_b_.noalias() -= theta * alpha;
    x_b_[r] = theta;
    Eigen::RowVectorXd prow = binv_.row(r) / alpha[r];
    binv_.noalias() -= alpha * prow;
    binv_.row(r) = prow;
    in_basis_[basis_[r]] = -1;
    basis_[r] = q;
    in_basis_[q] = r;
    for (int i = 0; i < m_; ++i) {
      if (x_b_[i] < 0 && x_b_[i] > -opts_.feasibility_tol) x_b_[i] = 0.0;
    }
    if (++since_refactor_ >= opts_.refactor_every) refactor();
  }

  Status iterate(const std::vector<double>& c, std::size_t& iterations) {
    const double dtol = opts_.optimality_tol;
    const double ptol = 1e-9;
    std::size_t degenerate = 0;
    int cursor = 0;
    const int block = std::max(64, n_ / 8);
    while (true) {
      if (iterations >= opts_.max_iterations) return Status::IterationLimit;
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = c[basis_[i]];
      Eigen::VectorXd y = binv_.transpose() * cb;
      const bool bland = degenerate >= opts_.degenerate_limit;
      int q = -1;
      double best = -dtol;
      if (bland) {
        for (int j = 0; j < n_; ++j) {
          if (in_basis_[j] >= 0) continue;
          if (c[j] - col_dot(y, j) < -dtol) {
            q = j;
            break;
          }
        }
      } else {
        // Partial pricing: scan blocks starting at the cursor and stop at the
        // first block containing an improving column.
        int scanned = 0;
        int j = cursor;
        while (scanned < n_) {
          int end = std::min(scanned + block, n_);
          for (; scanned < end; ++scanned, j = (j + 1) % n_) {
            if (in_basis_[j] >= 0) continue;
            double d = c[j] - col_dot(y, j);
            if (d < best) {
              best = d;
              q = j;
            }
          }
          if (q >= 0) break;
        }
        cursor = j;
      }
      if (q < 0) return Status::Optimal;
      Eigen::VectorXd alpha = ftran(q);
      // Basic artificials are pinned at zero in phase two.
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] >= n_ && c[basis_[i]] == 0.0 && std::abs(alpha[i]) > ptol) {
          if (r < 0 || std::abs(alpha[i]) > std::abs(alpha[r])) r = i;
        }
      }
      double theta = 0.0;
      if (r >= 0) {
        pivot(r, q, alpha, 0.0);
        ++iterations;
        ++degenerate;
        continue;
      }
      // Harris two-pass ratio test.
      double theta_max = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (alpha[i] > ptol) theta_max = std::min(theta_max, (std::max(0.0, x_b_[i]) + opts_.feasibility_tol) / alpha[i]);
      }
      if (!std::isfinite(theta_max)) return Status::Unbounded;
      double best_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (alpha[i] <= ptol) continue;
        double ratio = std::max(0.0, x_b_[i]) / alpha[i];
        if (ratio > theta_max) continue;
        bool take;
        if (bland) {
          take = r < 0 || ratio < theta - 1e-12 || (ratio <= theta + 1e-12 && basis_[i] < basis_[r]);
        } else {
          take = alpha[i] > best_alpha;
        }
        if (take) {
          r = i;
          best_alpha = alpha[i];
          theta = ratio;
        }
      }
      theta = std::max(0.0, x_b_[r]) / alpha[r];
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
      pivot(r, q, alpha, theta);
      ++iterations;
    }
  }

  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      Eigen::RowVectorXd row = binv_.row(r);
      int q = -1;
      double best = 1e-7;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[j] >= 0) continue;
        double s = 0.0;
        for (const auto& [i, a] : sf_.cols[j]) s += row[i] * a;
        if (std::abs(s) > best) {
          best = std::abs(s);
          q = j;
        }
      }
      if (q < 0) continue;  // redundant row; the artificial stays pinned at zero
      Eigen::VectorXd alpha = ftran(q);
      pivot(r, q, alpha, x_b_[r] / alpha[r]);
    }
    refactor();
  }

  void compute_duals(const std::vector<double>& c) {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = c[basis_[i]];
    y_ = binv_.transpose() * cb;
  }

  const StandardForm& sf_;
  SolverOptions opts_;
  int m_;
  int n_;
  int n_art_ = 0;
  std::vector<int> art_row_;
  std::vector<int> basis_;
  std::vector<int> in_basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_b_;
  Eigen::VectorXd y_;
  std::size_t since_refactor_ = 0;
};

}  // namespace

LPSolution solve_lp(const LinearProgram& p, const SolverOptions& opts) {
  p.validate();
  LPSolution sol;
  const std::size_t n = p.num_variables();
  StandardForm sf = to_standard_form(p);
  if (opts.scale) equilibrate(sf);
  if (sf.m == 0) {
    // Only bounds: each variable sits at its cheaper finite bound.
    sol.primal.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double c = sf.obj_sign * p.cost()[j];
      double l = p.lower()[j], u = p.upper()[j];
      double v = c > 0 ? l : (c < 0 ? u : (std::isfinite(l) ? l : (std::isfinite(u) ? u : 0.0)));
      if (!std::isfinite(v)) {
        sol.status = Status::Unbounded;
        return sol;
      }
      sol.primal[j] = v;
    }
    sol.status = Status::Optimal;
    sol.is_vertex = true;
    for (std::size_t j = 0; j < n; ++j) sol.objective += p.cost()[j] * sol.primal[j];
    sol.reduced_cost = p.cost();
    sol.dual_objective = sol.objective;
    return sol;
  }
  RevisedSimplex simplex(sf, opts);
  sol.status = simplex.run(sol.iterations);
  if (sol.status != Status::Optimal) return sol;

  std::vector<double> xs = simplex.primal();
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= sf.col_scale[k];
  sol.primal.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = sf.offset[j];
    for (const auto& [col, coef] : sf.var_map[j]) v += coef * xs[col];
    sol.primal[j] = v;
  }
  const Eigen::VectorXd& ys = simplex.duals();
  sol.dual.assign(p.num_rows(), 0.0);
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    sol.dual[i] = sf.obj_sign * sf.row_sign[i] * sf.row_scale[i] * ys[static_cast<int>(i)];
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += p.cost()[j] * sol.primal[j];
  sol.primal_residual = max_violation(p, sol.primal);

  // Dual certificate in the caller's convention. For minimization reduced
  // costs must be >= 0 at lower bounds, <= 0 at upper bounds, 0 in between.
  sol.reduced_cost = p.cost();
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    for (const auto& [j, a] : p.rows()[i].entries) sol.reduced_cost[j] -= a * sol.dual[i];
  }
  const double sgn = sf.obj_sign;
  double dobj = 0.0, dinf = 0.0;
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    dobj += p.rows()[i].rhs * sol.dual[i];
    double yi = sgn * sol.dual[i];
    if (p.rows()[i].type == RowType::LessEqual) dinf = std::max(dinf, yi);
    if (p.rows()[i].type == RowType::GreaterEqual) dinf = std::max(dinf, -yi);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double d = sol.reduced_cost[j];
    double ds = sgn * d;
    double l = p.lower()[j], u = p.upper()[j];
    double bound;
    if (ds > 0 && std::isfinite(l)) {
      bound = l;
    } else if (ds < 0 && std::isfinite(u)) {
      bound = u;
    } else {
      bound = sol.primal[j];
      dinf = std::max(dinf, std::abs(d));
    }
    dobj += d * bound;
  }
  sol.dual_objective = dobj;
  sol.dual_infeasibility = dinf;
  sol.is_vertex = true;
  return sol;
}

std::vector<std::vector<double>> enumerate_vertices(const LinearProgram& p, std::size_t max_vertices) {
  p.validate();
  StandardForm sf = to_standard_form(p);
  const int ncols = static_cast<int>(sf.cols.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(sf.m, ncols);
  for (int j = 0; j < ncols; ++j) {
    for (const auto& [i, v] : sf.cols[j]) a(i, j) = v;
  }
  Eigen::VectorXd b(sf.m);
  for (int i = 0; i < sf.m; ++i) b[i] = sf.b[i];
  // Drop columns that are zero in every row and carry no freedom: a
  // nonnegative variable absent from all rows makes the region unbounded.
  for (int j = 0; j < ncols; ++j) {
    if (a.col(j).cwiseAbs().maxCoeff() == 0.0 && sf.m > 0) throw LPError("unbounded region");
  }
  if (ncols > static_cast<int>(kVertexGuard)) throw LPError("vertex enumeration guard exceeded");
  // Presolve: keep a maximal set of independent rows.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  Eigen::MatrixXd ar(rank, ncols);
  Eigen::VectorXd br(rank);
  for (int k = 0; k < rank; ++k) {
    int row = static_cast<int>(qr.colsPermutation().indices()[k]);
    ar.row(k) = a.row(row);
    br[k] = b[row];
  }

  std::vector<std::vector<double>> out;
  std::vector<int> pick(rank);
  for (int k = 0; k < rank; ++k) pick[k] = k;
  auto emit = [&](const Eigen::VectorXd& xs) {
    std::vector<double> x(p.num_variables());
    for (std::size_t j = 0; j < p.num_variables(); ++j) {
      double v = sf.offset[j];
      for (const auto& [col, coef] : sf.var_map[j]) v += coef * xs[col];
      x[j] = v;
    }
    for (const auto& prev : out) {
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) d = std::max(d, std::abs(prev[j] - x[j]));
      if (d <= 1e-9) return;
    }
    out.push_back(std::move(x));
  };
  if (rank == 0) {
    emit(Eigen::VectorXd::Zero(ncols));
    return out;
  }
  while (true) {
    Eigen::MatrixXd bm(rank, rank);
    for (int k = 0; k < rank; ++k) bm.col(k) = ar.col(pick[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bm);
    lu.setThreshold(1e-10);
    if (lu.rank() == rank) {
      Eigen::VectorXd xb = lu.solve(br);
      if (xb.minCoeff() >= -1e-9) {
        Eigen::VectorXd xs = Eigen::VectorXd::Zero(ncols);
        for (int k = 0; k < rank; ++k) xs[pick[k]] = std::max(0.0, xb[k]);
        if ((a * xs - b).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + b.cwiseAbs().maxCoeff())) {
          emit(xs);
          if (out.size() >= max_vertices) break;
        }
      }
    }
    int k = rank - 1;
    while (k >= 0 && pick[k] == ncols - rank + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int t = k + 1; t < rank; ++t) pick[t] = pick[t - 1] + 1;
  }
  return out;
}

void write_lp(std::ostream& os, const LinearProgram& p) {
  os << std::setprecision(17);
  os << "sense " << (p.sense() == Sense::Minimize ? "min" : "max") << '\n';
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    os << "var " << j << " cost " << p.cost()[j] << " lower " << p.lower()[j] << " upper " << p.upper()[j]
       << '\n';
  }
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    const Row& r = p.rows()[i];
    const char* t = r.type == RowType::Equal ? "eq" : (r.type == RowType::LessEqual ? "le" : "ge");
    os << "row " << i << ' ' << t << ' ' << r.rhs << " :";
    for (const auto& [j, a] : r.entries) os << ' ' << j << ':' << a;
    os << '\n';
  }
}

namespace {
double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  return std::stod(s);
}
}  // namespace

LinearProgram read_lp(std::istream& is) {
  LinearProgram p;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "sense") {
      std::string s;
      ls >> s;
      p.set_sense(s == "max" ? Sense::Maximize : Sense::Minimize);
    } else if (kind == "var") {
      std::string idx, kc, c, kl, l, ku, u;
      ls >> idx >> kc >> c >> kl >> l >> ku >> u;
      p.add_variable(parse_double(c), parse_double(l), parse_double(u));
    } else if (kind == "row") {
      std::string idx, t, rhs, colon;
      ls >> idx >> t >> rhs >> colon;
      std::vector<std::pair<std::size_t, double>> entries;
      std::string tok;
      while (ls >> tok) {
        auto pos = tok.find(':');
        if (pos == std::string::npos) throw LPError("bad row entry: " + tok);
        entries.push_back({std::stoul(tok.substr(0, pos)), parse_double(tok.substr(pos + 1))});
      }
      RowType type = t == "eq" ? RowType::Equal : (t == "le" ? RowType::LessEqual : RowType::GreaterEqual);
      p.add_row(std::move(entries), type, parse_double(rhs));
    } else {
      throw LPError("unknown LP line: " + line);
    }
  }
  return p;
}

}  // namespace mot::lp
