#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mot::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class RowType { Equal, LessEqual, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status s);

struct Row {
  std::vector<std::pair<std::size_t, double>> entries;
  RowType type = RowType::Equal;
  double rhs = 0.0;
};

class LPError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sparse linear program:  optimize c'x  subject to  rows, lower <= x <= upper.
class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

  std::size_t add_variable(double cost, double lower = 0.0, double upper = kInf);
  std::size_t add_row(std::vector<std::pair<std::size_t, double>> entries, RowType type, double rhs);

  void set_cost(std::size_t j, double c) { cost_.at(j) = c; }
  void set_bounds(std::size_t j, double lower, double upper);
  void set_sense(Sense s) { sense_ = s; }

  Sense sense() const { return sense_; }
  std::size_t num_variables() const { return cost_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<Row>& rows() const { return rows_; }

  // Throws LPError on dimension mismatch or non-finite data.
  void validate() const;

 private:
  Sense sense_;
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Row> rows_;
};

struct SolverOptions {
  std::size_t max_iterations = 200000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  // Pivots between fresh factorizations of the basis.
  std::size_t refactor_every = 64;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_limit = 40;
  bool scale = true;
};

struct LPSolution {
  Status status = Status::Infeasible;
  std::vector<double> primal;
  // Sensitivity of the optimal objective with respect to each row's rhs.
  std::vector<double> dual;
  // Reduced costs c - A'y in the caller's sign convention.
  std::vector<double> reduced_cost;
  double objective = 0.0;
  // Objective of the dual certificate (rows plus active bounds).
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  // Largest sign violation among reduced costs and row duals.
  double dual_infeasibility = 0.0;
  bool is_vertex = false;
  std::size_t iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

LPSolution solve_lp(const LinearProgram& p, const SolverOptions& opts = {});

// Largest row violation of x (bounds included).
double max_violation(const LinearProgram& p, const std::vector<double>& x);

// All vertices of a bounded feasible region with at most 12 structural plus
// slack columns after dropping dependent rows. Throws LPError when the guard
// is exceeded.
std::vector<std::vector<double>> enumerate_vertices(const LinearProgram& p,
                                                     std::size_t max_vertices = 100000);

inline constexpr std::size_t kVertexGuard = 12;

// Plain-text format:
//   sense min|max
//   var <j> cost <c> lower <l> upper <u>
//   row <i> eq|le|ge <rhs> : <j>:<a> <j>:<a> ...
void write_lp(std::ostream& os, const LinearProgram& p);
LinearProgram read_lp(std::istream& is);

}  // namespace mot::lp
