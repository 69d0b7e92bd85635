#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mot/io.hpp"
#include "mot/measures.hpp"
#include "mot/solvers.hpp"

namespace mot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Costs c(x, y) by name: "abs" |y-x|, "neg_abs" -|y-x|, "square" (y-x)^2,
// "cube" (y-x)^3, "y2" y^2, "call:K" (y-K)^+, "put:K" (K-y)^+.
CostSpec named_cost(const std::string& name);

// Convex kernel costs by name: "abs_moment_squared" (int |y| rho)^2 and
// "second_moment_squared" (int y^2 rho)^2.
ConvexCost named_convex_cost(const std::string& name);

enum class Perturbation { QuantileDiscretize, AtomJitter, MassJitter };
const char* to_string(Perturbation p);
Perturbation perturbation_from_string(const std::string& s);

struct ExperimentConfig {
  std::string name = "experiment";
  LiftedMeasure mu_bar;
  DiscreteMeasure nu;
  Perturbation family = Perturbation::AtomJitter;
  // Strictly decreasing and nonnegative.
  std::vector<double> scales;
  // Any of: mot, emot, wmot, amer, vix, shadow, approx, hausdorff.
  std::vector<std::string> problems;
  std::string cost = "abs";
  std::string convex_cost = "abs_moment_squared";
  double p = 1.0;
  std::uint64_t seed = 1;
  double tau = 1.0;
  std::size_t bins = 100;
  double strike = 0.0;
  std::size_t copula_m = 16;
  // |T1' - T1| + |T2' - T2| above this counts as barrier exceedance.
  double barrier_threshold = 1e-2;
  // Mixing weight of the approximation pipeline; 0 uses the row's scale.
  double approx_eps = 0.0;
  bool timings = false;
  std::filesystem::path csv_path, json_path, plot_path;
};

// Throws ConfigError on invalid settings.
void validate(const ExperimentConfig& c);

// Keys mirror the struct fields. "mu_bar" (or "mu", labelled 0) and "nu" are
// inline measure objects or paths relative to base_dir.
ExperimentConfig config_from_json(const io::Json& j, const std::filesystem::path& base_dir = ".");

struct PerturbedPair {
  LiftedMeasure mu_bar;
  DiscreteMeasure nu;
};

// Perturbation at one scale. Directions come from the seed alone, so the
// pairs for different scales lie on one path. quantile_discretize keeps
// mu_bar and replaces nu by its ceil(1/scale)-cell discretization;
// atom_jitter moves atoms by scale * U[-1, 1]; mass_jitter multiplies weights
// by 1 + scale * U[-1, 1] and renormalizes. Every family then repairs the
// order by projecting nu onto the measures dominating the new x-marginal.
// Scale 0 returns the input unchanged.
PerturbedPair perturb(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu, Perturbation family, double scale,
                      std::uint64_t seed);

struct StabilityRow {
  double scale = 0.0;
  // Aligned with StabilityReport::columns; NaN where a stage failed.
  std::vector<double> values;
  // "<stage>: <reason>" when the row was aborted.
  std::string error;
  double seconds = 0.0;
};

struct StabilityReport {
  static constexpr int kSchemaVersion = 1;
  int schema_version = kSchemaVersion;
  std::string name;
  std::string family;
  std::uint64_t seed = 0;
  bool timings = false;
  std::vector<std::string> columns;
  // Values on the unperturbed pair.
  std::vector<double> base;
  std::string base_error;
  std::vector<StabilityRow> rows;

  // Index of a column; throws std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
  // Column values over rows.
  std::vector<double> series(const std::string& name) const;
};

StabilityReport run_stability(const ExperimentConfig& config);

enum class ReportFormat { Csv, Json, PlotData };

// Numbers are written with 17 significant digits, which round-trips every
// double exactly; NaN is "nan" in CSV and null in JSON.
std::string format_report(const StabilityReport& r, ReportFormat f);
void emit(const StabilityReport& r, ReportFormat f, const std::filesystem::path& path);

StabilityReport report_from_json(const io::Json& j);
StabilityReport report_from_csv(const std::string& text);

}  // namespace mot
