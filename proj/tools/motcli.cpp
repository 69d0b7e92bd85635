// Command line front end. Every subcommand reads its marginals from a JSON
// problem file (--input) and writes a JSON result to stdout or --out.
//
// Exit codes: 0 success, 2 invalid configuration or input, 3 solver failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "mot/approximation.hpp"
#include "mot/convex_order.hpp"
#include "mot/io.hpp"
#include "mot/stability.hpp"

namespace fs = std::filesystem;
using mot::io::Json;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

// Raised for problems with the user's input, as opposed to solver failures.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Problem {
  mot::LiftedMeasure mu_bar;
  mot::DiscreteMeasure nu;
  Json raw;
};

Problem load_problem(const fs::path& path) {
  try {
    Problem p;
    p.raw = mot::io::read_json_file(path);
    const fs::path dir = path.parent_path();
    auto measure = [&](const Json& v) {
      return v.is_string() ? mot::io::load_measure(dir / v.get<std::string>()) : mot::io::measure_from_json(v);
    };
    if (p.raw.contains("mu_bar")) {
      const Json& v = p.raw.at("mu_bar");
      p.mu_bar = v.is_string() ? mot::io::load_lifted(dir / v.get<std::string>()) : mot::io::lifted_from_json(v);
    } else if (p.raw.contains("mu")) {
      p.mu_bar = mot::LiftedMeasure::with_label(measure(p.raw.at("mu")), 0.0);
    } else {
      throw InputError("problem file needs \"mu\" or \"mu_bar\"");
    }
    if (!p.raw.contains("nu")) throw InputError("problem file needs \"nu\"");
    p.nu = measure(p.raw.at("nu"));
    return p;
  } catch (const mot::io::IoError& e) {
    throw InputError(e.what());
  } catch (const mot::MeasureError& e) {
    throw InputError(e.what());
  } catch (const Json::exception& e) {
    throw InputError(e.what());
  }
}

void write_result(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    mot::io::write_text_file(out, j.dump(2) + "\n");
  }
}

mot::Copula copula_from_string(const std::string& s) {
  if (s == "hf" || s == "hoeffding_frechet") return mot::Copula::HoeffdingFrechet;
  if (s == "independence") return mot::Copula::Independence;
  throw InputError("unknown copula \"" + s + "\" (hf or independence)");
}

Json barriers_json(const mot::BarrierExtraction& b) {
  Json maps = Json::array();
  for (const auto& e : b.maps) maps.push_back({{"x", e.x}, {"u", e.u}, {"weight", e.weight}, {"t1", e.t1}, {"t2", e.t2}});
  return {{"maps", maps}, {"excluded_count", b.excluded_count}, {"excluded_mass", b.excluded_mass}};
}

mot::ReportFormat format_for(const fs::path& p) {
  if (p.extension() == ".json") return mot::ReportFormat::Json;
  if (p.extension() == ".dat" || p.extension() == ".plot") return mot::ReportFormat::PlotData;
  return mot::ReportFormat::Csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Martingale optimal transport solvers and stability experiments"};
  app.require_subcommand(1);

  std::string input, out, cost = "abs", convex_cost = "abs_moment_squared", copula = "hf", coupling_path, config;
  std::size_t bins = 200, m = 16;
  double tau = 1.0, strike = 0.0, eps = 0.05;
  bool maximize = false;

  auto add_io = [&](CLI::App* sub) {
    sub->add_option("--input,-i", input, "Problem JSON with mu (or mu_bar) and nu")->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", out, "Write the result here instead of stdout");
  };

  CLI::App* mot_cmd = app.add_subcommand("mot", "Martingale transport LP on the x-marginal");
  add_io(mot_cmd);
  mot_cmd->add_option("--cost", cost, "abs, neg_abs, square, cube, y2, call:K, put:K");
  mot_cmd->add_flag("--max", maximize, "Maximize instead of minimize");

  CLI::App* emot_cmd = app.add_subcommand("emot", "Martingale transport LP on the labelled marginal");
  add_io(emot_cmd);
  emot_cmd->add_option("--cost", cost);
  emot_cmd->add_flag("--max", maximize);

  CLI::App* wmot_cmd = app.add_subcommand("wmot", "Weak transport with a convex kernel cost (Frank-Wolfe)");
  add_io(wmot_cmd);
  wmot_cmd->add_option("--cost", convex_cost, "abs_moment_squared or second_moment_squared");

  CLI::App* amer_cmd = app.add_subcommand("amer", "Robust American put price");
  add_io(amer_cmd);
  amer_cmd->add_option("--strike,-K", strike);

  CLI::App* vix_cmd = app.add_subcommand("vix", "VIX bounds from the binned relaxation");
  add_io(vix_cmd);
  vix_cmd->add_option("--bins", bins)->check(CLI::PositiveNumber);
  vix_cmd->add_option("--tau", tau)->check(CLI::PositiveNumber);

  CLI::App* shadow_cmd = app.add_subcommand("shadow", "Shadow coupling of a copula lift and its barriers");
  add_io(shadow_cmd);
  shadow_cmd->add_option("--copula", copula, "hf or independence");
  shadow_cmd->add_option("--m", m, "Number of labels")->check(CLI::PositiveNumber);

  CLI::App* dec_cmd = app.add_subcommand("decompose", "Irreducible components of the x-marginal and nu");
  add_io(dec_cmd);

  CLI::App* approx_cmd = app.add_subcommand("approx", "Approximate a coupling by one with new marginals");
  add_io(approx_cmd);
  approx_cmd->add_option("--coupling", coupling_path, "Coupling JSON to approximate")
      ->required()
      ->check(CLI::ExistingFile);
  approx_cmd->add_option("--eps", eps)->check(CLI::Range(1e-12, 1.0));

  CLI::App* stab_cmd = app.add_subcommand("stability", "Run a stability experiment");
  stab_cmd->add_option("--config,-c", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  stab_cmd->add_option("--out,-o", out, "Extra report file; format from the extension (.csv, .json, .dat)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (stab_cmd->parsed()) {
      mot::ExperimentConfig c;
      try {
        c = mot::config_from_json(mot::io::read_json_file(config), fs::path(config).parent_path());
      } catch (const mot::io::IoError& e) {
        throw InputError(e.what());
      }
      mot::StabilityReport r = mot::run_stability(c);
      bool wrote = false;
      if (!c.csv_path.empty()) mot::emit(r, mot::ReportFormat::Csv, c.csv_path), wrote = true;
      if (!c.json_path.empty()) mot::emit(r, mot::ReportFormat::Json, c.json_path), wrote = true;
      if (!c.plot_path.empty()) mot::emit(r, mot::ReportFormat::PlotData, c.plot_path), wrote = true;
      if (!out.empty()) mot::emit(r, format_for(out), out), wrote = true;
      if (!wrote) std::cout << mot::format_report(r, mot::ReportFormat::Csv);
      bool failed = !r.base_error.empty();
      for (const auto& row : r.rows) failed = failed || !row.error.empty();
      if (failed) std::cerr << "some rows failed; see the error column\n";
      return failed ? kSolverError : 0;
    }

    const Problem p = load_problem(input);
    const mot::DiscreteMeasure mu = p.mu_bar.projection_x();
    const auto sense = maximize ? mot::lp::Sense::Maximize : mot::lp::Sense::Minimize;
    Json result;
    if (mot_cmd->parsed() || emot_cmd->parsed()) {
      mot::CostSpec c = [&] {
        try {
          return mot::named_cost(cost);
        } catch (const mot::ConfigError& e) {
          throw InputError(e.what());
        }
      }();
      mot::MotResult r = mot_cmd->parsed() ? mot::solve_mot(mu, p.nu, c, sense)
                                           : mot::solve_extended_mot(p.mu_bar, p.nu, c, sense);
      result = {{"value", r.value}, {"is_vertex", r.is_vertex}, {"coupling", mot::io::to_json(r.coupling)}};
    } else if (wmot_cmd->parsed()) {
      mot::ConvexCost c = [&] {
        try {
          return mot::named_convex_cost(convex_cost);
        } catch (const mot::ConfigError& e) {
          throw InputError(e.what());
        }
      }();
      mot::FrankWolfeResult r = mot::solve_wmot_fw(p.mu_bar, p.nu, c);
      result = {{"value", r.value},           {"fw_gap", r.fw_gap},
                {"iterations", r.iterations}, {"converged", r.converged},
                {"coupling", mot::io::to_json(r.coupling)}};
    } else if (amer_cmd->parsed()) {
      std::vector<double> phi1;
      for (double x : mu.atoms()) phi1.push_back(std::max(strike - x, 0.0));
      const double k = strike;
      mot::AmericanResult r = mot::price_american(mu, p.nu, phi1, [k](double, double y) { return std::max(k - y, 0.0); });
      result = {{"value", r.value}, {"exercise_mass", r.exercise_mass}, {"continue_mass", r.continue_mass}};
    } else if (vix_cmd->parsed()) {
      mot::VixDualResult d = mot::vix_dual_lp(mu, p.nu, tau, bins);
      mot::VixPrimalResult pr = mot::vix_primal_lp(mu, p.nu, tau, d.edges);
      result = {{"d_lo", d.d_lo}, {"d_hi", d.d_hi}, {"gap", d.d_hi - d.d_lo}, {"primal", pr.p_value}, {"bins", bins}};
    } else if (shadow_cmd->parsed()) {
      mot::LiftedMeasure lift = mot::copula_lift(mu, copula_from_string(copula), m);
      mot::MotResult r = mot::shadow_coupling(lift, p.nu);
      mot::BarrierExtraction b = mot::extract_barriers(r.coupling);
      result = {{"value", r.value},
                {"barriers", barriers_json(b)},
                {"barrier_violation", mot::barrier_monotonicity_violation(b)},
                {"left_monotone_violation", mot::left_monotone_violation(r.coupling)},
                {"coupling", mot::io::to_json(r.coupling)}};
    } else if (dec_cmd->parsed()) {
      mot::IrreducibleDecomposition d = mot::irreducible_decomposition(mu, p.nu);
      Json comps = Json::array();
      for (const auto& c : d.components)
        comps.push_back({{"left", c.left}, {"right", c.right}, {"mu", mot::io::to_json(c.mu)}, {"nu", mot::io::to_json(c.nu)}});
      result = {{"components", comps}, {"stationary", mot::io::to_json(d.stationary)}};
    } else if (approx_cmd->parsed()) {
      mot::DiscreteCoupling pi = [&] {
        try {
          // Accepts a bare coupling or the output of mot, emot, wmot or shadow.
          Json j = mot::io::read_json_file(coupling_path);
          return mot::io::coupling_from_json(j.contains("coupling") ? j.at("coupling") : j);
        } catch (const std::exception& e) {
          throw InputError(e.what());
        }
      }();
      mot::ApproximationOptions opts;
      opts.eps = eps;
      mot::ApproximationResult r = mot::approximate_coupling(pi, p.mu_bar, p.nu, opts);
      result = {{"aw1", r.aw1},
                {"aw1_bound", r.aw1_bound},
                {"first_marginal_error", r.first_marginal_error},
                {"second_marginal_error", r.second_marginal_error},
                {"coupling", mot::io::to_json(r.coupling)}};
    }
    write_result(result, out);
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const mot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const mot::ConvexOrderError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolverError;
  }
}
