#include "mot/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "mot/approximation.hpp"
#include "mot/convex_order.hpp"

namespace mot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string>& known_problems() {
  static const std::vector<std::string> p{"mot", "emot", "wmot", "amer", "vix", "shadow", "approx", "hausdorff"};
  return p;
}

std::vector<std::string> problem_columns(const std::string& problem) {
  if (problem == "mot") return {"mot_value", "mot_gap"};
  if (problem == "emot") return {"emot_value", "emot_gap"};
  if (problem == "wmot") return {"wmot_value", "wmot_gap", "wmot_fw_gap"};
  if (problem == "amer") return {"amer_value", "amer_gap"};
  if (problem == "vix") return {"vix_lo", "vix_hi", "vix_lo_gap", "vix_hi_gap"};
  if (problem == "shadow")
    return {"shadow_value", "shadow_gap", "shadow_lift_tv", "barrier_exceedance", "barrier_excluded_mass"};
  if (problem == "approx") return {"approx_aw1", "approx_marginal_error", "approx_step3_violations"};
  if (problem == "hausdorff") return {"hausdorff_lower", "hausdorff_upper", "hausdorff_exact"};
  throw ConfigError("unknown problem \"" + problem + "\"");
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid number in " + what + ": \"" + s + "\"");
  }
  if (used != s.size()) throw ConfigError("invalid number in " + what + ": \"" + s + "\"");
  return v;
}

double pos(double v) { return std::max(v, 0.0); }

// State of the unperturbed pair that later rows compare against.
struct BaseState {
  std::map<std::string, double> values;
  std::optional<BarrierExtraction> barriers;
  LiftedMeasure shadow_lift;
  std::optional<DiscreteCoupling> coupling;
};

// Mass of base barrier entries with T1 != T2 whose perturbed counterpart moves
// by more than the threshold. Entries sharing a label are matched by the
// monotone (quantile) coupling in x, which is W1-optimal on the line; base
// mass left unmatched because the perturbed side has no binary kernel there
// counts as exceeding.
double barrier_exceedance(const BarrierExtraction& base, const BarrierExtraction& pert, double threshold) {
  std::map<double, std::vector<Barrier>> a, b;
  for (const auto& e : base.maps) a[e.u].push_back(e);
  for (const auto& e : pert.maps) b[e.u].push_back(e);
  auto by_x = [](const Barrier& l, const Barrier& r) { return l.x < r.x; };
  double out = 0.0;
  for (auto& [u, ea] : a) {
    std::sort(ea.begin(), ea.end(), by_x);
    std::vector<Barrier> eb;
    if (auto it = b.find(u); it != b.end()) eb = it->second;
    std::sort(eb.begin(), eb.end(), by_x);
    std::size_t j = 0;
    double left_b = eb.empty() ? 0.0 : eb[0].weight;
    for (const auto& e : ea) {
      const bool split = std::abs(e.t2 - e.t1) > 1e-12;
      double left_a = e.weight;
      while (left_a > 0.0 && j < eb.size()) {
        const double m = std::min(left_a, left_b);
        if (split && std::abs(eb[j].t1 - e.t1) + std::abs(eb[j].t2 - e.t2) > threshold) out += m;
        left_a -= m;
        left_b -= m;
        if (left_b <= 0.0 && ++j < eb.size()) left_b = eb[j].weight;
      }
      if (split && left_a > 0.0) out += left_a;
    }
  }
  return out;
}

// Columns of one problem on one pair; `base` is null for the unperturbed pair.
std::vector<double> evaluate(const std::string& problem, const PerturbedPair& pair, const ExperimentConfig& cfg,
                             double scale, const BaseState* base, BaseState& state) {
  const DiscreteMeasure mu = pair.mu_bar.projection_x();
  auto gap = [&](const std::string& key, double v) {
    state.values[key] = v;
    if (!base) return 0.0;
    auto it = base->values.find(key);
    return it == base->values.end() ? kNaN : std::abs(v - it->second);
  };

  if (problem == "mot") {
    const double v = solve_mot(mu, pair.nu, named_cost(cfg.cost)).value;
    return {v, gap("mot", v)};
  }
  if (problem == "emot") {
    MotResult r = solve_extended_mot(pair.mu_bar, pair.nu, named_cost(cfg.cost));
    if (!base) state.coupling = r.coupling;
    return {r.value, gap("emot", r.value)};
  }
  if (problem == "wmot") {
    FrankWolfeResult r = solve_wmot_fw(pair.mu_bar, pair.nu, named_convex_cost(cfg.convex_cost));
    return {r.value, gap("wmot", r.value), r.fw_gap};
  }
  if (problem == "amer") {
    const double k = cfg.strike;
    std::vector<double> phi1;
    for (double x : mu.atoms()) phi1.push_back(pos(k - x));
    const double v = price_american(mu, pair.nu, phi1, [k](double, double y) { return pos(k - y); }).value;
    return {v, gap("amer", v)};
  }
  if (problem == "vix") {
    VixDualResult r = vix_dual_lp(mu, pair.nu, cfg.tau, cfg.bins);
    return {r.d_lo, r.d_hi, gap("vix_lo", r.d_lo), gap("vix_hi", r.d_hi)};
  }
  if (problem == "shadow") {
    LiftedMeasure lift = copula_lift(mu, Copula::HoeffdingFrechet, cfg.copula_m);
    MotResult r = shadow_coupling(lift, pair.nu);
    BarrierExtraction b = extract_barriers(r.coupling);
    const double excluded = b.excluded_mass;
    double tv = 0.0, exceed = 0.0;
    if (base) {
      tv = total_variation(base->shadow_lift, lift);
      exceed = base->barriers ? barrier_exceedance(*base->barriers, b, cfg.barrier_threshold) : kNaN;
    } else {
      state.shadow_lift = lift;
      state.barriers = std::move(b);
    }
    return {r.value, gap("shadow", r.value), tv, exceed, excluded};
  }
  if (problem == "approx") {
    if (!base) {
      if (!state.coupling) state.coupling = solve_extended_mot(pair.mu_bar, pair.nu, named_cost(cfg.cost)).coupling;
      return {0.0, 0.0, 0.0};
    }
    if (!base->coupling) throw std::runtime_error("no base coupling");
    ApproximationOptions opts;
    opts.eps = cfg.approx_eps > 0.0 ? cfg.approx_eps : std::clamp(scale, 1e-6, 1.0);
    const std::size_t before = rearrangement_stats().violations;
    ApproximationResult r = approximate_coupling(*base->coupling, pair.mu_bar, pair.nu, opts);
    const double violations = static_cast<double>(rearrangement_stats().violations - before);
    return {r.aw1, std::max(r.first_marginal_error, r.second_marginal_error), violations};
  }
  if (problem == "hausdorff") {
    if (!base) return {0.0, 0.0, 1.0};
    HausdorffEstimate h = hausdorff_mot(cfg.mu_bar, cfg.nu, pair.mu_bar, pair.nu, cfg.p, 16, cfg.seed);
    return {h.lower, h.upper, h.exact ? 1.0 : 0.0};
  }
  throw ConfigError("unknown problem \"" + problem + "\"");
}

// Evaluates every configured problem. Returns the tagged reason of the first
// failing stage, leaving the remaining values NaN.
std::string evaluate_all(const PerturbedPair& pair, const ExperimentConfig& cfg, double scale, const BaseState* base,
                         BaseState& state, std::vector<double>& values, bool keep_going) {
  std::string error;
  values.push_back(wasserstein_lifted(cfg.mu_bar, pair.mu_bar, cfg.p));
  values.push_back(wasserstein_line(cfg.nu, pair.nu, cfg.p));
  values.push_back(total_variation(cfg.mu_bar, pair.mu_bar));
  for (const auto& problem : cfg.problems) {
    const std::size_t width = problem_columns(problem).size();
    if (!error.empty() && !keep_going) {
      values.insert(values.end(), width, kNaN);
      continue;
    }
    try {
      std::vector<double> v = evaluate(problem, pair, cfg, scale, base, state);
      values.insert(values.end(), v.begin(), v.end());
    } catch (const std::exception& e) {
      if (error.empty()) error = problem + ": " + e.what();
      else error += "; " + problem + ": " + e.what();
      values.insert(values.end(), width, kNaN);
    }
  }
  return error;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return one_line(s);
  std::string out = "\"";
  for (char c : one_line(s)) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

double parse_value(const std::string& s) {
  if (s == "nan" || s.empty()) return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    return parse_number(s, "report");
  } catch (const ConfigError& e) {
    throw io::IoError(e.what());
  }
}

io::Json number_json(double v) { return std::isfinite(v) ? io::Json(v) : io::Json(nullptr); }

double json_number(const io::Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::vector<double> json_numbers(const io::Json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(json_number(v));
  return out;
}

}  // namespace

CostSpec named_cost(const std::string& name) {
  if (name == "abs") return CostSpec::of_xy([](double x, double y) { return std::abs(y - x); }, name);
  if (name == "neg_abs") return CostSpec::of_xy([](double x, double y) { return -std::abs(y - x); }, name);
  if (name == "square") return CostSpec::of_xy([](double x, double y) { return (y - x) * (y - x); }, name);
  if (name == "cube") return CostSpec::of_xy([](double x, double y) { return std::pow(y - x, 3); }, name);
  if (name == "y2") return CostSpec::of_xy([](double, double y) { return y * y; }, name);
  if (name.rfind("call:", 0) == 0) {
    const double k = parse_number(name.substr(5), "cost");
    return CostSpec::of_xy([k](double, double y) { return pos(y - k); }, name);
  }
  if (name.rfind("put:", 0) == 0) {
    const double k = parse_number(name.substr(4), "cost");
    return CostSpec::of_xy([k](double, double y) { return pos(k - y); }, name);
  }
  throw ConfigError("unknown cost \"" + name + "\"");
}

ConvexCost named_convex_cost(const std::string& name) {
  std::function<double(double)> f;
  if (name == "abs_moment_squared") f = [](double y) { return std::abs(y); };
  else if (name == "second_moment_squared") f = [](double y) { return y * y; };
  else throw ConfigError("unknown convex cost \"" + name + "\"");
  ConvexCost c;
  c.value = [f](double, double, const std::vector<double>& ys, const std::vector<double>& rho) {
    double m = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) m += f(ys[j]) * rho[j];
    return m * m;
  };
  c.gradient = [f](double, double, const std::vector<double>& ys, const std::vector<double>& rho) {
    double m = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) m += f(ys[j]) * rho[j];
    std::vector<double> g(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) g[j] = 2.0 * m * f(ys[j]);
    return g;
  };
  return c;
}

const char* to_string(Perturbation p) {
  switch (p) {
    case Perturbation::QuantileDiscretize:
      return "quantile_discretize";
    case Perturbation::AtomJitter:
      return "atom_jitter";
    case Perturbation::MassJitter:
      return "mass_jitter";
  }
  return "?";
}

Perturbation perturbation_from_string(const std::string& s) {
  for (Perturbation p : {Perturbation::QuantileDiscretize, Perturbation::AtomJitter, Perturbation::MassJitter}) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown perturbation family \"" + s + "\"");
}

void validate(const ExperimentConfig& c) {
  if (c.mu_bar.empty() || c.nu.empty()) throw ConfigError("marginals must be nonempty");
  if (std::abs(c.mu_bar.mass() - c.nu.mass()) > 1e-9 * std::max(1.0, c.nu.mass()))
    throw ConfigError("marginals have different masses");
  if (!check_convex_order(c.mu_bar.projection_x(), c.nu).ordered)
    throw ConfigError("base marginals are not in convex order");
  for (std::size_t i = 0; i < c.scales.size(); ++i) {
    if (!std::isfinite(c.scales[i]) || c.scales[i] < 0.0) throw ConfigError("scales must be finite and nonnegative");
    if (i > 0 && !(c.scales[i] < c.scales[i - 1])) throw ConfigError("scales must be strictly decreasing");
  }
  std::set<std::string> seen;
  for (const auto& p : c.problems) {
    if (std::find(known_problems().begin(), known_problems().end(), p) == known_problems().end())
      throw ConfigError("unknown problem \"" + p + "\"");
    if (!seen.insert(p).second) throw ConfigError("problem \"" + p + "\" listed twice");
  }
  named_cost(c.cost);
  named_convex_cost(c.convex_cost);
  if (!(c.p >= 1.0)) throw ConfigError("p must be at least 1");
  if (!(c.tau > 0.0)) throw ConfigError("tau must be positive");
  if (c.bins == 0) throw ConfigError("bins must be positive");
  if (c.copula_m == 0) throw ConfigError("copula_m must be positive");
  if (!(c.barrier_threshold >= 0.0)) throw ConfigError("barrier_threshold must be nonnegative");
  if (!(c.approx_eps >= 0.0 && c.approx_eps <= 1.0)) throw ConfigError("approx_eps must lie in [0, 1]");
  if (seen.count("vix") && (c.mu_bar.projection_x().min_atom() <= 0.0 || c.nu.min_atom() <= 0.0))
    throw ConfigError("vix needs positive atoms");
}

ExperimentConfig config_from_json(const io::Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    auto path_of = [&](const io::Json& v) { return base_dir / v.get<std::string>(); };
    if (j.contains("mu_bar")) {
      const auto& v = j.at("mu_bar");
      c.mu_bar = v.is_string() ? io::load_lifted(path_of(v)) : io::lifted_from_json(v);
    } else if (j.contains("mu")) {
      const auto& v = j.at("mu");
      c.mu_bar = LiftedMeasure::with_label(v.is_string() ? io::load_measure(path_of(v)) : io::measure_from_json(v), 0.0);
    } else {
      throw ConfigError("config needs \"mu_bar\" or \"mu\"");
    }
    if (!j.contains("nu")) throw ConfigError("config needs \"nu\"");
    const auto& nu = j.at("nu");
    c.nu = nu.is_string() ? io::load_measure(path_of(nu)) : io::measure_from_json(nu);

    c.name = j.value("name", c.name);
    if (j.contains("family")) c.family = perturbation_from_string(j.at("family").get<std::string>());
    c.scales = j.value("scales", c.scales);
    c.problems = j.value("problems", c.problems);
    c.cost = j.value("cost", c.cost);
    c.convex_cost = j.value("convex_cost", c.convex_cost);
    c.p = j.value("p", c.p);
    c.seed = j.value("seed", c.seed);
    c.tau = j.value("tau", c.tau);
    c.bins = j.value("bins", c.bins);
    c.strike = j.value("strike", c.strike);
    c.copula_m = j.value("copula_m", c.copula_m);
    c.barrier_threshold = j.value("barrier_threshold", c.barrier_threshold);
    c.approx_eps = j.value("approx_eps", c.approx_eps);
    c.timings = j.value("timings", c.timings);
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      if (o.contains("csv")) c.csv_path = path_of(o.at("csv"));
      if (o.contains("json")) c.json_path = path_of(o.at("json"));
      if (o.contains("plot")) c.plot_path = path_of(o.at("plot"));
    }
  } catch (const io::Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const io::IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const MeasureError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

PerturbedPair perturb(const LiftedMeasure& mu_bar, const DiscreteMeasure& nu, Perturbation family, double scale,
                      std::uint64_t seed) {
  if (!(scale >= 0.0)) throw MeasureError("perturb: negative scale");
  if (scale == 0.0) return {mu_bar, nu};
  // std::mt19937_64 with the draws taken in a fixed order, so a seed fixes
  // one direction per atom independently of the scale.
  std::mt19937_64 gen(seed);
  auto unit = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };

  LiftedMeasure mb = mu_bar;
  DiscreteMeasure raw = nu;
  switch (family) {
    case Perturbation::QuantileDiscretize:
      raw = quantile_discretize(nu, static_cast<std::size_t>(std::ceil(1.0 / scale)));
      break;
    case Perturbation::AtomJitter: {
      std::vector<LiftedAtom> atoms;
      for (const auto& a : mu_bar.atoms()) atoms.push_back({a.x + scale * unit(), a.u});
      mb = LiftedMeasure(atoms, mu_bar.weights());
      std::vector<double> ys;
      for (double y : nu.atoms()) ys.push_back(y + scale * unit());
      raw = DiscreteMeasure(ys, nu.weights());
      break;
    }
    case Perturbation::MassJitter: {
      const double scale_w = std::min(scale, 0.5);
      std::vector<double> w;
      for (double v : mu_bar.weights()) w.push_back(v * (1.0 + scale_w * unit()));
      double total = 0.0;
      for (double v : w) total += v;
      for (double& v : w) v *= mu_bar.mass() / total;
      mb = LiftedMeasure(mu_bar.atoms(), w);
      std::vector<double> wn;
      for (double v : nu.weights()) wn.push_back(v * (1.0 + scale_w * unit()));
      total = 0.0;
      for (double v : wn) total += v;
      for (double& v : wn) v *= mu_bar.mass() / total;
      raw = DiscreteMeasure(nu.atoms(), wn);
      break;
    }
  }
  const DiscreteMeasure mx = mb.projection_x();
  DiscreteMeasure repaired = wasserstein_projection(mx, raw.scaled(mx.mass() / raw.mass()));
  ConvexOrderCheck chk = check_convex_order(mx, repaired);
  if (!chk.ordered)
    throw ConvexOrderError("perturb: order repair left an excess of " + std::to_string(chk.max_excess), chk.witness);
  return {mb, repaired};
}

std::size_t StabilityReport::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column \"" + name + "\"");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> StabilityReport::series(const std::string& name) const {
  const std::size_t k = column(name);
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.values.at(k));
  return out;
}

StabilityReport run_stability(const ExperimentConfig& config) {
  validate(config);
  StabilityReport rep;
  rep.name = config.name;
  rep.family = to_string(config.family);
  rep.seed = config.seed;
  rep.timings = config.timings;
  rep.columns = {"w_mu", "w_nu", "tv_mu_bar"};
  for (const auto& p : config.problems) {
    auto cols = problem_columns(p);
    rep.columns.insert(rep.columns.end(), cols.begin(), cols.end());
  }

  BaseState base;
  rep.base_error = evaluate_all({config.mu_bar, config.nu}, config, 0.0, nullptr, base, rep.base,
                                /*keep_going=*/true);

  for (double scale : config.scales) {
    StabilityRow row;
    row.scale = scale;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      PerturbedPair pair = perturb(config.mu_bar, config.nu, config.family, scale, config.seed);
      BaseState scratch;
      row.error = evaluate_all(pair, config, scale, &base, scratch, row.values, /*keep_going=*/false);
    } catch (const std::exception& e) {
      row.error = std::string("perturb: ") + e.what();
      row.values.assign(rep.columns.size(), kNaN);
    }
    if (config.timings)
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string format_report(const StabilityReport& r, ReportFormat f) {
  std::ostringstream out;
  if (f == ReportFormat::Json) {
    io::Json j;
    j["schema_version"] = r.schema_version;
    j["name"] = r.name;
    j["family"] = r.family;
    j["seed"] = r.seed;
    j["timings"] = r.timings;
    j["columns"] = r.columns;
    io::Json base = io::Json::array();
    for (double v : r.base) base.push_back(number_json(v));
    j["base"] = base;
    j["base_error"] = r.base_error;
    io::Json rows = io::Json::array();
    for (const auto& row : r.rows) {
      io::Json jr;
      jr["scale"] = row.scale;
      io::Json vals = io::Json::array();
      for (double v : row.values) vals.push_back(number_json(v));
      jr["values"] = vals;
      jr["error"] = row.error;
      if (r.timings) jr["seconds"] = row.seconds;
      rows.push_back(jr);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
  }
  if (f == ReportFormat::PlotData) {
    // One gnuplot data block per column, addressable with `index`.
    for (std::size_t k = 0; k < r.columns.size(); ++k) {
      if (k > 0) out << "\n\n";
      out << "# " << r.columns[k] << "\n";
      for (const auto& row : r.rows) {
        if (k < row.values.size() && !std::isnan(row.values[k]))
          out << fmt(row.scale) << " " << fmt(row.values[k]) << "\n";
      }
    }
    return out.str();
  }
  out << "# schema_version=" << r.schema_version << "\n";
  out << "# name=" << one_line(r.name) << "\n";
  out << "# family=" << one_line(r.family) << "\n";
  out << "# seed=" << r.seed << "\n";
  out << "# timings=" << (r.timings ? 1 : 0) << "\n";
  out << "# base=";
  for (std::size_t k = 0; k < r.base.size(); ++k) out << (k ? "," : "") << fmt(r.base[k]);
  out << "\n# base_error=" << one_line(r.base_error) << "\n";
  out << "scale";
  for (const auto& c : r.columns) out << "," << csv_field(c);
  if (r.timings) out << ",seconds";
  out << ",error\n";
  for (const auto& row : r.rows) {
    out << fmt(row.scale);
    for (double v : row.values) out << "," << fmt(v);
    if (r.timings) out << "," << fmt(row.seconds);
    out << "," << csv_field(row.error) << "\n";
  }
  return out.str();
}

void emit(const StabilityReport& r, ReportFormat f, const std::filesystem::path& path) {
  io::write_text_file(path, format_report(r, f));
}

StabilityReport report_from_json(const io::Json& j) {
  StabilityReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != StabilityReport::kSchemaVersion)
      throw io::IoError("unsupported schema_version " + std::to_string(r.schema_version));
    r.name = j.at("name").get<std::string>();
    r.family = j.at("family").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.timings = j.value("timings", false);
    r.columns = j.at("columns").get<std::vector<std::string>>();
    r.base = json_numbers(j.at("base"));
    r.base_error = j.value("base_error", std::string());
    for (const auto& jr : j.at("rows")) {
      StabilityRow row;
      row.scale = json_number(jr.at("scale"));
      row.values = json_numbers(jr.at("values"));
      row.error = jr.value("error", std::string());
      if (jr.contains("seconds")) row.seconds = json_number(jr.at("seconds"));
      r.rows.push_back(std::move(row));
    }
  } catch (const io::Json::exception& e) {
    throw io::IoError(std::string("report: ") + e.what());
  }
  return r;
}

StabilityReport report_from_csv(const std::string& text) {
  StabilityReport r;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::string kv = line.substr(2);
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "schema_version") {
        r.schema_version = static_cast<int>(parse_number(val, "schema_version"));
        if (r.schema_version != StabilityReport::kSchemaVersion)
          throw io::IoError("unsupported schema_version " + val);
      } else if (key == "name") {
        r.name = val;
      } else if (key == "family") {
        r.family = val;
      } else if (key == "seed") {
        r.seed = std::stoull(val);
      } else if (key == "timings") {
        r.timings = val == "1";
      } else if (key == "base") {
        if (!val.empty())
          for (const auto& f : split_csv(val)) r.base.push_back(parse_value(f));
      } else if (key == "base_error") {
        r.base_error = val;
      }
      continue;
    }
    std::vector<std::string> fields = split_csv(line);
    const std::size_t tail = r.timings ? 2 : 1;
    if (!header) {
      if (fields.size() < 1 + tail || fields.front() != "scale" || fields.back() != "error")
        throw io::IoError("report: malformed CSV header");
      r.columns.assign(fields.begin() + 1, fields.end() - static_cast<std::ptrdiff_t>(tail));
      header = true;
      continue;
    }
    if (fields.size() != r.columns.size() + 1 + tail) throw io::IoError("report: row width differs from header");
    StabilityRow row;
    row.scale = parse_value(fields[0]);
    for (std::size_t k = 0; k < r.columns.size(); ++k) row.values.push_back(parse_value(fields[1 + k]));
    if (r.timings) row.seconds = parse_value(fields[1 + r.columns.size()]);
    row.error = fields.back();
    r.rows.push_back(std::move(row));
  }
  if (!header) throw io::IoError("report: missing CSV header");
  return r;
}

}  // namespace mot
