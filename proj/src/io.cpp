#include "mot/io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace mot::io {

namespace {

std::vector<double> numbers(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw IoError(std::string("missing array \"") + key + "\"");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw IoError(std::string("non-numeric entry in \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

// Numeric rows of a comma-separated file with exactly `columns` fields.
std::vector<std::vector<double>> csv_rows(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    bool numeric = true;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (field.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (row.size() != columns)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                    " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json to_json(const DiscreteMeasure& m) { return Json{{"atoms", m.atoms()}, {"weights", m.weights()}}; }

DiscreteMeasure measure_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("measure must be a JSON object");
  auto a = numbers(j, "atoms"), w = numbers(j, "weights");
  if (a.size() != w.size()) throw IoError("atoms and weights differ in length");
  return DiscreteMeasure(a, w);
}

Json to_json(const LiftedMeasure& m) {
  Json atoms = Json::array();
  for (const auto& a : m.atoms()) atoms.push_back({a.x, a.u});
  return Json{{"atoms", atoms}, {"weights", m.weights()}};
}

LiftedMeasure lifted_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array())
    throw IoError("lifted measure needs an \"atoms\" array");
  std::vector<LiftedAtom> atoms;
  for (const auto& p : j.at("atoms")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw IoError("lifted atoms must be [x, u] pairs");
    atoms.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  auto w = numbers(j, "weights");
  if (atoms.size() != w.size()) throw IoError("atoms and weights differ in length");
  return LiftedMeasure(atoms, w);
}

Json to_json(const DiscreteCoupling& c) {
  std::vector<double> flat;
  for (const auto& row : c.kernel_table()) flat.insert(flat.end(), row.begin(), row.end());
  return Json{{"first", to_json(c.first_marginal())}, {"y_support", c.y_support()}, {"kernels", flat}};
}

DiscreteCoupling coupling_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("first")) throw IoError("coupling needs a \"first\" marginal");
  LiftedMeasure first = lifted_from_json(j.at("first"));
  auto ys = numbers(j, "y_support"), flat = numbers(j, "kernels");
  if (flat.size() != first.size() * ys.size()) throw IoError("kernel table size differs from atoms x y-support");
  std::vector<std::vector<double>> rows(first.size());
  for (std::size_t i = 0; i < first.size(); ++i)
    rows[i].assign(flat.begin() + static_cast<std::ptrdiff_t>(i * ys.size()),
                   flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * ys.size()));
  return DiscreteCoupling(first, ys, rows);
}

DiscreteMeasure read_measure_csv(const std::filesystem::path& path) {
  std::vector<double> a, w;
  for (const auto& r : csv_rows(path, 2)) {
    a.push_back(r[0]);
    w.push_back(r[1]);
  }
  return DiscreteMeasure(a, w);
}

LiftedMeasure read_lifted_csv(const std::filesystem::path& path) {
  std::vector<LiftedAtom> a;
  std::vector<double> w;
  for (const auto& r : csv_rows(path, 3)) {
    a.push_back({r[0], r[1]});
    w.push_back(r[2]);
  }
  return LiftedMeasure(a, w);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

DiscreteMeasure load_measure(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_measure_csv(path);
  return measure_from_json(read_json_file(path));
}

LiftedMeasure load_lifted(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_lifted_csv(path);
  return lifted_from_json(read_json_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mot::io
