#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mot/couplings.hpp"
#include "mot/measures.hpp"

namespace mot::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

// {"atoms": [x, ...], "weights": [w, ...]}
Json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const Json& j);

// {"atoms": [[x, u], ...], "weights": [w, ...]}
Json to_json(const LiftedMeasure& m);
LiftedMeasure lifted_from_json(const Json& j);

// {"first": <lifted>, "y_support": [...], "kernels": [row-major weights]}
Json to_json(const DiscreteCoupling& c);
DiscreteCoupling coupling_from_json(const Json& j);

// CSV with rows "x,w" (measure) or "x,u,w" (lifted). A leading header line
// and blank lines are skipped.
DiscreteMeasure read_measure_csv(const std::filesystem::path& path);
LiftedMeasure read_lifted_csv(const std::filesystem::path& path);

// Reads .json or .csv by extension.
DiscreteMeasure load_measure(const std::filesystem::path& path);
LiftedMeasure load_lifted(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mot::io
