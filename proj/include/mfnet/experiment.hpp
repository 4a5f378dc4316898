#pragma once

// Experiment runner behind the command-line tool. A config is one JSON
// object naming an experiment; missing fields take the defaults listed in
// the field table, and every check failure names the field it concerns.
//
// Metrics go to CSV with the header kMetricsHeader. Runs with variants
// (per-manifold checks, per-bottleneck models) write the variant into the
// experiment column as "<experiment>:<variant>".

#include "json.hpp"

#include "mfnet/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mfnet {

class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidArgument(field + ": " + message), field_(std::move(field)), message_(message) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  std::string message_;
};

inline constexpr const char* kMetricsHeader = "experiment,seed,step,metric,value,wall_s";

struct MetricsRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  long step = 0;
  std::string metric;
  double value = 0.0;
  double wall_s = 0.0;
};

// Writes the header on construction, then one LF-terminated line per row.
// Values use the shortest round-trip form; wall_s has six decimals.
class MetricsWriter {
 public:
  explicit MetricsWriter(std::ostream& out);
  void write(const MetricsRecord& r);
  std::size_t rows() const { return rows_; }

 private:
  std::ostream& out_;
  std::size_t rows_ = 0;
};

std::string format_metrics_row(const MetricsRecord& r);

enum class FieldType { Int, Number, String, Bool, IntList, NumberList, StringList, Layers };

struct FieldDoc {
  std::string name;
  FieldType type;
  nlohmann::json default_value;
  std::string help;  // range and meaning
};

std::vector<std::string> experiment_names();
// Field table for an experiment (common fields first). Throws ConfigError
// on an unknown experiment.
std::vector<FieldDoc> experiment_fields(const std::string& experiment);

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json values;               // every field, defaults filled in
  std::vector<std::string> defaulted;  // fields not given in the file
};

ExperimentConfig parse_config(const nlohmann::json& j);
// Throws ConfigError on validation failures and FormatError on malformed
// JSON. Relative data paths are taken relative to the working directory.
ExperimentConfig load_config(const std::filesystem::path& path);

// Human-readable listing of the resolved fields, defaults marked.
void print_config(std::ostream& os, const ExperimentConfig& cfg);

void run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, MetricsWriter& out);

}  // namespace mfnet
