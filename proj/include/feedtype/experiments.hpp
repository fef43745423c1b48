#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feedtype/parallel.hpp"

namespace feedtype::experiments {

enum class Kind {
  Lemma1Scan,
  OptimalAudit,
  SurgeryAudit,
  MartingaleAudit,
  McDeviation,
  IsacFrontier,
  IsacSimulate,
  ConverseDemo,
};

std::string_view to_string(Kind k);
std::optional<Kind> parse_kind(std::string_view name);
const std::vector<Kind>& all_kinds();

struct ExperimentConfig {
  Kind kind = Kind::Lemma1Scan;
  std::string source_text;  // raw bytes, hashed into the manifest
  std::filesystem::path base_dir;

  std::optional<std::uint64_t> seed;

  std::vector<std::filesystem::path> channels;
  std::vector<double> state_pmf;
  std::optional<std::filesystem::path> distortion;  // default: Hamming

  std::vector<std::size_t> n;
  std::vector<double> mu;
  bool mu_schedule = false;  // mu = n^{-1/4}
  std::vector<std::uint32_t> a;  // empty: every input symbol
  std::vector<std::uint32_t> b;  // empty: every output symbol
  std::uint64_t trials = 10000;
  std::size_t resolution = 101;
  std::string strategy = "optimal";
  std::size_t exhaustive_max_n = 3;
  std::size_t random_trees = 100;

  std::optional<std::filesystem::path> code;
  double max_distortion = 0.5;
  std::vector<double> eta{0.1};
  double eps = 0.1;
  double delta = 0.1;
};

// INI-style text: "[section]" headers, "key = value" lines, '#' comments,
// comma-separated lists. Paths resolve against base_dir.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

struct OutputTable {
  std::string name;  // file name without extension
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct StageTiming {
  std::string name;
  double seconds;
};

struct ExperimentResult {
  std::vector<OutputTable> tables;
  std::vector<StageTiming> stages;
  bool all_pass = true;
};

ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t seed, const ExecPolicy& policy = {});

// "# schema=1", header, rows; fields with separators are quoted.
std::string to_csv(const OutputTable& table);
std::string format_double(double v);

std::string sha256_hex(std::string_view bytes);

struct OutputRecord {
  std::string file;
  std::string sha256;
  std::size_t rows;
};

struct RunManifest {
  std::string kind;
  std::string config_sha256;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string version;
  std::vector<OutputRecord> outputs;
  std::vector<StageTiming> stages;
  bool all_pass = true;

  std::string to_json() const;
};

// Runs the experiment, writes <out>/<table>.csv and <out>/manifest.json.
RunManifest run(const ExperimentConfig& config, const std::filesystem::path& out, std::uint64_t seed,
                const ExecPolicy& policy = {});

std::string_view version();

}  // namespace feedtype::experiments
