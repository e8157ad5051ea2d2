#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dreamhop/data_gen.hpp"
#include "dreamhop/setting.hpp"

namespace dreamhop {

inline constexpr int kResultSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "DREAMHOP_OUTPUT_DIR";

// One figure reproduction. Grids that do not apply to the chosen figure
// are ignored. `panel` selects a subset of the figure (empty: all).
//   fig1: storing | supervised | unsupervised   (rows of density plots)
//   fig2: supervised | unsupervised             (squared error vs r)
//   fig3: stability | attractiveness            (m1 vs alpha / vs p)
//   fig4: supervised | unsupervised             (m1 vs r)
struct ExperimentConfig {
  std::string id = "fig3";
  std::string panel;
  std::vector<double> alphas;
  std::vector<double> qualities;   // r
  std::vector<double> times;
  std::vector<double> overlaps;    // p
  std::vector<Index> per_class;    // M
  Index neurons = 1000;
  Index trials = 100;              // disorder realizations
  Index probes_per_trial = 4;
  int grid_points = 51;            // theory resolution along x
  int bins = 60;                   // fig1 histograms
  std::uint64_t seed = 1;
  bool simulate = true;
  bool zero_diagonal = false;
  bool svg = false;
  bool force = false;
  unsigned threads = 0;
  double max_runtime_seconds = 4.0 * 3600.0;
  std::filesystem::path output_dir = ".";
  // Set by default_config: the default grids are estimates, not exact values.
  bool figure_inferred = false;
};

// Default grids and sizes for each figure.
ExperimentConfig default_config(std::string_view id);
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
// Accepts the `config` object of a metadata sidecar.
ExperimentConfig config_from_json(const nlohmann::json& j);

// One CSV row: (x, theory, sim_mean, sim_stderr, ga_bound). Optional
// fields are written as empty cells.
struct ResultRecord {
  double x = 0.0;
  double theory = 0.0;
  std::optional<double> sim_mean;
  std::optional<double> sim_stderr;
  std::optional<double> ga_bound;
};

struct PanelResult {
  std::string name;                                   // file stem
  std::vector<std::pair<std::string, double>> params;  // fixed parameters of the panel
  std::string x_label;
  std::vector<ResultRecord> rows;
  double runtime_seconds = 0.0;
};

struct ResourceEstimate {
  std::size_t peak_bytes = 0;
  double seconds = 0.0;
};

ResourceEstimate estimate_resources(const ExperimentConfig& config);
// Bytes the kernel reports as available (MemAvailable), or nullopt.
std::optional<std::size_t> available_memory();
// Throws ResourceError with a scaled-down suggestion unless config.force.
void check_resources(const ExperimentConfig& config);

// Computes every panel; no files are written.
std::vector<PanelResult> run_experiment(const ExperimentConfig& config);

std::string csv_header();
std::string to_csv(const PanelResult& panel);
std::string to_svg(const PanelResult& panel);

// SHA-1 of "blob <size>\0" + content, as git computes it.
std::string git_blob_sha1(std::string_view content);

struct ReproduceOutput {
  std::vector<std::filesystem::path> files;
  std::filesystem::path metadata;
};

// Runs the experiment and writes one CSV per panel plus `<id>.json`
// metadata into config.output_dir.
ReproduceOutput reproduce(const ExperimentConfig& config);

// Sidecar for a single CSV written by the command-line tool.
void write_metadata(const std::filesystem::path& csv_path, const nlohmann::json& config,
                    std::string_view csv_content, double runtime_seconds);

// Default output directory: $DREAMHOP_OUTPUT_DIR, else the current directory.
std::filesystem::path default_output_dir();

}  // namespace dreamhop
