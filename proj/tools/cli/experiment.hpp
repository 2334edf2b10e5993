#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlirls/model.hpp"

namespace nlirls::cli {

enum class ExperimentFamily { Simple1D, PerturbedRip, PhaseRetrieval, ImpulsiveNoise };

std::string_view to_string(ExperimentFamily f) noexcept;

/// One experiment, read from a flat key=value file (see README).
struct ExperimentConfig {
  ExperimentFamily family = ExperimentFamily::PerturbedRip;
  std::vector<double> p{1.0};
  std::vector<int> k{1};
  std::vector<double> rho{0.0};
  std::vector<double> kappa{1.0};
  std::vector<double> alpha_p{0.0};
  Index n = 20;
  Index m = 12;
  int trials = 10;
  double success_threshold = 0.01;
  int max_outer_iters = 100;
  double omega = 0.0;
  double eps_tilde = 1e-6;
  double stop_eps = 0.0;
  std::uint64_t base_seed = 0;
  /// Target ||x_star||.
  double norm = 0.015;
  /// Random starts per restricted solve and their radius.
  int random_starts = 2;
  double start_radius = 0.015;
  /// 1-D family only: data and start points (one record per start).
  Vector y_1d;
  std::vector<double> starts_1d;
  int workers = 1;
  /// Wall-clock timings make the CSVs nondeterministic, so they are opt-in.
  bool timing = false;
  std::string output_path = "experiment.csv";
  std::string summary_path;  ///< defaults to <output stem>_summary.csv

  void validate() const;
};

/// Defaults of a family at desk scale (N=20, m=12) or paper scale (N=80, m=30).
ExperimentConfig default_config(ExperimentFamily family, bool paper_scale = false);

/// Throws ParseError naming the offending line.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentRecord {
  std::string family;
  std::optional<double> p, rho, kappa, alpha_p;
  std::optional<int> k;
  int trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<double> rel_error;
  int outer_iters = 0;
  std::optional<double> final_eps;
  std::optional<double> runtime_ms;
  std::string error;  ///< empty unless the trial threw
};

struct SummaryRow {
  std::string family;
  std::optional<double> p, rho, kappa, alpha_p;
  std::optional<int> k;
  int trials = 0;
  int successes = 0;
  double recovery_rate = 0.0;
  std::optional<double> mean_rel_error;
  std::optional<double> mean_runtime_ms;
};

/// All records in grid order (p, k, rho, kappa, alpha_p ascending, then trial).
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Per-trial seed: base_seed xor hash(grid point, trial).
std::uint64_t trial_seed(std::uint64_t base_seed, const std::string& grid_key, int trial);

std::string format_real(double v);

}  // namespace nlirls::cli
