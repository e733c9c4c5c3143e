#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "binloc/common.hpp"
#include "binloc/dataset.hpp"
#include "binloc/gllim.hpp"

namespace binloc::eval {

// Absolute per-axis ground-truth-to-estimate angles, degrees.
struct AxisErrors {
  double az = 0.0;
  double el = 0.0;
  double dist() const { return std::hypot(az, el); }
};

// Per-source GTEA. For multiple sources the estimate-to-truth assignment
// minimizes the total angular distance over source permutations.
std::vector<AxisErrors> gtea(const Vec& estimate, const Vec& truth);

// Table II conventions: sources whose angular distance exceeds the threshold
// are outliers; means and stds are computed over inliers only.
struct ErrorSummary {
  double threshold_deg = 0.0;
  int count = 0;
  int inliers = 0;
  double outlier_pct = 0.0;
  double mean_az = 0.0, std_az = 0.0;
  double mean_el = 0.0, std_el = 0.0;
};

ErrorSummary summarize(const std::vector<AxisErrors>& errors, double threshold_deg);

// GCC-PHAT TDOA with per-frame peaks pooled into a 0.5-sample histogram and
// parabolic refinement of the dominant peak. Positive delay = right channel
// lags the left. Returns fractional samples.
double gcc_phat_tdoa(std::span<const double> left, std::span<const double> right, int max_lag);

struct TdoaRegressor {
  double slope = 0.0;
  double intercept = 0.0;
  double apply(double tdoa) const { return slope * tdoa + intercept; }
};

TdoaRegressor fit_tdoa_regressor(const std::vector<double>& tdoas,
                                 const std::vector<double>& azimuths);

nlohmann::json regressor_to_json(const TdoaRegressor& r, int max_lag);
std::pair<TdoaRegressor, int> regressor_from_json(const nlohmann::json& j);

// One evaluated test item. PHAT rows carry azimuth only.
struct ItemResult {
  std::string id;
  std::string method;  // "sbm" | "phat"
  Vec truth;
  Vec estimate;
  std::vector<AxisErrors> errors;
  bool has_elevation = true;
};

struct EvalOptions {
  double inlier_threshold_deg = 5.0;
  std::optional<TdoaRegressor> phat;  // adds a PHAT baseline pass (M = 1 only)
  int phat_max_lag = 64;
};

struct EvalResult {
  std::vector<ItemResult> items;
  ErrorSummary sbm_summary;
  std::optional<ErrorSummary> phat_summary;
  double mean_localize_ms = 0.0;
  nlohmann::json summary_json;
};

// Runs the localizer (and optionally the PHAT baseline) over every manifest
// entry. dataset_dir anchors the relative paths in the manifest.
EvalResult evaluate_manifest(const gllim::GllimModel& model, const dataset::Manifest& manifest,
                             const std::string& dataset_dir, const EvalOptions& options);

void write_results_csv(const std::string& path, const std::vector<ItemResult>& items,
                       int num_sources);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  int realized_n = 0;
  int realized_k = 0;
  double mean_gtea_deg = 0.0;
  double localize_ms = 0.0;
  double train_ms = 0.0;
};

// Shared configuration for K/N sensitivity sweeps on the synthetic benchmark.
struct SweepConfig {
  simroom::GridSpec bank_grid;
  int F = 512;
  double sample_rate = 16000.0;
  int smoothness_order = 3;
  std::uint64_t bank_seed = 0;
  simroom::GridSpec train_grid;
  int train_frames = 125;
  double noise_std = 0.05;
  double epsilon_factor = 4.0;
  int k = 32;
  int test_n_az = 9, test_n_el = 12;
  double occupancy = 0.3;
  double duration_s = 1.0;
  std::uint64_t seed = 0;
  std::string work_dir;  // scratch for rendered test sets
};

std::vector<SweepRow> sweep(const std::string& axis, const std::vector<double>& values,
                            const SweepConfig& config);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace binloc::eval
