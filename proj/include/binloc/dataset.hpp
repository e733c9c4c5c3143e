#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "binloc/gllim.hpp"
#include "binloc/simroom.hpp"
#include "binloc/spectro.hpp"

namespace binloc::dataset {

struct ManifestEntry {
  std::string id;
  std::vector<double> directions;  // stacked (az, el) per source, degrees
  std::string spec_path;           // relative .bnsp path, may be empty
  std::string audio_path;          // relative .wav path, may be empty
  std::string role;                // "train" | "test"
  std::string kind;                // "white" | "sparse"
};

struct Manifest {
  nlohmann::json meta;
  std::vector<ManifestEntry> entries;
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

// The white-noise grid recordings the training sets are built from, kept in
// memory for pair mixing. Node order is azimuth-major.
struct RecordingSet {
  simroom::GridSpec grid;
  std::vector<Direction> dirs;
  std::vector<std::pair<spectro::ComplexSpectrogram, spectro::ComplexSpectrogram>> recs;
  int T = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

// One grid recording; the per-node seeds are shared by every consumer so the
// streamed training build, the recording cache and the emitted audio all see
// the same signals.
std::pair<spectro::ComplexSpectrogram, spectro::ComplexSpectrogram> render_training_recording(
    const simroom::FilterBank& bank, const Direction& dir, int node_index, int T,
    double noise_std, std::uint64_t seed, int hop = 128);

RecordingSet render_grid_recordings(const simroom::FilterBank& bank,
                                    const simroom::GridSpec& grid, int T, double noise_std,
                                    std::uint64_t seed, int hop = 128);

// Single-source training set (L = 2): one white-noise recording per grid
// node, Eq. (8) temporal mean as the feature vector. Streams recordings;
// does not hold them.
gllim::TrainingSet build_single_source_training(const simroom::FilterBank& bank,
                                                const simroom::GridSpec& grid, int T,
                                                double noise_std, std::uint64_t seed,
                                                int hop = 128);

struct PairConstraints {
  double max_az_sep = 20.0;   // per-axis separation bounds, degrees
  double max_el_sep = 20.0;
  double min_dist = 1.5;      // Euclidean angular distance
  double amp_ratio_db = 0.5;  // per-pair amplitude ratio drawn U(-x, +x) dB
};

// Canonical M=2 label ordering: sort by azimuth, tie-break by elevation.
// Identical directions are rejected.
Vec canonical_pair_label(const Direction& a, const Direction& b);

// Two-source training set (L = 4) obtained by summing pairs of single-source
// recordings. Pairs are distinct unordered pairs sampled without replacement
// under the proximity constraints; recordings are reused across pairs.
gllim::TrainingSet build_pair_training(const RecordingSet& recordings, int num_pairs,
                                       const PairConstraints& constraints, std::uint64_t seed);

struct TestSetConfig {
  int num_sources = 1;
  std::vector<Vec> directions;       // one entry per item, length 2*num_sources
  std::string kind = "sparse";       // "white" | "sparse"
  double occupancy = 0.3;
  double noise_std = 0.05;
  double epsilon = 0.0;              // activity threshold used at feature extraction
  double duration_min_s = 1.0;
  double duration_max_s = 5.0;
  int hop = 128;
  bool emit_audio = false;
  bool identical_sources = false;    // feed the same source signal to every direction
};

// Renders the test items into out_dir/{manifest.json, spec/NNN.bnsp
// [, wav/NNN.wav]} and returns the manifest. Two-source items are sums of
// independently rendered single-source recordings.
Manifest build_test_set(const simroom::FilterBank& bank, const std::string& out_dir,
                        const TestSetConfig& config, std::uint64_t seed);

// Noise-only rendering at the given level -> Eq. (6) threshold via the
// spectro calibration rule.
double calibrate_epsilon(const simroom::FilterBank& bank, int T, double noise_std,
                         double factor, std::uint64_t seed, int hop = 128);

// Test directions at the half-cell offsets of a coarser grid inside the
// training field of view; all off the training nodes.
std::vector<Vec> offset_test_grid(const simroom::GridSpec& train_grid, int n_az, int n_el);

// Random direction pairs inside the field of view satisfying the constraints.
std::vector<Vec> random_test_pairs(const simroom::GridSpec& fov, int count,
                                   const PairConstraints& constraints, std::uint64_t seed);

}  // namespace binloc::dataset
