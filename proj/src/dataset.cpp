#include "binloc/dataset.hpp"

#include <omp.h>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "binloc/audio_io.hpp"
#include "binloc/rng.hpp"

namespace binloc::dataset {

namespace fs = std::filesystem;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return RandomStream(seed, mix64(tag) + index).next_u64();
}

constexpr std::uint64_t kTagTrainSource = 0x7472736FULL;  // training source signals
constexpr std::uint64_t kTagTrainNoise = 0x74726E6FULL;   // training sensor noise
constexpr std::uint64_t kTagTestSource = 0x7465736FULL;
constexpr std::uint64_t kTagTestNoise = 0x74656E6FULL;
constexpr std::uint64_t kTagTestDur = 0x74656475ULL;

std::string item_id(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return buf;
}

bool direction_less(const Direction& a, const Direction& b) {
  return a.az < b.az || (a.az == b.az && a.el < b.el);
}

bool pair_ok(const Direction& a, const Direction& b, const PairConstraints& c) {
  const double daz = std::abs(a.az - b.az);
  const double del = std::abs(a.el - b.el);
  return daz <= c.max_az_sep && del <= c.max_el_sep &&
         std::hypot(daz, del) >= c.min_dist;
}

}  // namespace

nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["type"] = "dataset-manifest";
  j["meta"] = m.meta;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json je;
    je["id"] = e.id;
    je["directions"] = e.directions;
    je["role"] = e.role;
    je["kind"] = e.kind;
    if (!e.spec_path.empty()) je["spec"] = e.spec_path;
    if (!e.audio_path.empty()) je["audio"] = e.audio_path;
    j["entries"].push_back(std::move(je));
  }
  return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != std::string("dataset-manifest"))
    throw std::runtime_error("not a dataset manifest");
  Manifest m;
  m.meta = j.value("meta", nlohmann::json::object());
  std::set<std::string> ids;
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::string>();
    e.directions = je.at("directions").get<std::vector<double>>();
    e.role = je.at("role").get<std::string>();
    e.kind = je.at("kind").get<std::string>();
    e.spec_path = je.value("spec", "");
    e.audio_path = je.value("audio", "");
    if (!ids.insert(e.id).second) throw std::runtime_error("duplicate manifest id: " + e.id);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << manifest_to_json(m).dump(1) << "\n";
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return manifest_from_json(nlohmann::json::parse(f));
}

std::pair<spectro::ComplexSpectrogram, spectro::ComplexSpectrogram> render_training_recording(
    const simroom::FilterBank& bank, const Direction& dir, int node_index, int T,
    double noise_std, std::uint64_t seed, int hop) {
  const auto src = simroom::white_noise_source(bank.freq_bins(), T,
                                               derive_seed(seed, kTagTrainSource, node_index));
  return simroom::render_mixture(bank, {dir}, {src}, noise_std,
                                 derive_seed(seed, kTagTrainNoise, node_index), hop);
}

RecordingSet render_grid_recordings(const simroom::FilterBank& bank,
                                    const simroom::GridSpec& grid, int T, double noise_std,
                                    std::uint64_t seed, int hop) {
  RecordingSet set;
  set.grid = grid;
  set.T = T;
  set.noise_std = noise_std;
  set.seed = seed;
  const int n = grid.n_az * grid.n_el;
  set.dirs.resize(n);
  set.recs.resize(n);
  for (int ia = 0; ia < grid.n_az; ++ia)
    for (int ie = 0; ie < grid.n_el; ++ie) set.dirs[ia * grid.n_el + ie] = grid.node(ia, ie);

  for (int i = 0; i < n; ++i)
    set.recs[i] = render_training_recording(bank, set.dirs[i], i, T, noise_std, seed, hop);
  return set;
}

gllim::TrainingSet build_single_source_training(const simroom::FilterBank& bank,
                                                const simroom::GridSpec& grid, int T,
                                                double noise_std, std::uint64_t seed,
                                                int hop) {
  if (!bank.contains({grid.az_min, grid.el_min}) || !bank.contains({grid.az_max, grid.el_max}))
    throw std::invalid_argument("training grid outside filter bank grid");
  const int n = grid.n_az * grid.n_el;
  const int D = 3 * bank.freq_bins();

  gllim::TrainingSet ts;
  ts.X.resize(n, 2);
  ts.Y.resize(n, D);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const Direction dir = grid.node(i / grid.n_el, i % grid.n_el);
    const auto [left, right] = render_training_recording(bank, dir, i, T, noise_std, seed, hop);
    const auto feats = spectro::binaural_features(left, right);
    const Vec y = spectro::mean_feature_vector(feats);
    ts.X(i, 0) = dir.az;
    ts.X(i, 1) = dir.el;
    ts.Y.row(i) = y.transpose();
  }

  ts.metadata = {{"type", "single-source-training"},
                 {"grid",
                  {{"az_min", grid.az_min},
                   {"az_max", grid.az_max},
                   {"n_az", grid.n_az},
                   {"el_min", grid.el_min},
                   {"el_max", grid.el_max},
                   {"n_el", grid.n_el}}},
                 {"T", T},
                 {"noise_std", noise_std},
                 {"seed", seed},
                 {"hop", hop},
                 {"F", bank.freq_bins()},
                 {"bank", bank.to_json()}};
  return ts;
}

Vec canonical_pair_label(const Direction& a, const Direction& b) {
  if (a.az == b.az && a.el == b.el)
    throw std::invalid_argument("pair requires two distinct directions");
  const Direction& first = direction_less(a, b) ? a : b;
  const Direction& second = direction_less(a, b) ? b : a;
  Vec label(4);
  label << first.az, first.el, second.az, second.el;
  return label;
}

gllim::TrainingSet build_pair_training(const RecordingSet& recordings, int num_pairs,
                                       const PairConstraints& constraints,
                                       std::uint64_t seed) {
  const int n = static_cast<int>(recordings.dirs.size());
  if (n < 2) throw std::invalid_argument("need at least 2 distinct directions");

  long long capacity = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (pair_ok(recordings.dirs[i], recordings.dirs[j], constraints)) ++capacity;
  if (num_pairs > capacity)
    throw std::invalid_argument("num_pairs exceeds the number of distinct direction pairs (" +
                                std::to_string(capacity) + ")");

  // Sampling is serial and cheap; the feature extraction below is the bulk.
  RandomStream rs(seed, 0x70616972ULL);
  std::set<std::uint64_t> used;
  struct Pair {
    int i, j;
    double gain_j;  // amplitude ratio applied to the second recording
  };
  std::vector<Pair> pairs;
  pairs.reserve(num_pairs);
  while (static_cast<int>(pairs.size()) < num_pairs) {
    int i = static_cast<int>(rs.next_below(static_cast<std::uint32_t>(n)));
    int j = static_cast<int>(rs.next_below(static_cast<std::uint32_t>(n)));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!pair_ok(recordings.dirs[i], recordings.dirs[j], constraints)) continue;
    const std::uint64_t key = static_cast<std::uint64_t>(i) * n + j;
    if (!used.insert(key).second) continue;
    const double ratio_db = rs.uniform(-constraints.amp_ratio_db, constraints.amp_ratio_db);
    pairs.push_back({i, j, std::pow(10.0, ratio_db / 20.0)});
  }

  const int D = 3 * static_cast<int>(recordings.recs.front().first.freq_bins());
  gllim::TrainingSet ts;
  ts.X.resize(num_pairs, 4);
  ts.Y.resize(num_pairs, D);

#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < num_pairs; ++p) {
    const auto& [li, ri] = recordings.recs[pairs[p].i];
    const auto& [lj, rj] = recordings.recs[pairs[p].j];
    spectro::ComplexSpectrogram left = li, right = ri;
    left.data += pairs[p].gain_j * lj.data;
    right.data += pairs[p].gain_j * rj.data;
    const auto feats = spectro::binaural_features(left, right);
    ts.Y.row(p) = spectro::mean_feature_vector(feats).transpose();
    ts.X.row(p) = canonical_pair_label(recordings.dirs[pairs[p].i],
                                       recordings.dirs[pairs[p].j])
                      .transpose();
  }

  ts.metadata = {{"type", "pair-training"},
                 {"num_pairs", num_pairs},
                 {"seed", seed},
                 {"recording_seed", recordings.seed},
                 {"T", recordings.T},
                 {"noise_std", recordings.noise_std},
                 {"constraints",
                  {{"max_az_sep", constraints.max_az_sep},
                   {"max_el_sep", constraints.max_el_sep},
                   {"min_dist", constraints.min_dist},
                   {"amp_ratio_db", constraints.amp_ratio_db}}}};
  return ts;
}

double calibrate_epsilon(const simroom::FilterBank& bank, int T, double noise_std,
                         double factor, std::uint64_t seed, int hop) {
  simroom::SourceSignal silence;
  silence.kind = simroom::SourceSignal::Kind::white;
  silence.occupancy = 1.0;
  silence.spectrogram = RMatC::Zero(bank.freq_bins(), T);
  const Direction center{0.5 * (bank.grid().az_min + bank.grid().az_max),
                         0.5 * (bank.grid().el_min + bank.grid().el_max)};
  const auto [l, r] = simroom::render_mixture(bank, {center}, {silence}, noise_std,
                                              derive_seed(seed, 0x63616C69ULL, 0), hop);
  return spectro::noise_floor_epsilon(l, r, factor);
}

std::vector<Vec> offset_test_grid(const simroom::GridSpec& train_grid, int n_az, int n_el) {
  std::vector<Vec> out;
  const double az_span = train_grid.az_max - train_grid.az_min;
  const double el_span = train_grid.el_max - train_grid.el_min;
  for (int ia = 0; ia < n_az; ++ia) {
    for (int ie = 0; ie < n_el; ++ie) {
      Vec d(2);
      d << train_grid.az_min + (ia + 0.5) * az_span / n_az,
          train_grid.el_min + (ie + 0.5) * el_span / n_el;
      out.push_back(d);
    }
  }
  return out;
}

std::vector<Vec> random_test_pairs(const simroom::GridSpec& fov, int count,
                                   const PairConstraints& constraints, std::uint64_t seed) {
  RandomStream rs(seed, 0x74706472ULL);
  std::vector<Vec> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Direction a{rs.uniform(fov.az_min, fov.az_max), rs.uniform(fov.el_min, fov.el_max)};
    Direction b{rs.uniform(fov.az_min, fov.az_max), rs.uniform(fov.el_min, fov.el_max)};
    if (!pair_ok(a, b, constraints)) continue;
    out.push_back(canonical_pair_label(a, b));
  }
  return out;
}

Manifest build_test_set(const simroom::FilterBank& bank, const std::string& out_dir,
                        const TestSetConfig& config, std::uint64_t seed) {
  if (config.num_sources < 1) throw std::invalid_argument("num_sources must be >= 1");
  for (const auto& d : config.directions)
    if (static_cast<int>(d.size()) != 2 * config.num_sources)
      throw std::invalid_argument("direction length does not match num_sources");
  if (config.kind != "white" && config.kind != "sparse")
    throw std::invalid_argument("kind must be 'white' or 'sparse'");
  for (const auto& d : config.directions)
    for (int m = 0; m < config.num_sources; ++m)
      if (!bank.contains({d[2 * m], d[2 * m + 1]}))
        throw std::invalid_argument("direction outside filter bank grid");

  fs::create_directories(fs::path(out_dir) / "spec");
  if (config.emit_audio) fs::create_directories(fs::path(out_dir) / "wav");

  const int F = bank.freq_bins();
  const double sr = bank.sample_rate();
  const int count = static_cast<int>(config.directions.size());

  Manifest manifest;
  manifest.meta = {{"seed", seed},
                   {"num_sources", config.num_sources},
                   {"kind", config.kind},
                   {"occupancy", config.occupancy},
                   {"noise_std", config.noise_std},
                   {"epsilon", config.epsilon},
                   {"hop", config.hop},
                   {"sample_rate", sr},
                   {"identical_sources", config.identical_sources},
                   {"bank", bank.to_json()}};
  manifest.entries.resize(count);
  std::exception_ptr pending;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
    RandomStream rs(seed, mix64(kTagTestDur) + i);
    const double dur = rs.uniform(config.duration_min_s, config.duration_max_s);
    const int T = std::max(1, static_cast<int>(std::lround(dur * sr / config.hop)));

    spectro::ComplexSpectrogram left, right;
    for (int m = 0; m < config.num_sources; ++m) {
      const std::uint64_t src_seed = config.identical_sources
                                         ? derive_seed(seed, kTagTestSource, i)
                                         : derive_seed(seed, kTagTestSource,
                                                       static_cast<std::uint64_t>(i) * 8 + m);
      const auto src = config.kind == "white"
                           ? simroom::white_noise_source(F, T, src_seed)
                           : simroom::sparse_source(F, T, config.occupancy, src_seed);
      const Direction dir{config.directions[i][2 * m], config.directions[i][2 * m + 1]};
      auto [l, r] = simroom::render_mixture(
          bank, {dir}, {src}, config.noise_std,
          derive_seed(seed, kTagTestNoise, static_cast<std::uint64_t>(i) * 8 + m), config.hop);
      if (m == 0) {
        left = std::move(l);
        right = std::move(r);
      } else {
        left.data += l.data;
        right.data += r.data;
      }
    }

    const auto feats = spectro::binaural_features(left, right, config.epsilon);
    ManifestEntry e;
    e.id = item_id(i);
    e.directions.assign(config.directions[i].data(),
                        config.directions[i].data() + config.directions[i].size());
    e.role = "test";
    e.kind = config.kind;
    e.spec_path = "spec/" + e.id + ".bnsp";
    spectro::write_bnsp((fs::path(out_dir) / e.spec_path).string(), feats);

    if (config.emit_audio) {
      audio::StereoAudio wav;
      wav.sample_rate = sr;
      wav.left = spectro::istft(left);
      wav.right = spectro::istft(right);
      e.audio_path = "wav/" + e.id + ".wav";
      audio::write_wav_f32((fs::path(out_dir) / e.audio_path).string(), wav);
    }
    manifest.entries[i] = std::move(e);
    } catch (...) {
#pragma omp critical
      if (!pending) pending = std::current_exception();
    }
  }
  if (pending) std::rethrow_exception(pending);

  save_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
  return manifest;
}

}  // namespace binloc::dataset
