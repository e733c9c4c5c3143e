#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "binloc/common.hpp"
#include "binloc/spectro.hpp"

namespace binloc::simroom {

struct GridSpec {
  double az_min = -20.0, az_max = 20.0;
  int n_az = 41;
  double el_min = -26.0, el_max = 26.0;
  int n_el = 53;

  double az_step() const { return n_az > 1 ? (az_max - az_min) / (n_az - 1) : 0.0; }
  double el_step() const { return n_el > 1 ? (el_max - el_min) / (n_el - 1) : 0.0; }
  Direction node(int ia, int ie) const {
    return {az_min + ia * az_step(), el_min + ie * el_step()};
  }
  bool contains(const Direction& d) const {
    return d.az >= az_min && d.az <= az_max && d.el >= el_min && d.el <= el_max;
  }
};

// Direction-dependent binaural gain tables standing in for dummy-head HRTFs.
// Gains are synthesized from low-order trigonometric expansions in
// (azimuth, elevation): a frequency-proportional interaural delay with tau
// linear in sin(azimuth) scaled to +/-0.7 ms, sinusoidal level shading, and
// seeded smooth random texture. asymmetry = 0 gives a construction that is
// left/right symmetric dead-ahead.
class FilterBank {
 public:
  static FilterBank make(const GridSpec& grid, int F, double sample_rate,
                         int smoothness_order, std::uint64_t seed,
                         double asymmetry = 1.0);

  const GridSpec& grid() const { return grid_; }
  int freq_bins() const { return F_; }
  double sample_rate() const { return sample_rate_; }
  int smoothness_order() const { return order_; }
  std::uint64_t seed() const { return seed_; }
  double asymmetry() const { return asymmetry_; }

  bool contains(const Direction& d) const { return grid_.contains(d); }

  // Tabulated gains at a grid node, all frequency bins.
  std::pair<Eigen::VectorXcd, Eigen::VectorXcd> gains_at_node(int ia, int ie) const;

  // Bilinear interpolation between grid nodes; exact at nodes.
  std::pair<Eigen::VectorXcd, Eigen::VectorXcd> gains_at(const Direction& d) const;

  nlohmann::json to_json() const;
  static FilterBank from_json(const nlohmann::json& j);

  // Dense binary gain tables for inspection (magic "BNKD").
  void dump_dense(const std::string& path) const;

 private:
  FilterBank() = default;

  GridSpec grid_;
  int F_ = 0;
  double sample_rate_ = 16000.0;
  int order_ = 3;
  std::uint64_t seed_ = 0;
  double asymmetry_ = 1.0;
  RMatC left_;   // (n_az*n_el) x F
  RMatC right_;
};

struct SourceSignal {
  enum class Kind { white, sparse };
  RMatC spectrogram;  // F x T
  Kind kind = Kind::white;
  double occupancy = 1.0;
};

SourceSignal white_noise_source(int F, int T, std::uint64_t seed);

// Random time-frequency support of contiguous frequency bands per frame,
// covering ~occupancy of the bins, unit-variance complex Gaussian inside.
SourceSignal sparse_source(int F, int T, double occupancy, std::uint64_t seed);

// Observation model, Eq. (5): per-bin sum of gain-filtered sources plus
// i.i.d. complex Gaussian sensor noise of standard deviation noise_std per
// channel. Off-node directions use bilinear gain interpolation.
std::pair<spectro::ComplexSpectrogram, spectro::ComplexSpectrogram> render_mixture(
    const FilterBank& bank, const std::vector<Direction>& directions,
    const std::vector<SourceSignal>& sources, double noise_std, std::uint64_t noise_seed,
    int hop = 128);

}  // namespace binloc::simroom
