#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "binloc/common.hpp"
#include "binloc/gllim.hpp"
#include "binloc/spectro.hpp"

namespace binloc::posterior {

// Gaussian-mixture posterior over direction space given a sparse binaural
// spectrogram: p(x | S) = sum_k nu_k N(x; mu_k, V_k).
struct PosteriorGmm {
  struct Component {
    double nu = 0.0;
    Vec mu;  // L
    Mat V;   // L x L
  };
  std::vector<Component> comps;

  int K() const { return static_cast<int>(comps.size()); }
  int L() const { return comps.empty() ? 0 : static_cast<int>(comps.front().mu.size()); }
};

// Closed-form posterior, Eqs. (16)-(19). The per-component accumulations run
// over the active (d, t) entries in compensated summation with a fixed order,
// so results are independent of scheduling and of the values at masked
// entries.
PosteriorGmm spectrogram_posterior(const gllim::GllimModel& model,
                                   const spectro::BinauralSpectrogram& spec);

// x_hat = sum_k nu_k mu_k, Eq. (20).
Vec posterior_mean(const PosteriorGmm& gmm);

struct GridSpec2D {
  double x0_min = -1.0, x0_max = 1.0;
  int n0 = 101;
  double x1_min = -1.0, x1_max = 1.0;
  int n1 = 101;

  double step0() const { return (x0_max - x0_min) / (n0 - 1); }
  double step1() const { return (x1_max - x1_min) / (n1 - 1); }
};

// Brute-force quadrature of the unnormalized posterior integrand
//   sum_k pi_k N(x; c_k, Gamma_k) prod_{d,t} N(y'_dt; a_dk^T x + b_dk, sigma2_d)^chi_dt
// over a regular grid. Independent of the closed form above; restricted to
// single-source posteriors (L = 2).
struct GridPosterior {
  GridSpec2D grid;
  RMat density;      // n0 x n1, sums to 1 over nodes
  Vec mean;          // 2
  Vec comp_weights;  // K, sums to 1
};

GridPosterior grid_oracle_posterior(const gllim::GllimModel& model,
                                    const spectro::BinauralSpectrogram& spec,
                                    const GridSpec2D& grid);

// Default oracle grid: the given direction bounding box padded by 10%,
// 101 x 101 nodes.
GridSpec2D default_oracle_grid(double x0_min, double x0_max, double x1_min, double x1_max,
                               int nodes = 101);

struct LocalizationReport {
  int num_sources = 0;
  Vec estimate;  // L = 2M degrees
  PosteriorGmm gmm;
  double active_fraction = 0.0;
  double elapsed_ms = 0.0;  // wall clock; never serialized into content JSON
};

LocalizationReport localize(const gllim::GllimModel& model,
                            const spectro::BinauralSpectrogram& spec);

// Deterministic content (timing excluded; it goes to a metadata sidecar).
nlohmann::json report_to_json(const LocalizationReport& report);

}  // namespace binloc::posterior
