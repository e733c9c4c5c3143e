#include "binloc/simroom.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>

#include "binloc/rng.hpp"

namespace binloc::simroom {

namespace {

constexpr double kTauMaxSec = 0.7e-3;  // interaural delay at |sin az| = 1
constexpr double kIldClampDb = 12.0;
constexpr double kCommonClampDb = 6.0;

// Smooth random expansion sum_{p,q <= order} a_pq cos(p*u + phi) cos(q*v + psi).
struct TrigExpansion {
  struct Term {
    int p, q;
    double amp, phi, psi;
  };
  std::vector<Term> terms;

  static TrigExpansion draw(RandomStream& rs, int order, double scale) {
    TrigExpansion e;
    for (int p = 0; p <= order; ++p) {
      for (int q = 0; q <= order; ++q) {
        if (p == 0 && q == 0) continue;
        Term t;
        t.p = p;
        t.q = q;
        t.amp = rs.normal() * scale / (1.0 + p + q);
        t.phi = rs.uniform(0.0, 2.0 * kPi);
        t.psi = rs.uniform(0.0, 2.0 * kPi);
        e.terms.push_back(t);
      }
    }
    return e;
  }

  double eval(double u, double v) const {
    double s = 0.0;
    for (const auto& t : terms)
      s += t.amp * std::cos(t.p * u + t.phi) * std::cos(t.q * v + t.psi);
    return s;
  }
};

// Per-frequency synthesis coefficients, deterministic in (seed, bin).
struct BinCoeffs {
  double f_hz;
  double gamma_db;    // azimuth ILD slope
  double delta_db;    // elevation ILD slope, sign varies across the spectrum
  double eps_phase;   // elevation phase coupling
  TrigExpansion level_asym;
  TrigExpansion phase_asym;
  TrigExpansion common;

  static BinCoeffs make(std::uint64_t seed, int bin, int F, double sample_rate, int order) {
    RandomStream rs(seed, static_cast<std::uint64_t>(bin));
    BinCoeffs c;
    c.f_hz = (bin + 1) * sample_rate / (2.0 * F);
    const double x = c.f_hz / (sample_rate / 2.0);
    c.gamma_db = 3.0 + 6.0 * x;
    c.delta_db = 4.0 * std::cos(3.0 * kPi * x + 0.7);
    c.eps_phase = 0.4 * std::sin(2.2 * kPi * x + 0.3);
    c.level_asym = TrigExpansion::draw(rs, order, 1.2);
    c.phase_asym = TrigExpansion::draw(rs, order, 0.35);
    c.common = TrigExpansion::draw(rs, order, 2.0);
    return c;
  }

  std::pair<std::complex<double>, std::complex<double>> eval(const Direction& d,
                                                             double asymmetry) const {
    const double u = deg_to_rad(d.az);
    const double v = deg_to_rad(d.el);

    double ild = gamma_db * std::sin(u) * (1.0 + 0.35 * std::sin(v)) +
                 delta_db * std::sin(v) + asymmetry * level_asym.eval(u, v);
    ild = std::clamp(ild, -kIldClampDb, kIldClampDb);
    const double common_db = std::clamp(common.eval(u, v), -kCommonClampDb, kCommonClampDb);

    // arg(h_R / h_L) = -2 pi f tau + elevation/texture terms, split evenly.
    const double tau = kTauMaxSec * std::sin(u);
    const double dphi = -2.0 * kPi * f_hz * tau + eps_phase * std::sin(v) +
                        asymmetry * phase_asym.eval(u, v);

    const double mag_l = std::pow(10.0, (common_db - 0.5 * ild) / 20.0);
    const double mag_r = std::pow(10.0, (common_db + 0.5 * ild) / 20.0);
    const std::complex<double> hl = std::polar(mag_l, -0.5 * dphi);
    const std::complex<double> hr = std::polar(mag_r, +0.5 * dphi);
    return {hl, hr};
  }
};

}  // namespace

FilterBank FilterBank::make(const GridSpec& grid, int F, double sample_rate,
                            int smoothness_order, std::uint64_t seed, double asymmetry) {
  if (grid.n_az < 2 || grid.n_el < 2)
    throw std::invalid_argument("filter bank grid needs >= 2 points per axis");
  if (F < 4) throw std::invalid_argument("filter bank needs F >= 4");

  FilterBank bank;
  bank.grid_ = grid;
  bank.F_ = F;
  bank.sample_rate_ = sample_rate;
  bank.order_ = smoothness_order;
  bank.seed_ = seed;
  bank.asymmetry_ = asymmetry;
  bank.left_.resize(static_cast<Eigen::Index>(grid.n_az) * grid.n_el, F);
  bank.right_.resize(static_cast<Eigen::Index>(grid.n_az) * grid.n_el, F);

#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    const BinCoeffs c = BinCoeffs::make(seed, f, F, sample_rate, smoothness_order);
    for (int ia = 0; ia < grid.n_az; ++ia) {
      for (int ie = 0; ie < grid.n_el; ++ie) {
        const auto [hl, hr] = c.eval(grid.node(ia, ie), asymmetry);
        const Eigen::Index node = static_cast<Eigen::Index>(ia) * grid.n_el + ie;
        bank.left_(node, f) = hl;
        bank.right_(node, f) = hr;
      }
    }
  }
  return bank;
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> FilterBank::gains_at_node(int ia, int ie) const {
  const Eigen::Index node = static_cast<Eigen::Index>(ia) * grid_.n_el + ie;
  return {left_.row(node).transpose(), right_.row(node).transpose()};
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> FilterBank::gains_at(const Direction& d) const {
  if (!grid_.contains(d))
    throw std::invalid_argument("direction outside filter bank grid");
  const double fa = (d.az - grid_.az_min) / grid_.az_step();
  const double fe = (d.el - grid_.el_min) / grid_.el_step();
  const int ia = std::min(static_cast<int>(fa), grid_.n_az - 2);
  const int ie = std::min(static_cast<int>(fe), grid_.n_el - 2);
  const double wa = fa - ia;
  const double we = fe - ie;

  const auto row = [&](int a, int e) {
    return static_cast<Eigen::Index>(a) * grid_.n_el + e;
  };
  Eigen::VectorXcd l = (1 - wa) * (1 - we) * left_.row(row(ia, ie)).transpose() +
                       (1 - wa) * we * left_.row(row(ia, ie + 1)).transpose() +
                       wa * (1 - we) * left_.row(row(ia + 1, ie)).transpose() +
                       wa * we * left_.row(row(ia + 1, ie + 1)).transpose();
  Eigen::VectorXcd r = (1 - wa) * (1 - we) * right_.row(row(ia, ie)).transpose() +
                       (1 - wa) * we * right_.row(row(ia, ie + 1)).transpose() +
                       wa * (1 - we) * right_.row(row(ia + 1, ie)).transpose() +
                       wa * we * right_.row(row(ia + 1, ie + 1)).transpose();
  return {std::move(l), std::move(r)};
}

nlohmann::json FilterBank::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["type"] = "filter-bank";
  j["grid"] = {{"az_min", grid_.az_min}, {"az_max", grid_.az_max}, {"n_az", grid_.n_az},
               {"el_min", grid_.el_min}, {"el_max", grid_.el_max}, {"n_el", grid_.n_el}};
  j["F"] = F_;
  j["sample_rate"] = sample_rate_;
  j["smoothness_order"] = order_;
  j["asymmetry"] = asymmetry_;
  j["seed"] = seed_;
  return j;
}

FilterBank FilterBank::from_json(const nlohmann::json& j) {
  if (j.value("type", "") != std::string("filter-bank"))
    throw std::runtime_error("not a filter-bank document");
  GridSpec g;
  const auto& jg = j.at("grid");
  g.az_min = jg.at("az_min").get<double>();
  g.az_max = jg.at("az_max").get<double>();
  g.n_az = jg.at("n_az").get<int>();
  g.el_min = jg.at("el_min").get<double>();
  g.el_max = jg.at("el_max").get<double>();
  g.n_el = jg.at("n_el").get<int>();
  return make(g, j.at("F").get<int>(), j.at("sample_rate").get<double>(),
              j.at("smoothness_order").get<int>(), j.at("seed").get<std::uint64_t>(),
              j.at("asymmetry").get<double>());
}

void FilterBank::dump_dense(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t na = grid_.n_az, ne = grid_.n_el, F = F_;
  f.write("BNKD", 4);
  f.write(reinterpret_cast<const char*>(&na), 4);
  f.write(reinterpret_cast<const char*>(&ne), 4);
  f.write(reinterpret_cast<const char*>(&F), 4);
  f.write(reinterpret_cast<const char*>(left_.data()),
          static_cast<std::streamsize>(sizeof(std::complex<double>) * left_.size()));
  f.write(reinterpret_cast<const char*>(right_.data()),
          static_cast<std::streamsize>(sizeof(std::complex<double>) * right_.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

SourceSignal white_noise_source(int F, int T, std::uint64_t seed) {
  SourceSignal s;
  s.kind = SourceSignal::Kind::white;
  s.occupancy = 1.0;
  s.spectrogram.resize(F, T);
#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      RandomStream rs(seed, static_cast<std::uint64_t>(f) * T + t);
      s.spectrogram(f, t) = rs.complex_normal();
    }
  }
  return s;
}

SourceSignal sparse_source(int F, int T, double occupancy, std::uint64_t seed) {
  if (!(occupancy > 0.0 && occupancy <= 1.0))
    throw std::invalid_argument("occupancy must be in (0, 1]");
  SourceSignal s;
  s.kind = SourceSignal::Kind::sparse;
  s.occupancy = occupancy;
  s.spectrogram = RMatC::Zero(F, T);

#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) {
    RandomStream rs(seed, static_cast<std::uint64_t>(t));
    const int target = std::clamp(static_cast<int>(std::lround(occupancy * F)), 1, F);

    // Split the active bins into contiguous bands and scatter the free
    // space into gaps around them; coverage per frame is exactly `target`.
    int n_bands = target == F ? 1 : 1 + static_cast<int>(rs.next_below(3));
    n_bands = std::min(n_bands, target);
    std::vector<int> band_len(n_bands);
    int remaining = target;
    for (int b = 0; b < n_bands - 1; ++b) {
      const int max_here = remaining - (n_bands - 1 - b);
      band_len[b] = 1 + static_cast<int>(rs.next_below(static_cast<std::uint32_t>(max_here)));
      remaining -= band_len[b];
    }
    band_len[n_bands - 1] = remaining;

    std::vector<int> gap(n_bands + 1, 0);
    int free_bins = F - target;
    for (int b = 0; b < n_bands; ++b) {
      gap[b] = static_cast<int>(rs.next_below(static_cast<std::uint32_t>(free_bins + 1)));
      free_bins -= gap[b];
    }
    gap[n_bands] = free_bins;

    int f = 0;
    for (int b = 0; b < n_bands; ++b) {
      f += gap[b];
      for (int i = 0; i < band_len[b]; ++i, ++f) s.spectrogram(f, t) = rs.complex_normal();
    }
  }
  return s;
}

std::pair<spectro::ComplexSpectrogram, spectro::ComplexSpectrogram> render_mixture(
    const FilterBank& bank, const std::vector<Direction>& directions,
    const std::vector<SourceSignal>& sources, double noise_std, std::uint64_t noise_seed,
    int hop) {
  if (directions.empty() || directions.size() != sources.size())
    throw std::invalid_argument("need one direction per source, at least one source");
  const int F = bank.freq_bins();
  const int T = static_cast<int>(sources.front().spectrogram.cols());
  for (const auto& s : sources)
    if (s.spectrogram.rows() != F || s.spectrogram.cols() != T)
      throw std::invalid_argument("source spectrogram dimensions do not match filter bank");

  const int M = static_cast<int>(sources.size());
  std::vector<Eigen::VectorXcd> gl(M), gr(M);
  for (int m = 0; m < M; ++m) std::tie(gl[m], gr[m]) = bank.gains_at(directions[m]);

  spectro::ComplexSpectrogram left, right;
  left.data.resize(F, T);
  right.data.resize(F, T);
  left.sample_rate = right.sample_rate = bank.sample_rate();
  left.window_len = right.window_len = 2 * F;
  left.hop = right.hop = hop;

#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      std::complex<double> sl(0.0, 0.0), sr(0.0, 0.0);
      for (int m = 0; m < M; ++m) {
        const std::complex<double> s = sources[m].spectrogram(f, t);
        sl += gl[m](f) * s;
        sr += gr[m](f) * s;
      }
      if (noise_std > 0.0) {
        RandomStream rs(noise_seed, static_cast<std::uint64_t>(f) * T + t);
        sl += noise_std * rs.complex_normal();
        sr += noise_std * rs.complex_normal();
      }
      left.data(f, t) = sl;
      right.data(f, t) = sr;
    }
  }
  return {std::move(left), std::move(right)};
}

}  // namespace binloc::simroom
