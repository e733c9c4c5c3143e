#include "binloc/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "binloc/audio_io.hpp"
#include "binloc/fft.hpp"
#include "binloc/posterior.hpp"

namespace binloc::eval {

namespace fs = std::filesystem;

namespace {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<AxisErrors> gtea(const Vec& estimate, const Vec& truth) {
  if (estimate.size() != truth.size() || estimate.size() % 2 != 0 || estimate.size() == 0)
    throw std::invalid_argument("estimate/truth must be matching even-length direction vectors");
  const int M = static_cast<int>(estimate.size()) / 2;

  std::vector<int> perm(M);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_total = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int m = 0; m < M; ++m)
      total += std::hypot(estimate[2 * perm[m]] - truth[2 * m],
                          estimate[2 * perm[m] + 1] - truth[2 * m + 1]);
    if (total < best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<AxisErrors> out(M);
  for (int m = 0; m < M; ++m) {
    out[m].az = std::abs(estimate[2 * best[m]] - truth[2 * m]);
    out[m].el = std::abs(estimate[2 * best[m] + 1] - truth[2 * m + 1]);
  }
  return out;
}

ErrorSummary summarize(const std::vector<AxisErrors>& errors, double threshold_deg) {
  if (errors.empty()) throw std::invalid_argument("empty error list");
  ErrorSummary s;
  s.threshold_deg = threshold_deg;
  s.count = static_cast<int>(errors.size());

  std::vector<const AxisErrors*> in;
  for (const auto& e : errors)
    if (e.dist() <= threshold_deg) in.push_back(&e);
  s.inliers = static_cast<int>(in.size());
  s.outlier_pct = 100.0 * (s.count - s.inliers) / s.count;

  if (s.inliers == 0) {
    s.mean_az = s.std_az = s.mean_el = s.std_el = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double ma = 0, me = 0;
  for (const auto* e : in) {
    ma += e->az;
    me += e->el;
  }
  ma /= s.inliers;
  me /= s.inliers;
  double va = 0, ve = 0;
  for (const auto* e : in) {
    va += (e->az - ma) * (e->az - ma);
    ve += (e->el - me) * (e->el - me);
  }
  s.mean_az = ma;
  s.mean_el = me;
  s.std_az = std::sqrt(va / s.inliers);
  s.std_el = std::sqrt(ve / s.inliers);
  return s;
}

double gcc_phat_tdoa(std::span<const double> left, std::span<const double> right, int max_lag) {
  if (left.size() != right.size()) throw std::invalid_argument("channel length mismatch");
  if (max_lag < 1) throw std::invalid_argument("max_lag must be >= 1");
  if (static_cast<int>(left.size()) < 2 * max_lag)
    throw std::invalid_argument("signal shorter than 2*max_lag");

  const int len = static_cast<int>(left.size());
  const int frame = std::min(1024, len);
  const int hop = std::max(1, frame / 2);
  const int nfft = 2 * next_pow2(frame);
  const int T = (len - frame) / hop + 1;

  std::vector<double> win(frame);
  for (int i = 0; i < frame; ++i)
    win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / frame);

  // Per-frame refined peak lags pooled into a 0.5-sample histogram.
  const int half_bins = 2 * max_lag;  // bin index range [-half_bins, half_bins]
  std::vector<int> hist(2 * half_bins + 1, 0);
  std::vector<double> corr(2 * max_lag + 1);
  std::vector<std::complex<double>> xl(nfft), xr(nfft);
  int used_frames = 0;

  for (int t = 0; t < T; ++t) {
    const int off = t * hop;
    double energy = 0.0;
    for (int i = 0; i < frame; ++i)
      energy += left[off + i] * left[off + i] + right[off + i] * right[off + i];
    if (energy <= 0.0) continue;

    std::fill(xl.begin(), xl.end(), std::complex<double>(0, 0));
    std::fill(xr.begin(), xr.end(), std::complex<double>(0, 0));
    for (int i = 0; i < frame; ++i) {
      xl[i] = left[off + i] * win[i];
      xr[i] = right[off + i] * win[i];
    }
    detail::fft(xl.data(), nfft, false);
    detail::fft(xr.data(), nfft, false);
    for (int i = 0; i < nfft; ++i) {
      std::complex<double> c = xr[i] * std::conj(xl[i]);
      const double m = std::abs(c);
      xl[i] = m > 1e-300 ? c / m : std::complex<double>(0, 0);
    }
    detail::fft(xl.data(), nfft, true);

    for (int lag = -max_lag; lag <= max_lag; ++lag)
      corr[lag + max_lag] = xl[(lag + nfft) % nfft].real();

    int peak = 0;
    for (int i = 1; i < static_cast<int>(corr.size()); ++i)
      if (corr[i] > corr[peak]) peak = i;

    double delta = 0.0;
    if (peak > 0 && peak + 1 < static_cast<int>(corr.size())) {
      const double denom = corr[peak - 1] - 2.0 * corr[peak] + corr[peak + 1];
      if (denom < 0.0)
        delta = std::clamp(0.5 * (corr[peak - 1] - corr[peak + 1]) / denom, -0.5, 0.5);
    }
    const double refined = (peak - max_lag) + delta;
    const int bin = std::clamp(static_cast<int>(std::lround(refined / 0.5)), -half_bins,
                               half_bins);
    ++hist[bin + half_bins];
    ++used_frames;
  }
  if (used_frames == 0) throw std::runtime_error("no signal");

  int b = 0;
  for (int i = 1; i < static_cast<int>(hist.size()); ++i)
    if (hist[i] > hist[b]) b = i;

  double delta = 0.0;
  if (b > 0 && b + 1 < static_cast<int>(hist.size())) {
    const double nm = hist[b - 1], n0 = hist[b], np = hist[b + 1];
    const double denom = nm - 2.0 * n0 + np;
    if (denom < 0.0) delta = std::clamp((nm - np) / (2.0 * denom), -0.5, 0.5);
  }
  return (b - half_bins + delta) * 0.5;
}

TdoaRegressor fit_tdoa_regressor(const std::vector<double>& tdoas,
                                 const std::vector<double>& azimuths) {
  if (tdoas.size() != azimuths.size()) throw std::invalid_argument("length mismatch");
  const int n = static_cast<int>(tdoas.size());
  if (n < 2) throw std::invalid_argument("need at least 2 samples");

  double mt = 0, ma = 0;
  for (int i = 0; i < n; ++i) {
    mt += tdoas[i];
    ma += azimuths[i];
  }
  mt /= n;
  ma /= n;
  double stt = 0, sta = 0;
  for (int i = 0; i < n; ++i) {
    stt += (tdoas[i] - mt) * (tdoas[i] - mt);
    sta += (tdoas[i] - mt) * (azimuths[i] - ma);
  }
  if (stt <= 0.0) throw std::invalid_argument("degenerate regression: constant tdoa");
  TdoaRegressor r;
  r.slope = sta / stt;
  r.intercept = ma - r.slope * mt;
  return r;
}

nlohmann::json regressor_to_json(const TdoaRegressor& r, int max_lag) {
  return {{"version", 1},
          {"type", "phat-regressor"},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"max_lag", max_lag}};
}

std::pair<TdoaRegressor, int> regressor_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != std::string("phat-regressor"))
    throw std::runtime_error("not a phat-regressor document");
  TdoaRegressor r;
  r.slope = j.at("slope").get<double>();
  r.intercept = j.at("intercept").get<double>();
  return {r, j.at("max_lag").get<int>()};
}

EvalResult evaluate_manifest(const gllim::GllimModel& model, const dataset::Manifest& manifest,
                             const std::string& dataset_dir, const EvalOptions& options) {
  const int count = static_cast<int>(manifest.entries.size());
  if (count == 0) throw std::invalid_argument("empty manifest");
  const int M = model.L() / 2;

  std::vector<ItemResult> sbm_items(count);
  std::vector<double> loc_ms(count, 0.0);
  std::vector<ItemResult> phat_items(options.phat ? count : 0);
  std::exception_ptr pending;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      const auto& entry = manifest.entries[i];
      if (static_cast<int>(entry.directions.size()) != 2 * M)
        throw std::runtime_error("manifest entry " + entry.id +
                                 " does not match model source count");
      Vec truth = Eigen::Map<const Vec>(entry.directions.data(), entry.directions.size());

      const auto spec =
          spectro::read_bnsp((fs::path(dataset_dir) / entry.spec_path).string());
      const auto report = posterior::localize(model, spec);
      loc_ms[i] = report.elapsed_ms;

      ItemResult item;
      item.id = entry.id;
      item.method = "sbm";
      item.truth = truth;
      item.estimate = report.estimate;
      item.errors = gtea(report.estimate, truth);
      sbm_items[i] = std::move(item);

      if (options.phat) {
        if (M != 1) throw std::runtime_error("PHAT baseline supports single-source items only");
        if (entry.audio_path.empty())
          throw std::runtime_error("manifest entry " + entry.id +
                                   " has no audio for the PHAT baseline");
        const auto wav =
            audio::read_wav((fs::path(dataset_dir) / entry.audio_path).string());
        const double tdoa = gcc_phat_tdoa(wav.left, wav.right, options.phat_max_lag);
        ItemResult ph;
        ph.id = entry.id;
        ph.method = "phat";
        ph.truth = truth;
        ph.estimate = Vec::Zero(2);
        ph.estimate[0] = options.phat->apply(tdoa);
        ph.estimate[1] = 0.0;
        ph.has_elevation = false;
        AxisErrors e;
        e.az = std::abs(ph.estimate[0] - truth[0]);
        e.el = 0.0;
        ph.errors = {e};
        phat_items[i] = std::move(ph);
      }
    } catch (...) {
#pragma omp critical
      if (!pending) pending = std::current_exception();
    }
  }
  if (pending) std::rethrow_exception(pending);

  EvalResult out;
  out.items = sbm_items;
  if (options.phat) out.items.insert(out.items.end(), phat_items.begin(), phat_items.end());

  std::vector<AxisErrors> sbm_errors;
  for (const auto& item : sbm_items)
    sbm_errors.insert(sbm_errors.end(), item.errors.begin(), item.errors.end());
  out.sbm_summary = summarize(sbm_errors, options.inlier_threshold_deg);
  const ErrorSummary sbm_all =
      summarize(sbm_errors, std::numeric_limits<double>::infinity());
  int above5 = 0;
  for (const auto& e : sbm_errors) above5 += e.dist() > 5.0 ? 1 : 0;

  double total_ms = 0.0;
  for (double v : loc_ms) total_ms += v;
  out.mean_localize_ms = total_ms / count;

  nlohmann::json j;
  j["version"] = 1;
  j["type"] = "evaluation-summary";
  j["num_items"] = count;
  j["num_sources"] = M;
  j["inlier_threshold_deg"] = options.inlier_threshold_deg;
  j["gtea_assignment"] = "min-total-distance-permutation";
  auto block = [](const ErrorSummary& s) {
    return nlohmann::json{{"azimuth_mean", s.mean_az},   {"azimuth_std", s.std_az},
                          {"elevation_mean", s.mean_el}, {"elevation_std", s.std_el},
                          {"outlier_pct", s.outlier_pct}, {"inliers", s.inliers},
                          {"count", s.count}};
  };
  j["sbm"] = block(out.sbm_summary);
  j["sbm"]["all_azimuth_mean"] = sbm_all.mean_az;
  j["sbm"]["all_azimuth_std"] = sbm_all.std_az;
  j["sbm"]["all_elevation_mean"] = sbm_all.mean_el;
  j["sbm"]["all_elevation_std"] = sbm_all.std_el;
  j["sbm"]["pct_above_5deg"] = 100.0 * above5 / static_cast<double>(sbm_errors.size());

  if (options.phat) {
    std::vector<AxisErrors> pe;
    for (const auto& item : phat_items)
      pe.insert(pe.end(), item.errors.begin(), item.errors.end());
    out.phat_summary = summarize(pe, options.inlier_threshold_deg);
    const ErrorSummary pall = summarize(pe, std::numeric_limits<double>::infinity());
    j["phat"] = block(*out.phat_summary);
    j["phat"]["all_azimuth_mean"] = pall.mean_az;
    j["phat"]["all_azimuth_std"] = pall.std_az;
    int pa5 = 0;
    for (const auto& e : pe) pa5 += e.dist() > 5.0 ? 1 : 0;
    j["phat"]["pct_above_5deg"] = 100.0 * pa5 / static_cast<double>(pe.size());
  }
  out.summary_json = std::move(j);
  return out;
}

void write_results_csv(const std::string& path, const std::vector<ItemResult>& items,
                       int num_sources) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);

  f << "id,method";
  for (int m = 1; m <= num_sources; ++m) f << ",truth_az_" << m << ",truth_el_" << m;
  for (int m = 1; m <= num_sources; ++m) f << ",est_az_" << m << ",est_el_" << m;
  for (int m = 1; m <= num_sources; ++m)
    f << ",err_az_" << m << ",err_el_" << m << ",dist_" << m;
  f << "\n";

  for (const auto& item : items) {
    f << item.id << "," << item.method;
    for (int m = 0; m < num_sources; ++m)
      f << "," << fmt_g17(item.truth[2 * m]) << "," << fmt_g17(item.truth[2 * m + 1]);
    for (int m = 0; m < num_sources; ++m) {
      if (m < item.estimate.size() / 2) {
        f << "," << fmt_g17(item.estimate[2 * m]);
        f << "," << (item.has_elevation ? fmt_g17(item.estimate[2 * m + 1]) : std::string());
      } else {
        f << ",,";
      }
    }
    for (int m = 0; m < num_sources; ++m) {
      if (m < static_cast<int>(item.errors.size())) {
        f << "," << fmt_g17(item.errors[m].az);
        f << "," << (item.has_elevation ? fmt_g17(item.errors[m].el) : std::string());
        f << ","
          << fmt_g17(item.has_elevation ? item.errors[m].dist() : item.errors[m].az);
      } else {
        f << ",,,";
      }
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<SweepRow> sweep(const std::string& axis, const std::vector<double>& values,
                            const SweepConfig& config) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (axis != "K" && axis != "N") throw std::invalid_argument("axis must be K or N");

  const auto bank = simroom::FilterBank::make(config.bank_grid, config.F, config.sample_rate,
                                              config.smoothness_order, config.bank_seed);
  const double epsilon = dataset::calibrate_epsilon(bank, config.train_frames, config.noise_std,
                                                    config.epsilon_factor, config.seed);

  dataset::TestSetConfig tc;
  tc.num_sources = 1;
  tc.directions = dataset::offset_test_grid(config.train_grid, config.test_n_az, config.test_n_el);
  tc.kind = "sparse";
  tc.occupancy = config.occupancy;
  tc.noise_std = config.noise_std;
  tc.epsilon = epsilon;
  tc.duration_min_s = tc.duration_max_s = config.duration_s;
  const std::string test_dir = config.work_dir + "/sweep_test";
  const auto manifest = dataset::build_test_set(bank, test_dir, tc, config.seed + 1);

  std::vector<SweepRow> rows;
  for (double value : values) {
    simroom::GridSpec grid = config.train_grid;
    int k = config.k;
    if (axis == "K") {
      k = static_cast<int>(value);
    } else {
      const double ratio =
          static_cast<double>(config.train_grid.n_az) / config.train_grid.n_el;
      grid.n_az = std::max(2, static_cast<int>(std::lround(std::sqrt(value * ratio))));
      grid.n_el = std::max(2, static_cast<int>(std::lround(value / grid.n_az)));
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto train = dataset::build_single_source_training(bank, grid, config.train_frames,
                                                             config.noise_std, config.seed);
    gllim::FitConfig fc;
    fc.seed = config.seed;
    const auto model = gllim::fit(train, k, fc);
    const double train_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();

    EvalOptions opts;
    opts.inlier_threshold_deg = std::numeric_limits<double>::infinity();
    const auto result = evaluate_manifest(model, manifest, test_dir, opts);

    double mean_gtea = 0.0;
    int n_err = 0;
    for (const auto& item : result.items)
      for (const auto& e : item.errors) {
        mean_gtea += e.dist();
        ++n_err;
      }
    SweepRow row;
    row.axis = axis;
    row.value = value;
    row.realized_n = train.N();
    row.realized_k = model.K();
    row.mean_gtea_deg = mean_gtea / n_err;
    row.localize_ms = result.mean_localize_ms;
    row.train_ms = train_ms;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "axis,value,realized_n,realized_k,mean_gtea_deg,localize_ms,train_ms\n";
  for (const auto& r : rows) {
    f << r.axis << "," << fmt_g17(r.value) << "," << r.realized_n << "," << r.realized_k << ","
      << fmt_g17(r.mean_gtea_deg) << "," << fmt_g17(r.localize_ms) << ","
      << fmt_g17(r.train_ms) << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace binloc::eval
