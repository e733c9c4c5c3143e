#include "binloc/posterior.hpp"

#include <omp.h>

#include <chrono>

namespace binloc::posterior {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Per-row sufficient statistics of the active entries. a_dk does not depend
// on t, so Eqs. (17)-(19) only need (count, sum, sum of squares) per row.
struct RowStats {
  Eigen::VectorXd count;  // n_d = sum_t chi_dt
  Vec sum;                // S_d = sum_t chi_dt y'_dt
  Vec sum_sq;             // Q_d = sum_t chi_dt y'_dt^2
  long active = 0;
};

RowStats row_stats(const spectro::BinauralSpectrogram& spec) {
  const int D = spec.D(), T = spec.T();
  RowStats st;
  st.count.resize(D);
  st.sum.resize(D);
  st.sum_sq.resize(D);

  long active = 0;
  int bad = 0;
#pragma omp parallel for schedule(static) reduction(+ : active) reduction(| : bad)
  for (int d = 0; d < D; ++d) {
    long n = 0;
    KahanSum s, q;
    for (int t = 0; t < T; ++t) {
      if (!spec.activity(d, t)) continue;  // masked values are never read
      const double y = spec.features(d, t);
      if (!std::isfinite(y)) {
        bad = 1;
        continue;
      }
      ++n;
      s.add(y);
      q.add(y * y);
    }
    st.count[d] = static_cast<double>(n);
    st.sum[d] = s.value();
    st.sum_sq[d] = q.value();
    active += n;
  }
  if (bad) throw std::invalid_argument("non-finite feature at an active entry");
  st.active = active;
  return st;
}

}  // namespace

PosteriorGmm spectrogram_posterior(const gllim::GllimModel& model,
                                   const spectro::BinauralSpectrogram& spec) {
  const int K = model.K(), L = model.L(), D = model.D();
  if (spec.D() != D) throw std::invalid_argument("spectrogram D does not match model D");

  const RowStats st = row_stats(spec);
  if (st.active == 0) throw std::invalid_argument("empty spectrogram");

  // Gamma factorizations up front; failures must not cross the parallel region.
  std::vector<Mat> gamma_inv_k(K);
  std::vector<double> logdet_gamma_k(K);
  for (int k = 0; k < K; ++k) {
    Eigen::LLT<Mat> llt(model.comps[k].Gamma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("singular Gamma in component " + std::to_string(k));
    gamma_inv_k[k] = llt.solve(Mat::Identity(L, L));
    logdet_gamma_k[k] = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  }

  PosteriorGmm gmm;
  gmm.comps.resize(K);
  std::vector<double> log_nu(K);
  int v_failure = 0;

#pragma omp parallel for schedule(dynamic) reduction(| : v_failure)
  for (int k = 0; k < K; ++k) {
    const auto& comp = model.comps[k];
    const Mat& gamma_inv = gamma_inv_k[k];
    const double logdet_gamma = logdet_gamma_k[k];

    // Accumulate the precision V_k^-1, the information vector, and the
    // Eq. (19) residual sum in fixed row order, compensated per entry.
    std::vector<KahanSum> prec(L * L);
    std::vector<KahanSum> info(L);
    KahanSum quad_y;
    for (int d = 0; d < D; ++d) {
      const double n_d = st.count[d];
      if (n_d == 0.0) continue;
      const double w = 1.0 / model.sigma2[d];
      const double b_d = comp.b[d];
      const double resid = st.sum[d] - n_d * b_d;
      const double sq = st.sum_sq[d] - 2.0 * b_d * st.sum[d] + n_d * b_d * b_d;
      quad_y.add(w * sq);
      for (int i = 0; i < L; ++i) {
        const double ai = comp.A(d, i);
        info[i].add(w * ai * resid);
        for (int j = i; j < L; ++j) prec[i * L + j].add(w * n_d * ai * comp.A(d, j));
      }
    }

    Mat vinv = gamma_inv;
    Vec h = gamma_inv * comp.c;
    for (int i = 0; i < L; ++i) {
      h[i] += info[i].value();
      for (int j = i; j < L; ++j) {
        vinv(i, j) += prec[i * L + j].value();
        if (j > i) vinv(j, i) = vinv(i, j);
      }
    }

    Eigen::LLT<Mat> llt_v(vinv);
    if (llt_v.info() != Eigen::Success) {
      v_failure = 1;
      continue;
    }
    const double logdet_vinv = 2.0 * Mat(llt_v.matrixL()).diagonal().array().log().sum();

    auto& out = gmm.comps[k];
    out.mu = llt_v.solve(h);
    out.V = llt_v.solve(Mat::Identity(L, L));
    out.V = 0.5 * (out.V + out.V.transpose());

    const double quad_c = comp.c.dot(gamma_inv * comp.c);
    const double quad_mu = out.mu.dot(h);  // mu^T V^-1 mu
    log_nu[k] = std::log(comp.pi) + 0.5 * (-logdet_vinv - logdet_gamma) -
                0.5 * (quad_y.value() + quad_c - quad_mu);
  }
  if (v_failure)
    throw std::runtime_error("posterior precision not positive-definite");

  const double lse = log_sum_exp(log_nu);
  for (int k = 0; k < K; ++k) gmm.comps[k].nu = std::exp(log_nu[k] - lse);
  return gmm;
}

Vec posterior_mean(const PosteriorGmm& gmm) {
  if (gmm.comps.empty()) throw std::invalid_argument("empty posterior");
  Vec x = Vec::Zero(gmm.L());
  for (const auto& comp : gmm.comps) x += comp.nu * comp.mu;
  return x;
}

GridSpec2D default_oracle_grid(double x0_min, double x0_max, double x1_min, double x1_max,
                               int nodes) {
  GridSpec2D g;
  const double pad0 = 0.1 * (x0_max - x0_min);
  const double pad1 = 0.1 * (x1_max - x1_min);
  g.x0_min = x0_min - pad0;
  g.x0_max = x0_max + pad0;
  g.x1_min = x1_min - pad1;
  g.x1_max = x1_max + pad1;
  g.n0 = g.n1 = nodes;
  return g;
}

GridPosterior grid_oracle_posterior(const gllim::GllimModel& model,
                                    const spectro::BinauralSpectrogram& spec,
                                    const GridSpec2D& grid) {
  if (model.L() != 2)
    throw std::invalid_argument("grid oracle is restricted to single-source posteriors (L = 2)");
  if (spec.D() != model.D()) throw std::invalid_argument("spectrogram D does not match model D");
  if (grid.n0 < 2 || grid.n1 < 2) throw std::invalid_argument("grid needs >= 2 nodes per axis");

  const int K = model.K(), D = model.D(), T = spec.T();

  std::vector<Mat> gamma_inv(K);
  std::vector<double> logdet_gamma(K), log_pi(K);
  for (int k = 0; k < K; ++k) {
    Eigen::LLT<Mat> llt(model.comps[k].Gamma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("singular Gamma in component " + std::to_string(k));
    gamma_inv[k] = llt.solve(Mat::Identity(2, 2));
    logdet_gamma[k] = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
    log_pi[k] = std::log(model.comps[k].pi);
  }

  // log p(x, Z=k, S) at every node, evaluated the brute-force way: a full
  // pass over the active (d, t) entries per node and component.
  std::vector<RMat> log_joint(K, RMat(grid.n0, grid.n1));

#pragma omp parallel for schedule(static) collapse(2)
  for (int i0 = 0; i0 < grid.n0; ++i0) {
    for (int i1 = 0; i1 < grid.n1; ++i1) {
      Vec x(2);
      x << grid.x0_min + i0 * grid.step0(), grid.x1_min + i1 * grid.step1();
      for (int k = 0; k < K; ++k) {
        const auto& comp = model.comps[k];
        const Vec v = x - comp.c;
        double lp = log_pi[k] -
                    0.5 * (2.0 * kLog2Pi + logdet_gamma[k] + v.dot(gamma_inv[k] * v));
        KahanSum acc;
        for (int d = 0; d < D; ++d) {
          const double pred = comp.A.row(d).dot(x) + comp.b[d];
          const double s2 = model.sigma2[d];
          for (int t = 0; t < T; ++t) {
            if (!spec.activity(d, t)) continue;
            const double r = spec.features(d, t) - pred;
            acc.add(-0.5 * (kLog2Pi + std::log(s2) + r * r / s2));
          }
        }
        lp += acc.value();
        log_joint[k](i0, i1) = lp;
      }
    }
  }

  double max_lp = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) max_lp = std::max(max_lp, log_joint[k].maxCoeff());

  GridPosterior out;
  out.grid = grid;
  out.density = RMat::Zero(grid.n0, grid.n1);
  out.comp_weights = Vec::Zero(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int i0 = 0; i0 < grid.n0; ++i0) {
      for (int i1 = 0; i1 < grid.n1; ++i1) {
        const double p = std::exp(log_joint[k](i0, i1) - max_lp);
        out.density(i0, i1) += p;
        out.comp_weights[k] += p;
        total += p;
      }
    }
  }
  out.density /= total;
  out.comp_weights /= total;

  out.mean = Vec::Zero(2);
  for (int i0 = 0; i0 < grid.n0; ++i0) {
    for (int i1 = 0; i1 < grid.n1; ++i1) {
      out.mean[0] += out.density(i0, i1) * (grid.x0_min + i0 * grid.step0());
      out.mean[1] += out.density(i0, i1) * (grid.x1_min + i1 * grid.step1());
    }
  }
  return out;
}

LocalizationReport localize(const gllim::GllimModel& model,
                            const spectro::BinauralSpectrogram& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  LocalizationReport report;
  report.gmm = spectrogram_posterior(model, spec);
  report.estimate = posterior_mean(report.gmm);
  report.num_sources = model.L() / 2;
  report.active_fraction = spec.active_fraction();
  report.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nlohmann::json report_to_json(const LocalizationReport& report) {
  nlohmann::json j;
  j["version"] = 1;
  j["type"] = "localization-report";
  j["num_sources"] = report.num_sources;
  j["estimate"] = std::vector<double>(report.estimate.data(),
                                      report.estimate.data() + report.estimate.size());
  j["active_fraction"] = report.active_fraction;
  j["gmm"] = nlohmann::json::array();
  for (const auto& comp : report.gmm.comps) {
    nlohmann::json jc;
    jc["nu"] = comp.nu;
    jc["mu"] = std::vector<double>(comp.mu.data(), comp.mu.data() + comp.mu.size());
    std::vector<double> v;
    for (int r = 0; r < comp.V.rows(); ++r)
      for (int c = 0; c < comp.V.cols(); ++c) v.push_back(comp.V(r, c));
    jc["V"] = v;
    j["gmm"].push_back(std::move(jc));
  }
  return j;
}

}  // namespace binloc::posterior
