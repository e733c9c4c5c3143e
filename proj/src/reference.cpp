#include "binloc/reference.hpp"

namespace binloc::reference {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double log_gauss(const Vec& x, const Vec& mean, const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  const double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  const Vec v = x - mean;
  return -0.5 * (x.size() * kLog2Pi + logdet + v.dot(llt.solve(v)));
}
}  // namespace

posterior::PosteriorGmm spectrogram_posterior(const gllim::GllimModel& model,
                                              const spectro::BinauralSpectrogram& spec) {
  const int K = model.K(), L = model.L(), D = model.D(), T = spec.T();
  if (spec.D() != D) throw std::invalid_argument("spectrogram D does not match model D");

  long active = 0;
  for (int d = 0; d < D; ++d)
    for (int t = 0; t < T; ++t) active += spec.activity(d, t) ? 1 : 0;
  if (active == 0) throw std::invalid_argument("empty spectrogram");

  posterior::PosteriorGmm gmm;
  gmm.comps.resize(K);
  std::vector<double> log_nu(K);

  for (int k = 0; k < K; ++k) {
    const auto& comp = model.comps[k];
    Eigen::LLT<Mat> llt_gamma(comp.Gamma);
    const Mat gamma_inv = llt_gamma.solve(Mat::Identity(L, L));
    const double logdet_gamma = 2.0 * Mat(llt_gamma.matrixL()).diagonal().array().log().sum();

    Mat vinv = gamma_inv;
    Vec h = gamma_inv * comp.c;
    KahanSum quad_y;
    for (int d = 0; d < D; ++d) {
      const double w = 1.0 / model.sigma2[d];
      for (int t = 0; t < T; ++t) {
        if (!spec.activity(d, t)) continue;
        const double y = spec.features(d, t);
        const double r = y - comp.b[d];
        quad_y.add(w * r * r);
        for (int i = 0; i < L; ++i) {
          h[i] += w * comp.A(d, i) * r;
          for (int j = 0; j < L; ++j) vinv(i, j) += w * comp.A(d, i) * comp.A(d, j);
        }
      }
    }

    Eigen::LLT<Mat> llt_v(vinv);
    const double logdet_vinv = 2.0 * Mat(llt_v.matrixL()).diagonal().array().log().sum();
    gmm.comps[k].mu = llt_v.solve(h);
    gmm.comps[k].V = llt_v.solve(Mat::Identity(L, L));
    const double quad_c = comp.c.dot(gamma_inv * comp.c);
    const double quad_mu = gmm.comps[k].mu.dot(h);
    log_nu[k] = std::log(comp.pi) - 0.5 * (logdet_vinv + logdet_gamma) -
                0.5 * (quad_y.value() + quad_c - quad_mu);
  }

  const double lse = log_sum_exp(log_nu);
  for (int k = 0; k < K; ++k) gmm.comps[k].nu = std::exp(log_nu[k] - lse);
  return gmm;
}

RMat e_step(const gllim::GllimModel& model, const gllim::TrainingSet& train) {
  const int N = train.N(), K = model.K();
  RMat resp(N, K);
  for (int n = 0; n < N; ++n) {
    std::vector<double> lp(K);
    const Vec x = train.X.row(n).transpose();
    const Vec y = train.Y.row(n).transpose();
    for (int k = 0; k < K; ++k) {
      const auto& comp = model.comps[k];
      double ly = 0.0;
      for (int d = 0; d < model.D(); ++d) {
        const double r = y[d] - comp.A.row(d).dot(x) - comp.b[d];
        ly += -0.5 * (kLog2Pi + std::log(model.sigma2[d]) + r * r / model.sigma2[d]);
      }
      lp[k] = std::log(comp.pi) + log_gauss(x, comp.c, comp.Gamma) + ly;
    }
    const double lse = log_sum_exp(lp);
    for (int k = 0; k < K; ++k) resp(n, k) = std::exp(lp[k] - lse);
  }
  return resp;
}

double log_likelihood(const gllim::GllimModel& model, const gllim::TrainingSet& train) {
  const int N = train.N(), K = model.K();
  KahanSum total;
  for (int n = 0; n < N; ++n) {
    std::vector<double> lp(K);
    const Vec x = train.X.row(n).transpose();
    const Vec y = train.Y.row(n).transpose();
    for (int k = 0; k < K; ++k) {
      const auto& comp = model.comps[k];
      double ly = 0.0;
      for (int d = 0; d < model.D(); ++d) {
        const double r = y[d] - comp.A.row(d).dot(x) - comp.b[d];
        ly += -0.5 * (kLog2Pi + std::log(model.sigma2[d]) + r * r / model.sigma2[d]);
      }
      lp[k] = std::log(comp.pi) + log_gauss(x, comp.c, comp.Gamma) + ly;
    }
    total.add(log_sum_exp(lp));
  }
  return total.value();
}

gllim::GllimModel m_step(const RMat& resp, const gllim::TrainingSet& train,
                         gllim::PriorMode prior_mode) {
  // Same contract as gllim::m_step, all accumulations as explicit loops.
  const int N = train.N(), L = train.L(), D = train.D();
  const int K_in = static_cast<int>(resp.cols());

  double sigma2_floor = 0.0;
  for (int d = 0; d < D; ++d) {
    const double mean = train.Y.col(d).mean();
    sigma2_floor += (train.Y.col(d).array() - mean).square().sum() / N;
  }
  sigma2_floor = std::max(1e-8 * sigma2_floor / D, 1e-30);
  double gamma_floor = 0.0;
  for (int l = 0; l < L; ++l) {
    const double mean = train.X.col(l).mean();
    gamma_floor += (train.X.col(l).array() - mean).square().sum() / N;
  }
  gamma_floor = std::max(1e-8 * gamma_floor / L, 1e-30);

  std::vector<int> keep;
  std::vector<double> mass(K_in, 0.0);
  for (int k = 0; k < K_in; ++k) {
    for (int n = 0; n < N; ++n) mass[k] += resp(n, k);
    if (mass[k] >= L + 1.0) keep.push_back(k);
  }
  if (keep.empty()) throw std::runtime_error("training collapsed");
  const int K = static_cast<int>(keep.size());
  double total_mass = 0.0;
  for (int j = 0; j < K; ++j) total_mass += mass[keep[j]];

  gllim::GllimModel model;
  model.prior_mode = prior_mode;
  model.comps.resize(K);
  Vec sigma2 = Vec::Zero(D);

  for (int j = 0; j < K; ++j) {
    const int k = keep[j];
    const double rk = mass[k];

    Vec c = Vec::Zero(L);
    for (int n = 0; n < N; ++n) c += resp(n, k) * train.X.row(n).transpose();
    c /= rk;

    Mat cxx = Mat::Zero(L, L);
    for (int n = 0; n < N; ++n) {
      const Vec v = train.X.row(n).transpose() - c;
      cxx += resp(n, k) * v * v.transpose();
    }
    cxx /= rk;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (cxx + cxx.transpose()));
    Mat gamma = es.eigenvectors() * es.eigenvalues().cwiseMax(gamma_floor).asDiagonal() *
                es.eigenvectors().transpose();
    gamma = 0.5 * (gamma + gamma.transpose());

    Vec ybar = Vec::Zero(D);
    for (int n = 0; n < N; ++n) ybar += resp(n, k) * train.Y.row(n).transpose();
    ybar /= rk;
    Mat cyx = Mat::Zero(D, L);
    for (int n = 0; n < N; ++n)
      cyx += resp(n, k) * (train.Y.row(n).transpose() - ybar) *
             (train.X.row(n) - c.transpose());
    cyx /= rk;

    Eigen::LLT<Mat> llt(gamma);
    Mat A = llt.solve(cyx.transpose()).transpose();
    Vec b = ybar - A * c;

    for (int n = 0; n < N; ++n) {
      for (int d = 0; d < D; ++d) {
        const double r = train.Y(n, d) - A.row(d).dot(train.X.row(n)) - b[d];
        sigma2[d] += resp(n, k) * r * r;
      }
    }

    auto& comp = model.comps[j];
    comp.pi = prior_mode == gllim::PriorMode::fixed ? 1.0 / K : rk / total_mass;
    comp.c = std::move(c);
    comp.Gamma = std::move(gamma);
    comp.A = std::move(A);
    comp.b = std::move(b);
  }
  model.sigma2 = (sigma2 / total_mass).cwiseMax(sigma2_floor);
  return model;
}

spectro::BinauralSpectrogram binaural_features(const spectro::ComplexSpectrogram& left,
                                               const spectro::ComplexSpectrogram& right) {
  const int F = left.freq_bins(), T = left.frames();
  if (right.freq_bins() != F || right.frames() != T)
    throw std::invalid_argument("spectrogram dimension mismatch between channels");

  spectro::BinauralSpectrogram out;
  out.freq_bins = F;
  out.features.resize(3 * F, T);
  out.activity = MaskMat::Ones(3 * F, T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      const double ml = std::max(std::abs(left.data(f, t)), 1e-12);
      const double mr = std::max(std::abs(right.data(f, t)), 1e-12);
      out.features(f, t) = 20.0 * std::log10(mr / ml);
      const std::complex<double> r = right.data(f, t) * std::conj(left.data(f, t));
      const double rm = std::abs(r);
      if (rm < 1e-24) {
        out.features(F + f, t) = 1.0;
        out.features(2 * F + f, t) = 0.0;
      } else {
        out.features(F + f, t) = r.real() / rm;
        out.features(2 * F + f, t) = r.imag() / rm;
      }
    }
  }
  return out;
}

}  // namespace binloc::reference
