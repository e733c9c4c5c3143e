#include "binloc/gllim.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

#include "binloc/rng.hpp"

namespace binloc::gllim {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kChunk = 256;

struct Floors {
  double sigma2 = 0.0;
  double gamma_eig = 0.0;
};

// sigma2 floor: 1e-8 x mean diagonal sample variance of Y.
// Gamma eigenvalue floor: 1e-8 x trace(cov X) / L.
Floors compute_floors(const TrainingSet& train) {
  const int N = train.N();
  Floors fl;
  double acc = 0.0;
  for (int d = 0; d < train.D(); ++d) {
    const double mean = train.Y.col(d).mean();
    acc += (train.Y.col(d).array() - mean).square().sum() / N;
  }
  fl.sigma2 = std::max(1e-8 * acc / train.D(), 1e-30);

  double tr = 0.0;
  for (int l = 0; l < train.L(); ++l) {
    const double mean = train.X.col(l).mean();
    tr += (train.X.col(l).array() - mean).square().sum() / N;
  }
  fl.gamma_eig = std::max(1e-8 * tr / train.L(), 1e-30);
  return fl;
}

Mat floor_spd(const Mat& S, double eig_floor) {
  Mat sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  Vec ev = es.eigenvalues().cwiseMax(eig_floor);
  Mat out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

struct ComponentCache {
  Mat gamma_inv;
  double logdet_gamma = 0.0;
  double log_pi = 0.0;
};

std::vector<ComponentCache> cache_components(const GllimModel& model) {
  std::vector<ComponentCache> cache(model.K());
  for (int k = 0; k < model.K(); ++k) {
    const auto& comp = model.comps[k];
    Eigen::LLT<Mat> llt(comp.Gamma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("singular Gamma in component " + std::to_string(k));
    cache[k].gamma_inv = llt.solve(Mat::Identity(comp.Gamma.rows(), comp.Gamma.cols()));
    cache[k].logdet_gamma =
        2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
    cache[k].log_pi = std::log(comp.pi);
  }
  return cache;
}

void check_dims(const GllimModel& model, const TrainingSet& train) {
  if (model.L() != train.L() || model.D() != train.D())
    throw std::invalid_argument("model/training-set dimension mismatch");
}

// Log joint densities log(pi_k N(x;c,Gamma) N(y;Ax+b,Sigma)) for every
// (n, k), plus optional row-normalized responsibilities and per-row
// log-sum-exp. Parallel over row chunks; each element has one owner.
void e_step_core(const GllimModel& model, const TrainingSet& train, RMat* resp, Vec* lse) {
  check_dims(model, train);
  const int N = train.N(), L = train.L(), D = train.D(), K = model.K();
  const auto cache = cache_components(model);
  const Vec inv_sigma2 = model.sigma2.cwiseInverse();
  const double sum_log_sigma2 = model.sigma2.array().log().sum();

  std::vector<double> base(K);
  for (int k = 0; k < K; ++k)
    base[k] = cache[k].log_pi - 0.5 * (L * kLog2Pi + cache[k].logdet_gamma) -
              0.5 * (D * kLog2Pi + sum_log_sigma2);

  if (resp) resp->resize(N, K);
  if (lse) lse->resize(N);

  const int n_chunks = (N + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < n_chunks; ++ci) {
    const int n0 = ci * kChunk;
    const int rows = std::min(kChunk, N - n0);
    const auto Xc = train.X.middleRows(n0, rows);
    const auto Yc = train.Y.middleRows(n0, rows);

    RMat logrho(rows, K);
    for (int k = 0; k < K; ++k) {
      const auto& comp = model.comps[k];
      RMat R = Yc - Xc * comp.A.transpose();
      R.rowwise() -= comp.b.transpose();
      Vec quad_y = (R.array().square().rowwise() * inv_sigma2.transpose().array())
                       .rowwise()
                       .sum();
      for (int i = 0; i < rows; ++i) {
        Vec v = Xc.row(i).transpose() - comp.c;
        const double quad_x = v.dot(cache[k].gamma_inv * v);
        logrho(i, k) = base[k] - 0.5 * (quad_x + quad_y[i]);
      }
    }
    for (int i = 0; i < rows; ++i) {
      const double m = log_sum_exp(logrho.row(i).data(), K);
      if (lse) (*lse)[n0 + i] = m;
      if (resp)
        for (int k = 0; k < K; ++k) (*resp)(n0 + i, k) = std::exp(logrho(i, k) - m);
    }
  }
}

GllimModel m_step_impl(const RMat& resp, const TrainingSet& train, PriorMode prior_mode,
                       const Floors& floors, double min_mass) {
  const int N = train.N(), L = train.L(), D = train.D();
  const int K_in = static_cast<int>(resp.cols());
  if (static_cast<int>(resp.rows()) != N)
    throw std::invalid_argument("responsibility rows do not match training set");

  Vec mass(K_in);
  for (int k = 0; k < K_in; ++k) mass[k] = resp.col(k).sum();

  std::vector<int> keep;
  for (int k = 0; k < K_in; ++k)
    if (mass[k] >= min_mass) keep.push_back(k);
  if (keep.empty()) throw std::runtime_error("training collapsed");
  const int K = static_cast<int>(keep.size());

  GllimModel model;
  model.prior_mode = prior_mode;
  model.comps.resize(K);
  const double total_mass = [&] {
    double s = 0.0;
    for (int j = 0; j < K; ++j) s += mass[keep[j]];
    return s;
  }();

  RMat res2(K, D);  // per-component weighted squared residuals

#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < K; ++j) {
    const int k = keep[j];
    const double rk = mass[k];
    const Vec rcol = resp.col(k);

    Vec c = train.X.transpose() * rcol / rk;
    RMat Xs = train.X.array().colwise() * rcol.array();
    Mat Cxx = train.X.transpose() * Xs / rk - c * c.transpose();
    Mat Gamma = floor_spd(Cxx, floors.gamma_eig);

    Vec ybar = train.Y.transpose() * rcol / rk;
    Mat Cyx = train.Y.transpose() * Xs / rk - ybar * c.transpose();

    Eigen::LLT<Mat> llt(Gamma);
    Mat A = llt.solve(Cyx.transpose()).transpose();  // Cyx * Gamma^-1
    Vec b = ybar - A * c;

    auto& comp = model.comps[j];
    comp.pi = prior_mode == PriorMode::fixed ? 1.0 / K : rk / total_mass;
    comp.c = std::move(c);
    comp.Gamma = std::move(Gamma);
    comp.A = std::move(A);
    comp.b = std::move(b);

    // Residual pass for the pooled sigma2 update, chunked to bound memory.
    Vec acc = Vec::Zero(D);
    const int n_chunks = (N + kChunk - 1) / kChunk;
    for (int ci = 0; ci < n_chunks; ++ci) {
      const int n0 = ci * kChunk;
      const int rows = std::min(kChunk, N - n0);
      RMat R = train.Y.middleRows(n0, rows) - train.X.middleRows(n0, rows) * comp.A.transpose();
      R.rowwise() -= comp.b.transpose();
      acc += (R.array().square().colwise() * rcol.segment(n0, rows).array())
                 .colwise()
                 .sum()
                 .transpose()
                 .matrix();
    }
    res2.row(j) = acc.transpose();
  }

  Vec sigma2 = Vec::Zero(D);
  for (int j = 0; j < K; ++j) sigma2 += res2.row(j).transpose();
  model.sigma2 = (sigma2 / total_mass).cwiseMax(floors.sigma2);
  return model;
}

// k-means++ seeding followed by Lloyd iterations on X. Returns false if an
// empty cluster survives to the end.
bool kmeans(const RMat& X, int K, RandomStream& rs, std::vector<int>* assign_out) {
  const int N = static_cast<int>(X.rows());
  Mat centers(K, X.cols());
  centers.row(0) = X.row(rs.next_below(static_cast<std::uint32_t>(N)));
  Vec d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < K; ++k) {
    const double total = d2.sum();
    int pick = 0;
    if (total > 0) {
      const double r = rs.next_double() * total;
      double run = 0.0;
      for (int n = 0; n < N; ++n) {
        run += d2[n];
        if (run >= r) {
          pick = n;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rs.next_below(static_cast<std::uint32_t>(N)));
    }
    centers.row(k) = X.row(pick);
    d2 = d2.cwiseMin((X.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }

  std::vector<int> assign(N, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int n = 0; n < N; ++n) {
      int best = 0;
      double best_d = (X.row(n) - centers.row(0)).squaredNorm();
      for (int k = 1; k < K; ++k) {
        const double d = (X.row(n) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (assign[n] != best) {
        assign[n] = best;
        changed = true;
      }
    }
    if (!changed) break;
    centers.setZero();
    std::vector<int> count(K, 0);
    for (int n = 0; n < N; ++n) {
      centers.row(assign[n]) += X.row(n);
      ++count[assign[n]];
    }
    for (int k = 0; k < K; ++k) {
      if (count[k] == 0) return false;
      centers.row(k) /= count[k];
    }
  }
  std::vector<int> count(K, 0);
  for (int n = 0; n < N; ++n) ++count[assign[n]];
  for (int k = 0; k < K; ++k)
    if (count[k] == 0) return false;
  *assign_out = std::move(assign);
  return true;
}

void validate_training_set(const TrainingSet& train) {
  if (train.N() < 1) throw std::invalid_argument("empty training set");
  if (static_cast<int>(train.Y.rows()) != train.N())
    throw std::invalid_argument("X/Y row count mismatch");
  if (!train.X.allFinite() || !train.Y.allFinite())
    throw std::invalid_argument("training set contains non-finite values");
}

}  // namespace

long long count_parameters(long long D, long long L, long long K) {
  if (D < 1 || L < 1 || K < 1) throw std::invalid_argument("dimensions must be positive");
  return K * (1 + L + L * (L + 1) / 2 + D * L + D);
}

std::string prior_mode_name(PriorMode m) {
  return m == PriorMode::fixed ? "fixed" : "free";
}

PriorMode prior_mode_from_name(const std::string& s) {
  if (s == "fixed") return PriorMode::fixed;
  if (s == "free") return PriorMode::free_weights;
  throw std::invalid_argument("unknown prior mode: " + s);
}

GllimModel init_params(const TrainingSet& train, int K, std::uint64_t seed,
                       PriorMode prior_mode) {
  validate_training_set(train);
  const int N = train.N(), L = train.L();
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (N < K * (L + 1))
    throw std::invalid_argument("training set too small: need N >= K*(L+1)");

  RandomStream rs(seed, 0x696E6974ULL);  // init stream
  const Floors floors = compute_floors(train);

  std::vector<int> assign;
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt)
    ok = kmeans(train.X, K, rs, &assign);
  if (!ok) throw std::runtime_error("k-means produced an empty cluster after 10 reseeds");

  RMat resp = RMat::Zero(N, K);
  for (int n = 0; n < N; ++n) resp(n, assign[n]) = 1.0;
  return m_step_impl(resp, train, prior_mode, floors, 0.0);
}

RMat e_step(const GllimModel& model, const TrainingSet& train) {
  RMat resp;
  e_step_core(model, train, &resp, nullptr);
  return resp;
}

GllimModel m_step(const RMat& resp, const TrainingSet& train, PriorMode prior_mode) {
  validate_training_set(train);
  return m_step_impl(resp, train, prior_mode, compute_floors(train), train.L() + 1.0);
}

GllimModel fit(const TrainingSet& train, int K, const FitConfig& config, FitTrace* trace) {
  validate_training_set(train);
  GllimModel model = init_params(train, K, config.seed, config.prior_mode);
  const Floors floors = compute_floors(train);

  FitTrace local;
  FitTrace& tr = trace ? *trace : local;
  tr.log_likelihood.clear();
  tr.pruned = 0;

  double ll_prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iter; ++iter) {
    RMat resp;
    Vec lse;
    e_step_core(model, train, &resp, &lse);
    KahanSum acc;
    for (int n = 0; n < train.N(); ++n) acc.add(lse[n]);
    const double ll = acc.value();
    tr.log_likelihood.push_back(ll);
    if (config.verbose)
      std::fprintf(stderr, "em iter %3d  K=%3d  ll=%.6f\n", iter, model.K(), ll);

    if (iter > 0 && std::isfinite(ll_prev) &&
        ll - ll_prev < config.rel_tol * std::abs(ll_prev))
      break;
    ll_prev = ll;

    const int k_before = model.K();
    model = m_step_impl(resp, train, config.prior_mode, floors, train.L() + 1.0);
    tr.pruned += k_before - model.K();
  }
  tr.iterations = static_cast<int>(tr.log_likelihood.size());
  return model;
}

double log_likelihood(const GllimModel& model, const TrainingSet& train) {
  Vec lse;
  e_step_core(model, train, nullptr, &lse);
  KahanSum acc;
  for (int n = 0; n < train.N(); ++n) acc.add(lse[n]);
  return acc.value();
}

InverseParams inverse_density_params(const GllimModel& model) {
  const int K = model.K(), L = model.L(), D = model.D();
  InverseParams inv;
  inv.inv_sigma2 = model.sigma2.cwiseInverse();
  const double sum_log_sigma2 = model.sigma2.array().log().sum();
  inv.comps.resize(K);

  for (int k = 0; k < K; ++k) {
    const auto& comp = model.comps[k];
    Eigen::LLT<Mat> llt_gamma(comp.Gamma);
    if (llt_gamma.info() != Eigen::Success)
      throw std::runtime_error("singular Gamma in component " + std::to_string(k));
    const Mat gamma_inv = llt_gamma.solve(Mat::Identity(L, L));
    const double logdet_gamma =
        2.0 * Mat(llt_gamma.matrixL()).diagonal().array().log().sum();

    const Mat W = comp.A.transpose() * inv.inv_sigma2.asDiagonal();  // A^T Sigma^-1
    Mat M = gamma_inv + W * comp.A;
    M = 0.5 * (M + M.transpose());
    Eigen::LLT<Mat> llt_m(M);
    if (llt_m.info() != Eigen::Success)
      throw std::runtime_error("singular posterior precision in component " + std::to_string(k));
    const double logdet_m = 2.0 * Mat(llt_m.matrixL()).diagonal().array().log().sum();

    auto& out = inv.comps[k];
    out.log_pi = std::log(comp.pi);
    out.Sigma_star = llt_m.solve(Mat::Identity(L, L));
    out.Sigma_star = 0.5 * (out.Sigma_star + out.Sigma_star.transpose());
    out.A_star = out.Sigma_star * W;
    out.b_star = out.Sigma_star * (gamma_inv * comp.c - W * comp.b);
    out.c_star = comp.A * comp.c + comp.b;
    // |Sigma + A Gamma A^T| = |Sigma| |Gamma| |Gamma^-1 + A^T Sigma^-1 A|
    out.logdet_gamma_star = sum_log_sigma2 + logdet_gamma + logdet_m;
  }
  return inv;
}

double InverseParams::log_density_y(int k, const Vec& y) const {
  const auto& comp = comps[k];
  const int D = static_cast<int>(y.size());
  const Vec z = y - comp.c_star;
  const double quad_full = z.cwiseProduct(inv_sigma2).dot(z);
  const Vec v = comp.A_star * z;
  Eigen::LLT<Mat> llt(comp.Sigma_star);
  const double quad_corr = v.dot(llt.solve(v));  // v^T Sigma*^-1 v (Woodbury)
  return -0.5 * (D * kLog2Pi + comp.logdet_gamma_star + (quad_full - quad_corr));
}

Mat InverseParams::dense_gamma_star(const GllimModel& model, int k) const {
  const auto& comp = model.comps[k];
  Mat g = comp.A * comp.Gamma * comp.A.transpose();
  g += Mat(model.sigma2.asDiagonal());
  return g;
}

Vec inverse_predict(const InverseParams& inv, const Vec& y) {
  const int K = inv.K();
  std::vector<double> logw(K);
  for (int k = 0; k < K; ++k) logw[k] = inv.comps[k].log_pi + inv.log_density_y(k, y);
  const double lse = log_sum_exp(logw);
  Vec x = Vec::Zero(inv.comps.front().b_star.size());
  for (int k = 0; k < K; ++k)
    x += std::exp(logw[k] - lse) * (inv.comps[k].A_star * y + inv.comps[k].b_star);
  return x;
}

Vec inverse_predict(const GllimModel& model, const Vec& y) {
  if (static_cast<int>(y.size()) != model.D())
    throw std::invalid_argument("feature vector length does not match model D");
  return inverse_predict(inverse_density_params(model), y);
}

Vec forward_predict(const GllimModel& model, const Vec& x) {
  if (static_cast<int>(x.size()) != model.L())
    throw std::invalid_argument("direction vector length does not match model L");
  const auto cache = cache_components(model);
  const int K = model.K();
  std::vector<double> logw(K);
  for (int k = 0; k < K; ++k) {
    const Vec v = x - model.comps[k].c;
    logw[k] = cache[k].log_pi -
              0.5 * (model.L() * kLog2Pi + cache[k].logdet_gamma +
                     v.dot(cache[k].gamma_inv * v));
  }
  const double lse = log_sum_exp(logw);
  Vec y = Vec::Zero(model.D());
  for (int k = 0; k < K; ++k)
    y += std::exp(logw[k] - lse) * (model.comps[k].A * x + model.comps[k].b);
  return y;
}

nlohmann::json model_to_json(const GllimModel& model) {
  nlohmann::json j;
  j["version"] = 1;
  j["type"] = "gllim-model";
  j["K"] = model.K();
  j["L"] = model.L();
  j["D"] = model.D();
  j["prior_mode"] = prior_mode_name(model.prior_mode);
  j["sigma2"] = std::vector<double>(model.sigma2.data(), model.sigma2.data() + model.D());
  j["components"] = nlohmann::json::array();
  for (const auto& comp : model.comps) {
    nlohmann::json jc;
    jc["pi"] = comp.pi;
    jc["c"] = std::vector<double>(comp.c.data(), comp.c.data() + comp.c.size());
    std::vector<double> gamma;
    for (int r = 0; r < comp.Gamma.rows(); ++r)
      for (int cidx = 0; cidx < comp.Gamma.cols(); ++cidx) gamma.push_back(comp.Gamma(r, cidx));
    jc["Gamma"] = gamma;
    std::vector<double> a;
    for (int r = 0; r < comp.A.rows(); ++r)
      for (int cidx = 0; cidx < comp.A.cols(); ++cidx) a.push_back(comp.A(r, cidx));
    jc["A"] = a;
    jc["b"] = std::vector<double>(comp.b.data(), comp.b.data() + comp.b.size());
    j["components"].push_back(std::move(jc));
  }
  return j;
}

GllimModel model_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != std::string("gllim-model"))
    throw std::runtime_error("not a gllim-model document");
  const int K = j.at("K").get<int>();
  const int L = j.at("L").get<int>();
  const int D = j.at("D").get<int>();

  GllimModel model;
  model.prior_mode = prior_mode_from_name(j.at("prior_mode").get<std::string>());
  const auto sig = j.at("sigma2").get<std::vector<double>>();
  if (static_cast<int>(sig.size()) != D) throw std::runtime_error("sigma2 length mismatch");
  model.sigma2 = Eigen::Map<const Vec>(sig.data(), D);

  const auto& jcomps = j.at("components");
  if (static_cast<int>(jcomps.size()) != K) throw std::runtime_error("component count mismatch");
  model.comps.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto& jc = jcomps[k];
    auto& comp = model.comps[k];
    comp.pi = jc.at("pi").get<double>();
    const auto c = jc.at("c").get<std::vector<double>>();
    const auto gamma = jc.at("Gamma").get<std::vector<double>>();
    const auto a = jc.at("A").get<std::vector<double>>();
    const auto b = jc.at("b").get<std::vector<double>>();
    if (static_cast<int>(c.size()) != L || static_cast<int>(gamma.size()) != L * L ||
        static_cast<int>(a.size()) != D * L || static_cast<int>(b.size()) != D)
      throw std::runtime_error("component dimension mismatch");
    comp.c = Eigen::Map<const Vec>(c.data(), L);
    comp.Gamma.resize(L, L);
    for (int r = 0; r < L; ++r)
      for (int cc = 0; cc < L; ++cc) comp.Gamma(r, cc) = gamma[r * L + cc];
    comp.A.resize(D, L);
    for (int r = 0; r < D; ++r)
      for (int cc = 0; cc < L; ++cc) comp.A(r, cc) = a[r * L + cc];
    comp.b = Eigen::Map<const Vec>(b.data(), D);
  }
  return model;
}

void save_model(const std::string& path, const GllimModel& model) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << model_to_json(model).dump(1) << "\n";
}

GllimModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return model_from_json(nlohmann::json::parse(f));
}

void write_training_set(const std::string& path, const TrainingSet& ts) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t version = 1;
  const std::uint32_t N = ts.N(), L = ts.L(), D = ts.D();
  const std::string meta = ts.metadata.dump();
  const std::uint64_t meta_len = meta.size();
  f.write("BTRS", 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&N), 4);
  f.write(reinterpret_cast<const char*>(&L), 4);
  f.write(reinterpret_cast<const char*>(&D), 4);
  f.write(reinterpret_cast<const char*>(&meta_len), 8);
  f.write(meta.data(), static_cast<std::streamsize>(meta_len));
  f.write(reinterpret_cast<const char*>(ts.X.data()),
          static_cast<std::streamsize>(sizeof(double) * N * L));
  f.write(reinterpret_cast<const char*>(ts.Y.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::uint64_t>(N) * D));
  if (!f) throw std::runtime_error("write failed: " + path);
}

TrainingSet read_training_set(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  std::uint32_t version = 0, N = 0, L = 0, D = 0;
  std::uint64_t meta_len = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&N), 4);
  f.read(reinterpret_cast<char*>(&L), 4);
  f.read(reinterpret_cast<char*>(&D), 4);
  f.read(reinterpret_cast<char*>(&meta_len), 8);
  if (!f || std::memcmp(magic, "BTRS", 4) != 0)
    throw std::runtime_error("not a training-set file: " + path);
  std::string meta(meta_len, '\0');
  f.read(meta.data(), static_cast<std::streamsize>(meta_len));

  TrainingSet ts;
  ts.metadata = meta.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta);
  ts.X.resize(N, L);
  ts.Y.resize(N, D);
  f.read(reinterpret_cast<char*>(ts.X.data()),
         static_cast<std::streamsize>(sizeof(double) * N * L));
  f.read(reinterpret_cast<char*>(ts.Y.data()),
         static_cast<std::streamsize>(sizeof(double) * static_cast<std::uint64_t>(N) * D));
  if (!f) throw std::runtime_error("truncated training-set file: " + path);
  return ts;
}

}  // namespace binloc::gllim
