#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "binloc/common.hpp"

namespace binloc::gllim {

// N pairs (x_n in R^L of direction angles, y_n in R^D of mean binaural
// features) plus generation provenance.
struct TrainingSet {
  RMat X;  // N x L
  RMat Y;  // N x D
  nlohmann::json metadata;

  int N() const { return static_cast<int>(X.rows()); }
  int L() const { return static_cast<int>(X.cols()); }
  int D() const { return static_cast<int>(Y.cols()); }
};

void write_training_set(const std::string& path, const TrainingSet& ts);
TrainingSet read_training_set(const std::string& path);

enum class PriorMode { free_weights, fixed };

std::string prior_mode_name(PriorMode m);
PriorMode prior_mode_from_name(const std::string& s);

// Locally-linear Gaussian inverse-regression model: K affine maps
// y = A_k x + b_k + e with Gaussian regions N(x; c_k, Gamma_k), prior pi_k,
// and shared diagonal observation covariance diag(sigma2).
struct GllimModel {
  struct Component {
    double pi = 0.0;
    Vec c;      // L
    Mat Gamma;  // L x L, symmetric positive-definite
    Mat A;      // D x L
    Vec b;      // D
  };

  std::vector<Component> comps;
  Vec sigma2;  // D
  PriorMode prior_mode = PriorMode::free_weights;

  int K() const { return static_cast<int>(comps.size()); }
  int L() const { return comps.empty() ? 0 : static_cast<int>(comps.front().c.size()); }
  int D() const { return static_cast<int>(sigma2.size()); }
};

// Number of free parameters in theta for dimensions (D, L, K).
long long count_parameters(long long D, long long L, long long K);

struct FitConfig {
  int max_iter = 200;
  double rel_tol = 1e-6;
  PriorMode prior_mode = PriorMode::free_weights;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct FitTrace {
  std::vector<double> log_likelihood;  // one entry per EM iteration, evaluated at entry
  int iterations = 0;
  int pruned = 0;
};

// k-means++ over X, per-cluster least squares for the affine maps, pooled
// residual variance. Deterministic in seed.
GllimModel init_params(const TrainingSet& train, int K, std::uint64_t seed,
                       PriorMode prior_mode = PriorMode::free_weights);

// Posterior responsibilities r_kn, N x K, log-domain normalized rows.
RMat e_step(const GllimModel& model, const TrainingSet& train);

// Weighted-least-squares updates. Components whose mass falls below L+1 are
// pruned from the returned model.
GllimModel m_step(const RMat& resp, const TrainingSet& train, PriorMode prior_mode);

GllimModel fit(const TrainingSet& train, int K, const FitConfig& config,
               FitTrace* trace = nullptr);

double log_likelihood(const GllimModel& model, const TrainingSet& train);

// Parameters of the inverse conditional density p(x | y):
//   c*_k = A_k c_k + b_k
//   Gamma*_k = Sigma + A_k Gamma_k A_k^T   (kept in factored form)
//   Sigma*_k = (Gamma_k^-1 + A_k^T Sigma^-1 A_k)^-1
//   A*_k = Sigma*_k A_k^T Sigma^-1
//   b*_k = Sigma*_k (Gamma_k^-1 c_k - A_k^T Sigma^-1 b_k)
struct InverseParams {
  struct Component {
    double log_pi = 0.0;
    Vec c_star;               // D
    Mat A_star;               // L x D
    Vec b_star;               // L
    Mat Sigma_star;           // L x L
    double logdet_gamma_star; // log|Sigma + A Gamma A^T| via the determinant lemma
  };
  std::vector<Component> comps;
  Vec inv_sigma2;  // D, shared

  int K() const { return static_cast<int>(comps.size()); }

  // log N(y; c*_k, Gamma*_k) without materializing the D x D covariance
  // (Woodbury on the diagonal-plus-low-rank structure).
  double log_density_y(int k, const Vec& y) const;

  // Dense D x D Gamma*_k; only sensible for small D (tests, diagnostics).
  Mat dense_gamma_star(const GllimModel& model, int k) const;
};

InverseParams inverse_density_params(const GllimModel& model);

// E[x | y]: mixture of affine predictions weighted by pi_k N(y; c*_k, Gamma*_k).
Vec inverse_predict(const GllimModel& model, const Vec& y);
Vec inverse_predict(const InverseParams& inv, const Vec& y);

// E[y | x]: mixture of forward affine predictions weighted by pi_k N(x; c_k, Gamma_k).
Vec forward_predict(const GllimModel& model, const Vec& x);

nlohmann::json model_to_json(const GllimModel& model);
GllimModel model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const GllimModel& model);
GllimModel load_model(const std::string& path);

}  // namespace binloc::gllim
