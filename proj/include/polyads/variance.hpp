#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "polyads/enumeration.hpp"
#include "polyads/estimator.hpp"

namespace polyads {

struct VarianceConfig {
  double ci_quantile = 1.96;
  int truncation_L = 100;
  // Cap on the pairwise pass workload, sum over keys of |partners|^2.
  uint64_t max_pair_touches = 1'000'000'000ull;
  bool deterministic_reduction = true;
  int workers = 1;
};

struct CovarianceResult {
  Eigen::MatrixXd gamma_hat;
  Eigen::MatrixXd omega_hat;
  Eigen::MatrixXd omega_prime_hat;
  Eigen::MatrixXd sigma_hat;
  Eigen::MatrixXd sigma_prime_hat;
  // One (lower, upper) interval per coefficient; built from the pairwise
  // covariance when available, the score-sum covariance otherwise.
  std::vector<std::pair<double, double>> ci_95;
  uint64_t score_touches = 0;
  uint64_t pair_touches = 0;
  bool prime_skipped = false;
  std::vector<std::string> warnings;
};

// Unnormalized per-record gradient (mu - m) * x at beta; no 2^D factor.
std::vector<Eigen::VectorXd> polyad_gradients(
    const std::vector<ActivePolyadRecord>& records, const Eigen::VectorXd& beta,
    int truncation_L = 100, int workers = 1);

// S_i = 2^D * sum of gradients of the active polyads containing edge i.
std::map<EdgeIndex, Eigen::VectorXd> edge_scores(
    const PolyadIncidence& incidence, const std::vector<Eigen::VectorXd>& grads,
    int dims);

Eigen::MatrixXd omega_hat(const std::map<EdgeIndex, Eigen::VectorXd>& scores,
                          int p);

// Pairwise form: per key i, sum over ordered partner pairs (i', i'') of
// grad' grad''^T * 2^(D + #coords where i' and i'' differ).
Eigen::MatrixXd omega_prime_hat(const PolyadIncidence& incidence,
                                const std::vector<Eigen::VectorXd>& grads,
                                int dims, int p,
                                uint64_t* pair_touches = nullptr);

// gamma^{-1} * omega * gamma^{-1}, symmetrized. Throws on singular gamma.
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& gamma_hat,
                         const Eigen::MatrixXd& omega);

std::vector<std::pair<double, double>> confidence_intervals(
    const Eigen::MatrixXd& sigma, const Eigen::VectorXd& beta_hat,
    double quantile = 1.96);

CovarianceResult covariance(const std::vector<ActivePolyadRecord>& records,
                            const PolyadIncidence& incidence,
                            const Eigen::VectorXd& beta_hat,
                            const Eigen::MatrixXd& gamma_hat,
                            const VarianceConfig& config = VarianceConfig{});

}  // namespace polyads
