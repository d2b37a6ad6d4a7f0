#include "polyads/variance.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <mutex>

#include "polyads/parallel.hpp"

namespace polyads {

namespace {

int hamming(const EdgeIndex& a, const EdgeIndex& b) {
  int d = 0;
  for (int k = 0; k < a.dims(); ++k) d += a[k] != b[k];
  return d;
}

}  // namespace

std::vector<Eigen::VectorXd> polyad_gradients(
    const std::vector<ActivePolyadRecord>& records, const Eigen::VectorXd& beta,
    int truncation_L, int workers) {
  std::vector<Eigen::VectorXd> grads(records.size());
  parallel_blocks(records.size(), 4096, workers,
                  [&](size_t begin, size_t end, size_t) {
                    for (size_t r = begin; r < end; ++r) {
                      MomentPair mom =
                          evaluate_moments(records[r], beta, truncation_L);
                      grads[r] = (mom.mean - static_cast<double>(records[r].m)) *
                                 records[r].did;
                    }
                  });
  return grads;
}

std::map<EdgeIndex, Eigen::VectorXd> edge_scores(
    const PolyadIncidence& incidence, const std::vector<Eigen::VectorXd>& grads,
    int dims) {
  const double scale = static_cast<double>(uint64_t{1} << dims);
  std::map<EdgeIndex, Eigen::VectorXd> scores;
  for (const EdgeIndex& key : incidence.sorted_keys) {
    const auto& partners = incidence.by_edge.at(key);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(grads.empty() ? 0 : grads[0].size());
    for (const auto& entry : partners) s += grads[entry.record];
    scores.emplace(key, scale * s);
  }
  return scores;
}

Eigen::MatrixXd omega_hat(const std::map<EdgeIndex, Eigen::VectorXd>& scores,
                          int p) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [key, s] : scores) omega += s * s.transpose();
  return omega;
}

Eigen::MatrixXd omega_prime_hat(const PolyadIncidence& incidence,
                                const std::vector<Eigen::VectorXd>& grads,
                                int dims, int p, uint64_t* pair_touches) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
  uint64_t touches = 0;
  for (const EdgeIndex& key : incidence.sorted_keys) {
    const auto& partners = incidence.by_edge.at(key);
    for (const auto& a : partners)
      for (const auto& b : partners) {
        ++touches;
        double w = static_cast<double>(
            uint64_t{1} << (dims + hamming(a.partner, b.partner)));
        omega.noalias() +=
            w * grads[a.record] * grads[b.record].transpose();
      }
  }
  if (pair_touches) *pair_touches = touches;
  return omega;
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& gamma_hat,
                         const Eigen::MatrixXd& omega) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma_hat);
  double cutoff = 1e-12 * std::max(gamma_hat.trace(), 1e-30);
  if (es.eigenvalues().minCoeff() <= cutoff)
    throw CollinearFeaturesError(
        "curvature matrix is singular; features are collinear",
        es.eigenvectors().col(0));
  Eigen::MatrixXd inv = es.eigenvectors() *
                        es.eigenvalues().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
  Eigen::MatrixXd s = inv * omega * inv;
  return 0.5 * (s + s.transpose());
}

std::vector<std::pair<double, double>> confidence_intervals(
    const Eigen::MatrixXd& sigma, const Eigen::VectorXd& beta_hat,
    double quantile) {
  std::vector<std::pair<double, double>> ci;
  ci.reserve(static_cast<size_t>(beta_hat.size()));
  for (int k = 0; k < beta_hat.size(); ++k) {
    double half = quantile * std::sqrt(std::max(sigma(k, k), 0.0));
    ci.emplace_back(beta_hat[k] - half, beta_hat[k] + half);
  }
  return ci;
}

CovarianceResult covariance(const std::vector<ActivePolyadRecord>& records,
                            const PolyadIncidence& incidence,
                            const Eigen::VectorXd& beta_hat,
                            const Eigen::MatrixXd& gamma_hat,
                            const VarianceConfig& config) {
  const int p = static_cast<int>(beta_hat.size());
  const int dims = records.empty() ? 1 : records.front().dims();
  const double scale = static_cast<double>(uint64_t{1} << dims);

  CovarianceResult out;
  out.gamma_hat = gamma_hat;

  std::vector<Eigen::VectorXd> grads =
      polyad_gradients(records, beta_hat, config.truncation_L, config.workers);

  uint64_t planned_pairs = 0;
  for (const EdgeIndex& key : incidence.sorted_keys) {
    uint64_t n = incidence.by_edge.at(key).size();
    out.score_touches += n;
    planned_pairs += n * n;
  }

  // Per-key accumulation, keys split into fixed blocks.
  const size_t nkeys = incidence.sorted_keys.size();
  constexpr size_t kBlock = 1024;
  size_t nblocks = nkeys == 0 ? 0 : (nkeys + kBlock - 1) / kBlock;
  bool want_prime = planned_pairs <= config.max_pair_touches;

  struct Partial {
    Eigen::MatrixXd omega;
    Eigen::MatrixXd prime;
    uint64_t touches = 0;
    bool used = false;
  };
  std::vector<Partial> partials;
  std::mutex fold_mu;
  out.omega_hat = Eigen::MatrixXd::Zero(p, p);
  out.omega_prime_hat = Eigen::MatrixXd::Zero(p, p);
  if (config.deterministic_reduction) partials.resize(nblocks);

  parallel_blocks(
      nkeys, kBlock, config.workers, [&](size_t begin, size_t end, size_t block) {
        Partial local;
        local.omega = Eigen::MatrixXd::Zero(p, p);
        local.prime = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd s(p);
        for (size_t k = begin; k < end; ++k) {
          const auto& partners =
              incidence.by_edge.at(incidence.sorted_keys[k]);
          s.setZero();
          for (const auto& entry : partners) s += grads[entry.record];
          local.omega.noalias() += (scale * scale) * s * s.transpose();
          if (!want_prime) continue;
          for (const auto& a : partners)
            for (const auto& b : partners) {
              ++local.touches;
              double w = static_cast<double>(
                  uint64_t{1} << (dims + hamming(a.partner, b.partner)));
              local.prime.noalias() +=
                  w * grads[a.record] * grads[b.record].transpose();
            }
        }
        local.used = true;
        if (config.deterministic_reduction) {
          partials[block] = std::move(local);
        } else {
          std::lock_guard<std::mutex> lk(fold_mu);
          out.omega_hat += local.omega;
          out.omega_prime_hat += local.prime;
          out.pair_touches += local.touches;
        }
      });

  if (config.deterministic_reduction)
    for (auto& part : partials)
      if (part.used) {
        out.omega_hat += part.omega;
        out.omega_prime_hat += part.prime;
        out.pair_touches += part.touches;
      }

  out.omega_hat = 0.5 * (out.omega_hat + out.omega_hat.transpose()).eval();
  out.sigma_hat = sandwich(gamma_hat, out.omega_hat);
  if (want_prime) {
    out.omega_prime_hat =
        0.5 * (out.omega_prime_hat + out.omega_prime_hat.transpose()).eval();
    out.sigma_prime_hat = sandwich(gamma_hat, out.omega_prime_hat);
    out.ci_95 = confidence_intervals(out.sigma_prime_hat, beta_hat,
                                     config.ci_quantile);
  } else {
    out.prime_skipped = true;
    out.warnings.push_back(
        "pairwise covariance pass skipped: " + std::to_string(planned_pairs) +
        " pair touches exceed cap " + std::to_string(config.max_pair_touches) +
        "; intervals use the score-sum covariance");
    out.sigma_prime_hat = Eigen::MatrixXd::Zero(p, p);
    out.ci_95 =
        confidence_intervals(out.sigma_hat, beta_hat, config.ci_quantile);
  }
  return out;
}

}  // namespace polyads
