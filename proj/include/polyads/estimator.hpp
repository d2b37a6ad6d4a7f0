#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "polyads/enumeration.hpp"

namespace polyads {

// The feature cross-product matrix has a null direction, so the loss is flat
// along it and no ridge was requested.
class CollinearFeaturesError : public InputError {
 public:
  CollinearFeaturesError(std::string what, Eigen::VectorXd null_direction)
      : InputError(std::move(what)),
        null_direction_(std::move(null_direction)) {}
  const Eigen::VectorXd& null_direction() const { return null_direction_; }

 private:
  Eigen::VectorXd null_direction_;
};

struct MomentPair {
  double mean;
  double variance;
};

struct FitConfig {
  int max_iterations = 50;
  double gradient_tolerance = 1e-8;  // sup norm
  int truncation_L = 100;            // longest evaluated orbit window
  double ridge_epsilon = 0.0;
  bool deterministic_reduction = true;
  // Halve the step until the loss decreases. Off: pure Newton steps.
  bool damped = false;
  // Count every polyad 2^D times, once per permutation. The minimizer does
  // not move when this is off; reported loss, gradient and hessian scale.
  bool scale_by_permutations = true;
  int workers = 1;
};

struct IterationRecord {
  Eigen::VectorXd beta;
  double loss;
  double grad_inf_norm;
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  double gradient_norm = 0.0;   // sup norm at beta_hat
  Eigen::MatrixXd hessian;      // at beta_hat, permutation-scaled
  uint64_t n_active = 0;        // polyads counted with permutations
  int iterations = 0;           // Newton steps taken
  bool converged = false;
  std::vector<IterationRecord> trace;
  std::vector<std::string> warnings;
};

// Conditional mean and variance of the orbit position given the orbit, with
// the evaluation window capped at truncation_L states around the observed
// position.
MomentPair evaluate_moments(const ActivePolyadRecord& rec,
                            const Eigen::VectorXd& beta, int truncation_L);

// Negative log conditional likelihood of the observed orbit position.
// Nonnegative; zero only when the window puts all mass on the observation.
double polyad_loss(const ActivePolyadRecord& rec, const Eigen::VectorXd& beta,
                   int truncation_L);

struct LossDerivatives {
  double loss;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

LossDerivatives loss_gradient_hessian(
    const std::vector<ActivePolyadRecord>& records,
    const Eigen::VectorXd& beta, const FitConfig& config);

// Newton with closed-form derivatives. Requires a strictly positive-definite
// feature cross-product unless ridge_epsilon > 0.
FitResult fit(const std::vector<ActivePolyadRecord>& records, int p,
              const FitConfig& config = {},
              const Eigen::VectorXd& beta0 = Eigen::VectorXd());

// Eigendecomposition solve of a symmetric system. Falls back to a
// pseudo-inverse and records a warning when the smallest eigenvalue drops
// below 1e-12 of the trace.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                          std::vector<std::string>* warnings);

Eigen::MatrixXd pseudo_inverse_spd(const Eigen::MatrixXd& H,
                                   std::vector<std::string>* warnings);

}  // namespace polyads
