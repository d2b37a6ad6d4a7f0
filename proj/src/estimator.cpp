#include "polyads/estimator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <mutex>

#include "polyads/kernels.hpp"
#include "polyads/parallel.hpp"

namespace polyads {

namespace {

struct Window {
  int64_t lo;
  int64_t hi;
};

Window orbit_window(const ActivePolyadRecord& rec, int truncation_L) {
  if (truncation_L < 2)
    throw InvalidParameterError("truncation_L must be at least 2");
  int64_t half = truncation_L / 2;
  return {rec.m - std::min<int64_t>(half, rec.m),
          rec.M >= 0 ? rec.m + std::min<int64_t>(half, rec.M) : rec.m};
}

// Cumulative log weights over the window states, anchored at zero on the
// lowest state. The increment from state t-1 to t collects one log count
// ratio per edge; all arguments stay >= 1 inside the orbit.
void orbit_log_weights(const ActivePolyadRecord& rec, double beta_did,
                       const Window& w, std::vector<double>& v) {
  const uint32_t nsel = 1u << rec.dims();
  v.resize(static_cast<size_t>(w.hi - w.lo + 1));
  v[0] = 0.0;
  for (int64_t t = w.lo + 1; t <= w.hi; ++t) {
    double inc = beta_did;
    for (uint32_t sel = 0; sel < nsel; ++sel) {
      int64_t y = rec.edge_counts[sel];
      if (Polyad::selector_sign(sel) < 0)
        inc += std::log(static_cast<double>(y - (t - 1 - rec.m)));
      else
        inc -= std::log(static_cast<double>(y + (t - rec.m)));
    }
    v[static_cast<size_t>(t - w.lo)] = v[static_cast<size_t>(t - w.lo - 1)] + inc;
  }
}

void check_record(const ActivePolyadRecord& rec, const Eigen::VectorXd& beta) {
  if (rec.did.size() != beta.size())
    throw DimensionMismatchError("beta width does not match record features");
  if (!beta.allFinite())
    throw InvalidParameterError("beta must be finite");
  if (rec.m < 0 || rec.M < 0)
    throw InvalidParameterError("record orbit bounds must be nonnegative");
}

}  // namespace

MomentPair evaluate_moments(const ActivePolyadRecord& rec,
                            const Eigen::VectorXd& beta, int truncation_L) {
  check_record(rec, beta);
  Window w = orbit_window(rec, truncation_L);
  std::vector<double> v;
  orbit_log_weights(rec, beta.dot(rec.did), w, v);
  kernels::OrbitMoments om = kernels::index_moments(v.data(), v.size());
  return {static_cast<double>(w.lo) + om.mean, om.var};
}

double polyad_loss(const ActivePolyadRecord& rec, const Eigen::VectorXd& beta,
                   int truncation_L) {
  check_record(rec, beta);
  Window w = orbit_window(rec, truncation_L);
  std::vector<double> v;
  orbit_log_weights(rec, beta.dot(rec.did), w, v);
  kernels::OrbitMoments om = kernels::index_moments(v.data(), v.size());
  double loss = om.log_norm - v[static_cast<size_t>(rec.m - w.lo)];
  return loss < 0.0 ? 0.0 : loss;
}

LossDerivatives loss_gradient_hessian(
    const std::vector<ActivePolyadRecord>& records,
    const Eigen::VectorXd& beta, const FitConfig& config) {
  const int p = static_cast<int>(beta.size());
  struct Partial {
    double loss = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    bool used = false;
  };
  constexpr size_t kBlock = 4096;
  size_t nblocks = records.empty() ? 0 : (records.size() + kBlock - 1) / kBlock;

  LossDerivatives out{0.0, Eigen::VectorXd::Zero(p),
                      Eigen::MatrixXd::Zero(p, p)};
  std::vector<Partial> partials;
  std::mutex fold_mu;
  if (config.deterministic_reduction) partials.resize(nblocks);

  parallel_blocks(records.size(), kBlock, config.workers,
                  [&](size_t begin, size_t end, size_t block) {
                    Partial local;
                    local.grad = Eigen::VectorXd::Zero(p);
                    local.hess = Eigen::MatrixXd::Zero(p, p);
                    std::vector<double> v;
                    for (size_t r = begin; r < end; ++r) {
                      const ActivePolyadRecord& rec = records[r];
                      check_record(rec, beta);
                      Window w = orbit_window(rec, config.truncation_L);
                      orbit_log_weights(rec, beta.dot(rec.did), w, v);
                      kernels::OrbitMoments om =
                          kernels::index_moments(v.data(), v.size());
                      double mu = static_cast<double>(w.lo) + om.mean;
                      local.loss +=
                          om.log_norm - v[static_cast<size_t>(rec.m - w.lo)];
                      local.grad +=
                          (mu - static_cast<double>(rec.m)) * rec.did;
                      local.hess += om.var * rec.did * rec.did.transpose();
                    }
                    local.used = true;
                    if (config.deterministic_reduction) {
                      partials[block] = std::move(local);
                    } else {
                      std::lock_guard<std::mutex> lk(fold_mu);
                      out.loss += local.loss;
                      out.grad += local.grad;
                      out.hess += local.hess;
                    }
                  });

  if (config.deterministic_reduction)
    for (auto& part : partials)
      if (part.used) {
        out.loss += part.loss;
        out.grad += part.grad;
        out.hess += part.hess;
      }

  if (config.scale_by_permutations && !records.empty()) {
    double scale = static_cast<double>(uint64_t{1} << records.front().dims());
    out.loss *= scale;
    out.grad *= scale;
    out.hess *= scale;
  }
  return out;
}

Eigen::MatrixXd pseudo_inverse_spd(const Eigen::MatrixXd& H,
                                   std::vector<std::string>* warnings) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::VectorXd& ev = es.eigenvalues();
  double cutoff = 1e-12 * std::max(H.trace(), 0.0);
  if (cutoff <= 0.0) cutoff = 1e-300;
  Eigen::VectorXd inv = ev;
  bool truncated = false;
  for (int k = 0; k < inv.size(); ++k) {
    if (ev[k] > cutoff) {
      inv[k] = 1.0 / ev[k];
    } else {
      inv[k] = 0.0;
      truncated = true;
    }
  }
  if (truncated && warnings)
    warnings->push_back(
        "matrix nearly singular; truncated pseudo-inverse applied");
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                          std::vector<std::string>* warnings) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::VectorXd& ev = es.eigenvalues();
  double cutoff = 1e-12 * std::max(H.trace(), 0.0);
  if (ev.minCoeff() > cutoff && cutoff > 0.0) {
    Eigen::VectorXd proj = es.eigenvectors().transpose() * g;
    return es.eigenvectors() * (proj.array() / ev.array()).matrix();
  }
  return pseudo_inverse_spd(H, warnings) * g;
}

FitResult fit(const std::vector<ActivePolyadRecord>& records, int p,
              const FitConfig& config, const Eigen::VectorXd& beta0) {
  if (records.empty())
    throw InputError("no active polyads; nothing identifies beta");
  if (p < 1) throw InvalidParameterError("feature width must be positive");
  if (config.max_iterations < 1)
    throw InvalidParameterError("max_iterations must be at least 1");
  if (!(config.gradient_tolerance > 0.0))
    throw InvalidParameterError("gradient_tolerance must be positive");
  if (config.ridge_epsilon < 0.0)
    throw InvalidParameterError("ridge_epsilon must be nonnegative");
  for (const auto& rec : records)
    if (rec.did.size() != p)
      throw DimensionMismatchError("record feature width mismatch");

  FitResult result;
  result.n_active = static_cast<uint64_t>(records.size())
                    << records.front().dims();

  if (config.ridge_epsilon == 0.0) {
    // Strict convexity needs a full-rank feature cross-product.
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, p);
    for (const auto& rec : records)
      cross += rec.did * rec.did.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cross);
    double cutoff = 1e-12 * std::max(cross.trace(), 1e-30);
    if (es.eigenvalues().minCoeff() <= cutoff) {
      Eigen::VectorXd null_dir = es.eigenvectors().col(0);
      std::string dir = "[";
      for (int k = 0; k < p; ++k)
        dir += (k ? "," : "") + std::to_string(null_dir[k]);
      dir += "]";
      throw CollinearFeaturesError(
          "features are collinear across active polyads; loss is flat along " +
              dir + "; set ridge_epsilon > 0 to regularize",
          null_dir);
    }
  }

  Eigen::VectorXd beta =
      beta0.size() == 0 ? Eigen::VectorXd::Zero(p) : Eigen::VectorXd(beta0);
  if (beta.size() != p)
    throw DimensionMismatchError("beta0 width mismatch");

  LossDerivatives d;
  for (int it = 0;; ++it) {
    d = loss_gradient_hessian(records, beta, config);
    double ginf = d.grad.size() ? d.grad.cwiseAbs().maxCoeff() : 0.0;
    result.trace.push_back({beta, d.loss, ginf});
    if (ginf <= config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (it >= config.max_iterations) break;
    Eigen::MatrixXd H = d.hess;
    if (config.ridge_epsilon > 0.0)
      H.diagonal().array() += config.ridge_epsilon;
    Eigen::VectorXd step = solve_spd(H, d.grad, &result.warnings);
    if (config.damped &&
        d.grad.dot(step) > 1e-12 * (1.0 + std::abs(d.loss))) {
      // Below that threshold the predicted decrease sits under the loss
      // rounding noise, where a comparison-based search rejects real
      // progress; the raw Newton step is contractive there.
      // Reference and candidates must also share one code path: mixing the
      // aggregated loss with per-record sums leaves noise-level gaps.
      auto path_loss = [&](const Eigen::VectorXd& b) {
        double total = 0.0;
        for (const auto& rec : records)
          total += polyad_loss(rec, b, config.truncation_L);
        return total;
      };
      double ref = path_loss(beta);
      double scale = 1.0;
      Eigen::VectorXd candidate = beta - step;
      for (int h = 0; h < 40; ++h) {
        if (path_loss(candidate) <= ref) break;
        scale *= 0.5;
        candidate = beta - scale * step;
      }
      beta = candidate;
    } else {
      beta -= step;
    }
    result.iterations = it + 1;
  }
  result.beta_hat = beta;
  result.gradient_norm = result.trace.back().grad_inf_norm;
  result.hessian = d.hess;
  return result;
}

}  // namespace polyads
