#include "polyads/baseline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "polyads/estimator.hpp"
#include "polyads/kernels.hpp"

namespace polyads {

namespace {

struct GroupPlan {
  std::vector<int> dims0;       // 0-based dims in the group
  std::vector<int64_t> stride;  // mixed-radix strides over the group dims
  int64_t nlevels = 1;
};

GroupPlan plan_group(const std::vector<int>& group,
                     const std::vector<int32_t>& sizes) {
  GroupPlan plan;
  for (int d : group) plan.dims0.push_back(d - 1);
  plan.stride.assign(plan.dims0.size(), 1);
  for (size_t k = plan.dims0.size(); k-- > 0;) {
    plan.stride[k] = plan.nlevels;
    plan.nlevels *= sizes[static_cast<size_t>(plan.dims0[k])];
  }
  return plan;
}

int64_t level_of(const GroupPlan& plan, const std::vector<int32_t>& coords) {
  int64_t ord = 0;
  for (size_t k = 0; k < plan.dims0.size(); ++k)
    ord += (coords[static_cast<size_t>(plan.dims0[k])] - 1) * plan.stride[k];
  return ord;
}

EdgeIndex key_of(const GroupPlan& plan, const std::vector<int32_t>& sizes,
                 int64_t ord) {
  EdgeIndex key = EdgeIndex::zeros(static_cast<int>(plan.dims0.size()));
  for (size_t k = 0; k < plan.dims0.size(); ++k) {
    int64_t size_k = sizes[static_cast<size_t>(plan.dims0[k])];
    int64_t rest = ord / plan.stride[k];
    key.set(static_cast<int>(k), static_cast<int32_t>(rest % size_k + 1));
  }
  return key;
}

bool advance(std::vector<int32_t>& coords, const std::vector<int32_t>& sizes) {
  for (size_t d = coords.size(); d-- > 0;) {
    if (coords[d] < sizes[d]) {
      ++coords[d];
      return true;
    }
    coords[d] = 1;
  }
  return false;
}

}  // namespace

PpmlResult ppml_fit(const SparseCountGraph& graph, const CovariateProvider& cov,
                    const FixedEffectStructure& structure,
                    const PpmlConfig& config) {
  const int D = graph.dims();
  const std::vector<int32_t>& sizes = graph.sizes();
  if (!structure.empty() && structure.dims() != D)
    throw DimensionMismatchError("fixed-effect structure dimension mismatch");
  const int64_t ncells = graph.num_cells();
  if (ncells > config.max_cells)
    throw ResourceGuardError("dense scan over " + std::to_string(ncells) +
                             " cells exceeds cap " +
                             std::to_string(config.max_cells));
  const int p = cov.width();
  const size_t n = static_cast<size_t>(ncells);

  std::vector<double> y(n);
  std::vector<double> X(n * static_cast<size_t>(p));
  {
    std::vector<EdgeIndex> missing;
    std::vector<int32_t> coords(static_cast<size_t>(D), 1);
    size_t idx = 0;
    do {
      EdgeIndex e = EdgeIndex::of(coords);
      y[idx] = static_cast<double>(graph.count(e));
      if (p > 0 && !cov.try_load(e, X.data() + idx * p))
        if (missing.size() < 101) missing.push_back(e);
      ++idx;
    } while (advance(coords, sizes));
    if (!missing.empty()) {
      std::string what =
          "covariates missing for " +
          (missing.size() > 100 ? std::string("more than 100 cells:")
                                : std::to_string(missing.size()) + " cell(s):");
      size_t shown = std::min<size_t>(missing.size(), 100);
      for (size_t k = 0; k < shown; ++k) what += " " + missing[k].str();
      throw MissingCovariateError(std::move(what), std::move(missing));
    }
  }

  const auto& groups = structure.groups();
  const size_t G = groups.size();
  std::vector<GroupPlan> plans;
  for (const auto& g : groups) plans.push_back(plan_group(g, sizes));

  std::vector<std::vector<double>> theta(G);
  std::vector<std::vector<double>> sum_y(G);
  std::vector<std::vector<char>> separated(G);
  PpmlResult result;
  for (size_t g = 0; g < G; ++g) {
    theta[g].assign(static_cast<size_t>(plans[g].nlevels), 0.0);
    sum_y[g].assign(static_cast<size_t>(plans[g].nlevels), 0.0);
    separated[g].assign(static_cast<size_t>(plans[g].nlevels), 0);
  }
  {
    std::vector<int32_t> coords(static_cast<size_t>(D), 1);
    size_t idx = 0;
    do {
      for (size_t g = 0; g < G; ++g)
        sum_y[g][static_cast<size_t>(level_of(plans[g], coords))] += y[idx];
      ++idx;
    } while (advance(coords, sizes));
  }
  for (size_t g = 0; g < G; ++g) {
    int64_t pinned = 0;
    for (size_t l = 0; l < sum_y[g].size(); ++l)
      if (sum_y[g][l] <= 0.0) {
        separated[g][l] = 1;
        theta[g][l] = config.separation_log;
        ++pinned;
      }
    if (pinned > 0) {
      result.separated_levels += static_cast<int>(pinned);
      result.warnings.push_back(
          "group " + std::to_string(g + 1) + ": " + std::to_string(pinned) +
          " all-zero level(s) pinned to " +
          std::to_string(config.separation_log));
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double c = 0.0;

  // Cell -> level index per group, fixed for the whole fit.
  std::vector<std::vector<int32_t>> levels(G);
  {
    for (size_t g = 0; g < G; ++g) levels[g].resize(n);
    std::vector<int32_t> coords(static_cast<size_t>(D), 1);
    size_t idx = 0;
    do {
      for (size_t g = 0; g < G; ++g)
        levels[g][idx] = static_cast<int32_t>(level_of(plans[g], coords));
      ++idx;
    } while (advance(coords, sizes));
  }

  // One pass over all cells: per-cell log lambda -> exp in blocks.
  constexpr size_t kBlock = 4096;
  std::vector<double> buf(kBlock);
  auto sweep = [&](auto&& consume) {
    size_t idx = 0;
    while (idx < n) {
      size_t len = std::min(kBlock, n - idx);
      for (size_t k = 0; k < len; ++k) {
        double lp = c;
        for (int j = 0; j < p; ++j)
          lp += beta[j] * X[(idx + k) * p + static_cast<size_t>(j)];
        for (size_t g = 0; g < G; ++g)
          lp += theta[g][static_cast<size_t>(levels[g][idx + k])];
        buf[k] = lp;
      }
      kernels::exp_inplace(buf.data(), len);
      consume(idx, len, buf.data());
      idx += len;
    }
  };

  auto deviance = [&]() {
    double dev = 0.0;
    sweep([&](size_t idx, size_t len, const double* lam) {
      for (size_t k = 0; k < len; ++k) {
        double yy = y[idx + k];
        dev += yy > 0.0 ? yy * std::log(yy / lam[k]) - yy + lam[k] : lam[k];
      }
    });
    return 2.0 * dev;
  };

  auto fe_sweep = [&]() {
    double max_change = 0.0;
    for (size_t g = 0; g < G; ++g) {
      std::vector<double> sum_lam(theta[g].size(), 0.0);
      sweep([&](size_t idx, size_t len, const double* lam) {
        for (size_t k = 0; k < len; ++k)
          sum_lam[static_cast<size_t>(levels[g][idx + k])] += lam[k];
      });
      double mean = 0.0;
      int64_t live = 0;
      for (size_t l = 0; l < theta[g].size(); ++l) {
        if (separated[g][l]) continue;
        double delta = std::log(sum_y[g][l] / sum_lam[l]);
        theta[g][l] += delta;
        max_change = std::max(max_change, std::abs(delta));
        mean += theta[g][l];
        ++live;
      }
      // Likelihood-invariant shift; keeps levels centered while the
      // intercept absorbs the drift.
      if (live > 0) {
        mean /= static_cast<double>(live);
        for (size_t l = 0; l < theta[g].size(); ++l)
          if (!separated[g][l]) theta[g][l] -= mean;
        c += mean;
      }
    }

    if (G > 0) {
      double tot_y = 0.0, tot_lam = 0.0;
      sweep([&](size_t idx, size_t len, const double* lam) {
        for (size_t k = 0; k < len; ++k) {
          tot_y += y[idx + k];
          tot_lam += lam[k];
        }
      });
      if (tot_y > 0.0) {
        double delta = std::log(tot_y / tot_lam);
        c += delta;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    return max_change;
  };

  // Closed-form updates cycled until the FE block is self-consistent at the
  // current beta; a single sweep per beta step zig-zags when the covariates
  // overlap the FE span.
  auto fe_converge = [&]() {
    double total = 0.0;
    for (int s = 0; s < config.max_fe_sweeps; ++s) {
      double ch = fe_sweep();
      total = std::max(total, ch);
      if (ch < config.tolerance) break;
    }
    return total;
  };

  // Projection coefficients per covariate per group level, kept across outer
  // iterations as warm starts.
  std::vector<std::vector<std::vector<double>>> proj(static_cast<size_t>(p));
  for (auto& pk : proj) {
    pk.resize(G);
    for (size_t g = 0; g < G; ++g) pk[g].assign(theta[g].size(), 0.0);
  }

  bool converged = false;
  int it = 0;
  for (it = 1; it <= config.max_outer; ++it) {
    double max_change = fe_converge();

    if (p > 0) {
      std::vector<double> lam(n);
      sweep([&](size_t idx, size_t len, const double* l) {
        std::copy(l, l + len, lam.begin() + idx);
      });
      std::vector<std::vector<double>> sumw(G);
      for (size_t g = 0; g < G; ++g) {
        sumw[g].assign(theta[g].size(), 0.0);
        for (size_t i = 0; i < n; ++i)
          sumw[g][static_cast<size_t>(levels[g][i])] += lam[i];
      }

      // Weighted projection of each covariate onto the FE span, cycling the
      // same closed-form per-level updates; residual columns carry the
      // profile curvature, so the beta step does not fight the FE block.
      std::vector<double> Xt(n * static_cast<size_t>(p));
      std::vector<double> acc;
      for (int k = 0; k < p; ++k) {
        auto& a = proj[static_cast<size_t>(k)];
        for (size_t i = 0; i < n; ++i) {
          double r = X[i * p + static_cast<size_t>(k)];
          for (size_t g = 0; g < G; ++g)
            r -= a[g][static_cast<size_t>(levels[g][i])];
          Xt[i * p + static_cast<size_t>(k)] = r;
        }
        for (int s = 0; s < config.max_fe_sweeps; ++s) {
          double ch = 0.0;
          for (size_t g = 0; g < G; ++g) {
            acc.assign(theta[g].size(), 0.0);
            for (size_t i = 0; i < n; ++i)
              acc[static_cast<size_t>(levels[g][i])] +=
                  lam[i] * Xt[i * p + static_cast<size_t>(k)];
            for (size_t l = 0; l < acc.size(); ++l) {
              acc[l] = sumw[g][l] > 0.0 ? acc[l] / sumw[g][l] : 0.0;
              a[g][l] += acc[l];
              ch = std::max(ch, std::abs(acc[l]));
            }
            for (size_t i = 0; i < n; ++i)
              Xt[i * p + static_cast<size_t>(k)] -=
                  acc[static_cast<size_t>(levels[g][i])];
          }
          if (ch < config.tolerance) break;
        }
      }

      Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
      for (size_t i = 0; i < n; ++i) {
        Eigen::Map<const Eigen::VectorXd> x(X.data() + i * p, p);
        Eigen::Map<const Eigen::VectorXd> xt(Xt.data() + i * p, p);
        score += (y[i] - lam[i]) * x;
        H.selfadjointView<Eigen::Lower>().rankUpdate(xt, lam[i]);
      }
      Eigen::MatrixXd Hfull = H.selfadjointView<Eigen::Lower>();
      Eigen::VectorXd step = solve_spd(Hfull, score, &result.warnings);
      double dev0 = deviance();
      Eigen::VectorXd beta0 = beta;
      beta += step;
      for (int h = 0; h < config.max_halvings; ++h) {
        fe_converge();
        if (deviance() <= dev0 * (1.0 + 1e-12) + 1e-12) break;
        step *= 0.5;
        beta = beta0 + step;
      }
      max_change = std::max(max_change, step.cwiseAbs().maxCoeff());
    }

    if (max_change < config.tolerance) {
      converged = true;
      break;
    }
  }

  result.iterations = std::min(it, config.max_outer);
  result.converged = converged;
  result.deviance = deviance();
  result.beta_hat = beta;

  // Reporting normalization: first live level of each group becomes the
  // reference; separated levels stay at the surrogate.
  for (size_t g = 0; g < G; ++g) {
    double ref = 0.0;
    for (size_t l = 0; l < theta[g].size(); ++l)
      if (!separated[g][l]) {
        ref = theta[g][l];
        break;
      }
    for (size_t l = 0; l < theta[g].size(); ++l)
      if (!separated[g][l]) theta[g][l] -= ref;
    c += ref;
  }
  result.intercept = G > 0 ? c : 0.0;
  result.fe_values.resize(G);
  for (size_t g = 0; g < G; ++g)
    for (size_t l = 0; l < theta[g].size(); ++l)
      result.fe_values[g].emplace(
          key_of(plans[g], sizes, static_cast<int64_t>(l)), theta[g][l]);
  return result;
}

}  // namespace polyads
