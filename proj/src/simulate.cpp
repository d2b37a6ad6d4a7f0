#include "polyads/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace polyads {

namespace {

// RNG stream components packed into the second counter word.
enum Stream : uint64_t {
  kStreamU = 1,
  kStreamW = 2,
  kStreamV = 3,
  kStreamXNoise = 4,
  kStreamCount = 5,
  kStreamCalibration = 6,
  kStreamSubsample = 7,
};

void check_design(const ThreeWayDesign& d) {
  if (d.n1 < 2 || d.n2 < 2 || d.n3 < 2)
    throw InvalidParameterError("all three dimensions need at least 2 nodes");
  if (!(d.fe_std > 0.0))
    throw InvalidParameterError("fe_std must be positive");
  if (d.noise_scale < 0.0)
    throw InvalidParameterError("noise_scale must be nonnegative");
  if (d.noise == NoiseKind::negbin && !(d.negbin_rate > 0.0))
    throw InvalidParameterError("negbin rate must be positive");
}

struct Fields {
  std::vector<double> u;  // (i, j)
  std::vector<double> w;  // (i, t)
  std::vector<double> v;  // (j, t)
  std::vector<double> x;  // (i, j, t), cell order of the dense provider
};

Fields draw_fields(const ThreeWayDesign& d, PhiloxRng& ru, PhiloxRng& rw,
                   PhiloxRng& rv, PhiloxRng& re) {
  const size_t n1 = d.n1, n2 = d.n2, n3 = d.n3;
  Fields f;
  f.u.resize(n1 * n2);
  f.w.resize(n1 * n3);
  f.v.resize(n2 * n3);
  f.x.resize(n1 * n2 * n3);
  for (auto& z : f.u) z = d.fe_std * ru.normal();
  for (auto& z : f.w) z = d.fe_std * rw.normal();
  for (auto& z : f.v) z = d.fe_std * rv.normal();
  for (size_t i = 0; i < n1; ++i)
    for (size_t j = 0; j < n2; ++j)
      for (size_t t = 0; t < n3; ++t) {
        double val = f.w[i * n3 + t] + f.v[j * n3 + t] +
                     d.noise_scale * re.normal();
        if (t > 0) val += d.ar_coef * f.x[(i * n2 + j) * n3 + t - 1];
        f.x[(i * n2 + j) * n3 + t] = val;
      }
  return f;
}

}  // namespace

int64_t negbin_draw(double lambda, double rate, PhiloxRng& rng) {
  if (!(lambda > 0.0))
    throw InvalidParameterError("negbin_draw needs lambda > 0");
  if (!(rate > 0.0)) throw InvalidParameterError("negbin_draw needs rate > 0");
  double g = rng.gamma(rate, rate);
  return rng.poisson(lambda * g);
}

SimulatedDataset generate_three_way(const ThreeWayDesign& d,
                                    uint64_t replication) {
  check_design(d);
  const size_t n1 = d.n1, n2 = d.n2, n3 = d.n3;

  PhiloxRng ru(d.seed, kStreamU, replication, 0);
  PhiloxRng rw(d.seed, kStreamW, replication, 0);
  PhiloxRng rv(d.seed, kStreamV, replication, 0);
  PhiloxRng re(d.seed, kStreamXNoise, replication, 0);
  PhiloxRng rc(d.seed, kStreamCount, replication, 0);

  Fields f = draw_fields(d, ru, rw, rv, re);

  std::vector<int32_t> sizes{d.n1, d.n2, d.n3};
  auto cov = std::make_shared<DenseArrayCovariates>(sizes, 1);
  cov->data() = f.x;

  std::vector<std::pair<EdgeIndex, int64_t>> entries;
  for (size_t i = 0; i < n1; ++i)
    for (size_t j = 0; j < n2; ++j)
      for (size_t t = 0; t < n3; ++t) {
        size_t idx = (i * n2 + j) * n3 + t;
        double lambda = std::exp(d.intercept_c + d.beta_star * f.x[idx] +
                                 f.u[i * n2 + j] + f.w[i * n3 + t] +
                                 f.v[j * n3 + t]);
        int64_t y = 0;
        if (lambda > 0.0)
          y = d.noise == NoiseKind::poisson
                  ? rc.poisson(lambda)
                  : negbin_draw(lambda, d.negbin_rate, rc);
        if (y > 0)
          entries.emplace_back(
              EdgeIndex{static_cast<int32_t>(i + 1),
                        static_cast<int32_t>(j + 1),
                        static_cast<int32_t>(t + 1)},
              y);
      }

  SimulatedDataset out{SparseCountGraph(sizes, entries), std::move(cov),
                       Eigen::VectorXd::Constant(1, d.beta_star), 0.0};
  out.realized_density = static_cast<double>(out.graph.num_edges()) /
                         static_cast<double>(n1 * n2 * n3);
  return out;
}

double calibrate_intercept(const ThreeWayDesign& d, double target_density,
                           int mc_draws) {
  check_design(d);
  if (!(target_density > 0.0 && target_density < 1.0))
    throw InvalidParameterError("target density must lie in (0, 1)");
  if (mc_draws < 1) throw InvalidParameterError("mc_draws must be positive");

  const int64_t ncells =
      int64_t{d.n1} * int64_t{d.n2} * int64_t{d.n3};
  if (static_cast<int64_t>(mc_draws) * ncells > (int64_t{1} << 31))
    throw ResourceGuardError("calibration table too large");

  // Intensity per cell with c = 0, held across bisection steps.
  std::vector<float> base(static_cast<size_t>(mc_draws) *
                          static_cast<size_t>(ncells));
  for (int draw = 0; draw < mc_draws; ++draw) {
    PhiloxRng ru(d.seed, kStreamCalibration, draw, 1);
    PhiloxRng rw(d.seed, kStreamCalibration, draw, 2);
    PhiloxRng rv(d.seed, kStreamCalibration, draw, 3);
    PhiloxRng re(d.seed, kStreamCalibration, draw, 4);
    Fields f = draw_fields(d, ru, rw, rv, re);
    const size_t n1 = d.n1, n2 = d.n2, n3 = d.n3;
    float* slab = base.data() + static_cast<size_t>(draw) * ncells;
    for (size_t i = 0; i < n1; ++i)
      for (size_t j = 0; j < n2; ++j)
        for (size_t t = 0; t < n3; ++t) {
          size_t idx = (i * n2 + j) * n3 + t;
          slab[idx] = static_cast<float>(
              std::exp(d.beta_star * f.x[idx] + f.u[i * n2 + j] +
                       f.w[i * n3 + t] + f.v[j * n3 + t]));
        }
  }

  auto density = [&](double c) {
    double ec = std::exp(c);
    double acc = 0.0;
    if (d.noise == NoiseKind::poisson) {
      for (float b : base) acc += -std::expm1(-ec * static_cast<double>(b));
    } else {
      for (float b : base)
        acc += 1.0 - std::pow(d.negbin_rate /
                                  (d.negbin_rate + ec * static_cast<double>(b)),
                              d.negbin_rate);
    }
    return acc / static_cast<double>(base.size());
  };

  const double rel_tol = 0.05;
  double lo = -30.0, hi = 30.0;
  double dlo = density(lo), dhi = density(hi);
  if (std::abs(dlo - target_density) <= rel_tol * target_density) return lo;
  if (std::abs(dhi - target_density) <= rel_tol * target_density) return hi;
  if (dlo > target_density || dhi < target_density)
    throw InputError("target density unreachable for intercept in [-30, 30]");

  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double dm = density(mid);
    if (std::abs(dm - target_density) <= rel_tol * target_density) return mid;
    (dm < target_density ? lo : hi) = mid;
  }
  throw InputError("intercept calibration did not reach tolerance");
}

SubsampleResult subsample_nodes(const SparseCountGraph& graph,
                                const CovariateProvider& cov,
                                const std::vector<double>& proportion_by_dim,
                                uint64_t seed, uint64_t replication) {
  const int dims = graph.dims();
  if (static_cast<int>(proportion_by_dim.size()) != dims)
    throw DimensionMismatchError("one sampling proportion per dimension");
  for (double p : proportion_by_dim)
    if (!(p > 0.0 && p <= 1.0))
      throw InvalidParameterError("proportions must lie in (0, 1]");

  std::vector<std::vector<int32_t>> kept_by_dim(dims);
  // relabel[d][orig - 1] = new id, 0 when dropped
  std::vector<std::vector<int32_t>> relabel(dims);
  std::vector<int32_t> new_sizes(dims);
  for (int dd = 0; dd < dims; ++dd) {
    int32_t n = graph.size(dd);
    std::vector<int32_t>& kept = kept_by_dim[dd];
    if (proportion_by_dim[dd] == 1.0) {
      kept.resize(n);
      for (int32_t k = 0; k < n; ++k) kept[k] = k + 1;
    } else {
      auto k = static_cast<int64_t>(
          std::llround(proportion_by_dim[dd] * static_cast<double>(n)));
      if (k < 2)
        throw InputError("subsample leaves fewer than 2 nodes in dimension " +
                         std::to_string(dd + 1));
      std::vector<int32_t> ids(n);
      for (int32_t q = 0; q < n; ++q) ids[q] = q + 1;
      PhiloxRng rng(seed, kStreamSubsample, replication,
                    static_cast<uint64_t>(dd + 1));
      for (int64_t t = 0; t < k; ++t) {
        uint64_t pick = t + rng.next_u64() % static_cast<uint64_t>(n - t);
        std::swap(ids[t], ids[pick]);
      }
      kept.assign(ids.begin(), ids.begin() + k);
      std::sort(kept.begin(), kept.end());
    }
    relabel[dd].assign(n, 0);
    for (size_t pos = 0; pos < kept.size(); ++pos)
      relabel[dd][kept[pos] - 1] = static_cast<int32_t>(pos + 1);
    new_sizes[dd] = static_cast<int32_t>(kept.size());
  }

  std::vector<std::pair<EdgeIndex, int64_t>> entries;
  for (const auto& [e, c] : graph.entries()) {
    EdgeIndex relabeled = EdgeIndex::zeros(dims);
    bool inside = true;
    for (int dd = 0; dd < dims && inside; ++dd) {
      int32_t nid = relabel[dd][e[dd] - 1];
      if (nid == 0)
        inside = false;
      else
        relabeled.set(dd, nid);
    }
    if (inside) entries.emplace_back(relabeled, c);
  }

  auto view = std::make_shared<CallbackCovariates>(
      cov.width(),
      [kept_by_dim, &cov, dims](const EdgeIndex& e, double* dst) {
        EdgeIndex orig = EdgeIndex::zeros(dims);
        for (int dd = 0; dd < dims; ++dd) {
          int32_t c = e[dd];
          if (c < 1 || c > static_cast<int32_t>(kept_by_dim[dd].size()))
            return false;
          orig.set(dd, kept_by_dim[dd][c - 1]);
        }
        return cov.try_load(orig, dst);
      });
  return {SparseCountGraph(new_sizes, entries), std::move(kept_by_dim),
          std::move(view)};
}

MetaResult meta_analysis(
    const std::vector<std::pair<double, double>>& estimates) {
  const size_t K = estimates.size();
  if (K < 2) throw InvalidParameterError("meta-analysis needs >= 2 studies");
  for (const auto& [b, v] : estimates)
    if (!(v > 0.0))
      throw InvalidParameterError("study variances must be positive");

  auto pooled_at = [&](double tau2, double* sum_w_out) {
    double sw = 0.0, swb = 0.0;
    for (const auto& [b, v] : estimates) {
      double w = 1.0 / (v + tau2);
      sw += w;
      swb += w * b;
    }
    if (sum_w_out) *sum_w_out = sw;
    return swb / sw;
  };

  MetaResult out;
  double tau2 = 0.0;
  bool converged = false;
  for (int it = 1; it <= 100; ++it) {
    out.iterations = it;
    double sw = 0.0;
    double m = pooled_at(tau2, &sw);
    double q = 0.0, denom = 0.0;
    for (const auto& [b, v] : estimates) {
      double w = 1.0 / (v + tau2);
      q += w * (b - m) * (b - m);
      denom += w * w * (b - m) * (b - m);
    }
    double f = q - static_cast<double>(K - 1);
    if (std::abs(f) <= 1e-10 || (tau2 == 0.0 && f <= 0.0)) {
      converged = true;
      break;
    }
    if (denom <= 0.0) break;
    tau2 = std::max(0.0, tau2 + f / denom);
  }

  if (!converged) {
    // DerSimonian-Laird moment estimate.
    double sw = 0.0, sw2 = 0.0;
    double m = pooled_at(0.0, &sw);
    double q = 0.0;
    for (const auto& [b, v] : estimates) {
      double w = 1.0 / v;
      q += w * (b - m) * (b - m);
      sw2 += w * w;
    }
    double denom = sw - sw2 / sw;
    tau2 = denom > 0.0
               ? std::max(0.0, (q - static_cast<double>(K - 1)) / denom)
               : 0.0;
    out.used_fallback = true;
  }

  double sw = 0.0;
  out.pooled = pooled_at(tau2, &sw);
  out.tau2 = tau2;
  double half = 1.96 / std::sqrt(sw);
  out.ci_lo = out.pooled - half;
  out.ci_hi = out.pooled + half;
  return out;
}

}  // namespace polyads
