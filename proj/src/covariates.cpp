#include "polyads/covariates.hpp"

namespace polyads {

void CovariateProvider::load(const EdgeIndex& e, double* out) const {
  if (!try_load(e, out))
    throw MissingCovariateError("covariates missing for edge " + e.str(), {e});
}

DenseArrayCovariates::DenseArrayCovariates(std::vector<int32_t> sizes,
                                           int width)
    : sizes_(std::move(sizes)), width_(width) {
  if (width_ < 0) throw InvalidParameterError("negative covariate width");
  strides_.resize(sizes_.size());
  int64_t stride = 1;
  for (size_t d = sizes_.size(); d-- > 0;) {
    strides_[d] = stride;
    stride *= sizes_[d];
  }
  if (width_ > 0 && stride > (int64_t{1} << 40) / width_)
    throw ResourceGuardError("dense covariate array too large");
  data_.assign(static_cast<size_t>(stride) * std::max(width_, 1), 0.0);
}

int64_t DenseArrayCovariates::offset(const EdgeIndex& e) const {
  if (e.dims() != static_cast<int>(sizes_.size()))
    throw DimensionMismatchError("index dimension mismatch: " + e.str());
  int64_t off = 0;
  for (size_t d = 0; d < sizes_.size(); ++d) {
    if (e[static_cast<int>(d)] < 1 || e[static_cast<int>(d)] > sizes_[d])
      throw InputError("index out of range: " + e.str());
    off += strides_[d] * (e[static_cast<int>(d)] - 1);
  }
  return off;
}

bool DenseArrayCovariates::try_load(const EdgeIndex& e, double* out) const {
  if (e.dims() != static_cast<int>(sizes_.size())) return false;
  for (size_t d = 0; d < sizes_.size(); ++d)
    if (e[static_cast<int>(d)] < 1 || e[static_cast<int>(d)] > sizes_[d])
      return false;
  const double* src = cell(e);
  for (int k = 0; k < width_; ++k) out[k] = src[k];
  return true;
}

void MapCovariates::put(const EdgeIndex& e, const std::vector<double>& values) {
  if (e.dims() != dims_)
    throw DimensionMismatchError("index dimension mismatch: " + e.str());
  if (static_cast<int>(values.size()) != width_)
    throw DimensionMismatchError("covariate width mismatch at " + e.str());
  values_[e] = values;
}

bool MapCovariates::try_load(const EdgeIndex& e, double* out) const {
  auto it = values_.find(e);
  if (it == values_.end()) return false;
  for (int k = 0; k < width_; ++k) out[k] = it->second[k];
  return true;
}

}  // namespace polyads
