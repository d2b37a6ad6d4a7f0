#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "polyads/types.hpp"

namespace polyads {

// Covariates missing for edges that estimation needs.
class MissingCovariateError : public InputError {
 public:
  MissingCovariateError(std::string what, std::vector<EdgeIndex> missing)
      : InputError(std::move(what)), missing_(std::move(missing)) {}
  const std::vector<EdgeIndex>& missing() const { return missing_; }

 private:
  std::vector<EdgeIndex> missing_;
};

// Maps a cell index to its covariate vector. Only edges of active polyads
// are ever queried, so providers need not materialize the full index space.
class CovariateProvider {
 public:
  virtual ~CovariateProvider() = default;

  virtual int width() const = 0;

  // Writes width() values to out. False when the edge is not covered.
  virtual bool try_load(const EdgeIndex& e, double* out) const = 0;

  // Throws MissingCovariateError naming the edge.
  void load(const EdgeIndex& e, double* out) const;
};

// Row-major dense storage over the full index space.
class DenseArrayCovariates : public CovariateProvider {
 public:
  DenseArrayCovariates(std::vector<int32_t> sizes, int width);

  int width() const override { return width_; }
  bool try_load(const EdgeIndex& e, double* out) const override;

  double* cell(const EdgeIndex& e) { return data_.data() + offset(e) * width_; }
  const double* cell(const EdgeIndex& e) const {
    return data_.data() + offset(e) * width_;
  }
  int64_t num_cells() const {
    return static_cast<int64_t>(data_.size()) / width_;
  }
  const std::vector<int32_t>& sizes() const { return sizes_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  int64_t offset(const EdgeIndex& e) const;

  std::vector<int32_t> sizes_;
  int width_;
  std::vector<int64_t> strides_;
  std::vector<double> data_;
};

// Hash-map backed storage, for covariate files covering a subset of cells.
class MapCovariates : public CovariateProvider {
 public:
  MapCovariates(int dims, int width) : dims_(dims), width_(width) {}

  void put(const EdgeIndex& e, const std::vector<double>& values);

  int width() const override { return width_; }
  bool try_load(const EdgeIndex& e, double* out) const override;
  size_t size() const { return values_.size(); }

 private:
  int dims_;
  int width_;
  std::unordered_map<EdgeIndex, std::vector<double>, EdgeIndexHash> values_;
};

// Wraps a function of the cell index. The function returns false for
// uncovered edges.
class CallbackCovariates : public CovariateProvider {
 public:
  using Fn = std::function<bool(const EdgeIndex&, double*)>;

  CallbackCovariates(int width, Fn fn) : width_(width), fn_(std::move(fn)) {}

  int width() const override { return width_; }
  bool try_load(const EdgeIndex& e, double* out) const override {
    return fn_(e, out);
  }

 private:
  int width_;
  Fn fn_;
};

}  // namespace polyads
