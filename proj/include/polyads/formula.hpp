#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polyads/covariates.hpp"
#include "polyads/io.hpp"

namespace polyads {

// Features computed from per-dimension node attributes instead of a
// materialized covariate table. A spec is ';'-separated expressions over
//   name@d        attribute "name" of the node in dimension d
//   eq(a, b)      1 if both sides are equal, else 0
//   + - * ( )     arithmetic, unary minus, numeric literals
// e.g. "eq(city@1,city@2);cost@1+cost@2".
class FormulaCovariates : public CovariateProvider {
 public:
  // tables[d-1] holds dimension d's attributes; dimensions the spec never
  // references may have empty tables. Attribute names are checked here,
  // per-node coverage surfaces through try_load.
  FormulaCovariates(const std::string& spec,
                    std::vector<AttributeTable> tables);
  ~FormulaCovariates() override;

  int width() const override { return static_cast<int>(features_.size()); }
  bool try_load(const EdgeIndex& e, double* out) const override;

  const std::vector<std::string>& feature_texts() const {
    return feature_texts_;
  }

  struct Node;

 private:
  std::vector<std::unique_ptr<Node>> features_;
  std::vector<std::string> feature_texts_;
  std::vector<AttributeTable> tables_;
};

}  // namespace polyads
