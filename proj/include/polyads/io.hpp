#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "polyads/covariates.hpp"
#include "polyads/graph.hpp"

namespace polyads {

// Edge files carry arbitrary integer node ids; coordinates are relabeled to
// dense 1-based ids, ascending within each dimension. id_maps[d][k] is the
// external id of internal id k+1.
struct EdgeFileData {
  int dims = 0;
  std::vector<std::pair<EdgeIndex, int64_t>> entries;
  std::vector<std::vector<int64_t>> id_maps;
};

// Header i1,...,iD,y then integer rows.
EdgeFileData read_edge_file(const std::string& path);

struct CovariateFileData {
  std::shared_ptr<MapCovariates> covariates;
  int width = 0;
  uint64_t rows = 0;
  // Rows whose coordinates never appear in the edge file.
  uint64_t dropped_rows = 0;
};

// Header i1,...,iD,x1,...,xp.
CovariateFileData read_covariate_file(
    const std::string& path, const std::vector<std::vector<int64_t>>& id_maps);

// Node attributes for one dimension: header id,name1,...,nameK. Values keyed
// by internal id after relabeling through id_map.
struct AttributeTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [internal id - 1][attribute]
  std::vector<char> present;                // internal ids seen in the file
};

AttributeTable read_attribute_file(const std::string& path,
                                   const std::vector<int64_t>& id_map);

void write_edge_file(const std::string& path, const SparseCountGraph& graph,
                     const std::vector<std::vector<int64_t>>* id_maps = nullptr);

// One row per cell of the dense index space.
void write_covariate_file(const std::string& path,
                          const std::vector<int32_t>& sizes,
                          const CovariateProvider& cov);

// Flat key=value text; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Shortest decimal that round-trips a double.
std::string format_double(double v);

std::vector<std::string> split(const std::string& line, char sep);

int64_t parse_int(const std::string& text, const std::string& context);
double parse_real(const std::string& text, const std::string& context);

}  // namespace polyads
