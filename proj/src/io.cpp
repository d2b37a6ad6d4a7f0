#include "polyads/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace polyads {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

// Internal id for an external one, or 0 when unknown.
int32_t lookup(const std::vector<int64_t>& ids, int64_t ext) {
  auto it = std::lower_bound(ids.begin(), ids.end(), ext);
  if (it == ids.end() || *it != ext) return 0;
  return static_cast<int32_t>(it - ids.begin() + 1);
}

}  // namespace

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

int64_t parse_int(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw InputError("expected an integer at " + context + ", got '" + text +
                     "'");
  return v;
}

double parse_real(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw InputError("expected a number at " + context + ", got '" + text +
                     "'");
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    auto [ptr, ec] = std::from_chars(buf, buf + std::strlen(buf), back);
    (void)ptr;
    if (ec == std::errc() && back == v) break;
  }
  return buf;
}

EdgeFileData read_edge_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + " is empty");
  size_t ncols = split(trim(line), ',').size();
  if (ncols < 2)
    throw InputError(path + ": header needs index columns and a count column");
  const int dims = static_cast<int>(ncols) - 1;
  if (dims > kMaxDims)
    throw InputError(path + ": more than " + std::to_string(kMaxDims) +
                     " index columns");

  std::vector<std::pair<std::vector<int64_t>, int64_t>> raw;
  std::vector<std::vector<int64_t>> seen(dims);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto parts = split(t, ',');
    if (parts.size() != ncols)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " fields, got " +
                       std::to_string(parts.size()));
    std::vector<int64_t> coords(dims);
    for (int d = 0; d < dims; ++d) {
      coords[d] =
          parse_int(parts[d], path + ":" + std::to_string(lineno));
      seen[d].push_back(coords[d]);
    }
    int64_t y = parse_int(parts[dims], path + ":" + std::to_string(lineno));
    raw.emplace_back(std::move(coords), y);
  }

  EdgeFileData out;
  out.dims = dims;
  out.id_maps.resize(dims);
  for (int d = 0; d < dims; ++d) {
    std::sort(seen[d].begin(), seen[d].end());
    seen[d].erase(std::unique(seen[d].begin(), seen[d].end()), seen[d].end());
    out.id_maps[d] = std::move(seen[d]);
  }
  out.entries.reserve(raw.size());
  for (const auto& [coords, y] : raw) {
    EdgeIndex e = EdgeIndex::zeros(dims);
    for (int d = 0; d < dims; ++d)
      e.set(d, lookup(out.id_maps[d], coords[d]));
    out.entries.emplace_back(e, y);
  }
  return out;
}

CovariateFileData read_covariate_file(
    const std::string& path, const std::vector<std::vector<int64_t>>& id_maps) {
  const int dims = static_cast<int>(id_maps.size());
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + " is empty");
  size_t ncols = split(trim(line), ',').size();
  if (ncols <= static_cast<size_t>(dims))
    throw InputError(path + ": header needs " + std::to_string(dims) +
                     " index columns plus at least one feature column");
  const int p = static_cast<int>(ncols) - dims;

  CovariateFileData out;
  out.width = p;
  out.covariates = std::make_shared<MapCovariates>(dims, p);
  std::vector<double> values(p);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto parts = split(t, ',');
    if (parts.size() != ncols)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " fields, got " +
                       std::to_string(parts.size()));
    ++out.rows;
    EdgeIndex e = EdgeIndex::zeros(dims);
    bool known = true;
    for (int d = 0; d < dims && known; ++d) {
      int32_t internal = lookup(
          id_maps[d],
          parse_int(parts[d], path + ":" + std::to_string(lineno)));
      if (internal == 0)
        known = false;
      else
        e.set(d, internal);
    }
    if (!known) {
      ++out.dropped_rows;
      continue;
    }
    for (int k = 0; k < p; ++k)
      values[k] =
          parse_real(parts[dims + k], path + ":" + std::to_string(lineno));
    out.covariates->put(e, values);
  }
  return out;
}

AttributeTable read_attribute_file(const std::string& path,
                                   const std::vector<int64_t>& id_map) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + " is empty");
  auto header = split(trim(line), ',');
  if (header.size() < 2)
    throw InputError(path + ": header needs id plus attribute columns");
  AttributeTable table;
  for (size_t k = 1; k < header.size(); ++k) {
    std::string name = trim(header[k]);
    if (name.empty())
      throw InputError(path + ": empty attribute name in header");
    table.names.push_back(std::move(name));
  }
  const size_t p = table.names.size();
  table.values.assign(id_map.size(), std::vector<double>(p, 0.0));
  table.present.assign(id_map.size(), 0);

  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto parts = split(t, ',');
    if (parts.size() != p + 1)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(p + 1) + " fields, got " +
                       std::to_string(parts.size()));
    int32_t internal =
        lookup(id_map, parse_int(parts[0], path + ":" + std::to_string(lineno)));
    if (internal == 0) continue;  // node absent from the edge file
    for (size_t k = 0; k < p; ++k)
      table.values[internal - 1][k] =
          parse_real(parts[k + 1], path + ":" + std::to_string(lineno));
    table.present[internal - 1] = 1;
  }
  return table;
}

void write_edge_file(const std::string& path, const SparseCountGraph& graph,
                     const std::vector<std::vector<int64_t>>* id_maps) {
  std::ofstream outf(path);
  if (!outf) throw InputError("cannot write " + path);
  for (int d = 1; d <= graph.dims(); ++d)
    outf << "i" << d << ",";
  outf << "y\n";
  for (const auto& [e, y] : graph.entries()) {
    for (int d = 0; d < graph.dims(); ++d) {
      int64_t id = id_maps ? (*id_maps)[d][e[d] - 1] : e[d];
      outf << id << ",";
    }
    outf << y << "\n";
  }
  if (!outf) throw InputError("failed writing " + path);
}

void write_covariate_file(const std::string& path,
                          const std::vector<int32_t>& sizes,
                          const CovariateProvider& cov) {
  std::ofstream outf(path);
  if (!outf) throw InputError("cannot write " + path);
  const int dims = static_cast<int>(sizes.size());
  const int p = cov.width();
  if (p < 1) throw InvalidParameterError("no feature columns to export");
  for (int d = 1; d <= dims; ++d) outf << "i" << d << ",";
  for (int k = 1; k <= p; ++k) outf << "x" << k << (k < p ? "," : "\n");
  std::vector<double> values(p);
  std::vector<int32_t> coords(dims, 1);
  while (true) {
    EdgeIndex e = EdgeIndex::of(coords);
    cov.load(e, values.data());
    for (int d = 0; d < dims; ++d) outf << coords[d] << ",";
    for (int k = 0; k < p; ++k)
      outf << format_double(values[k]) << (k + 1 < p ? "," : "\n");
    int d = dims - 1;
    for (; d >= 0; --d) {
      if (coords[d] < sizes[d]) {
        ++coords[d];
        break;
      }
      coords[d] = 1;
    }
    if (d < 0) break;
  }
  if (!outf) throw InputError("failed writing " + path);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError(path + ":" + std::to_string(lineno) +
                       ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw InputError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

}  // namespace polyads
