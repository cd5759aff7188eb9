#include "bayesgcn/graph_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace bayesgcn {
namespace {

using nlohmann::json;

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError("cannot open " + p.string());
  return in;
}

json parse_json_file(const std::filesystem::path& p) {
  std::ifstream in = open_or_throw(p);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
  return j;
}

[[noreturn]] void bad_line(const std::filesystem::path& p, long line, const std::string& what) {
  throw ValidationError(p.string() + ":" + std::to_string(line) + ": " + what);
}

// Splits a line into exactly `n` tab-separated fields.
std::vector<std::string> split_fields(const std::string& line, std::size_t n,
                                      const std::filesystem::path& p, long lineno) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  if (out.size() != n) bad_line(p, lineno, "expected " + std::to_string(n) + " tab-separated fields");
  return out;
}

long parse_long(const std::string& s, const std::filesystem::path& p, long lineno) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_line(p, lineno, "not an integer: '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::filesystem::path& p, long lineno) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty()) bad_line(p, lineno, "not a number: '" + s + "'");
  return v;
}

std::vector<int> read_mask(const json& j, const char* key, long num_nodes,
                           const std::filesystem::path& p) {
  if (!j.contains(key) || !j[key].is_array())
    throw ValidationError(p.string() + ": missing array '" + key + "'");
  std::vector<int> mask;
  mask.reserve(j[key].size());
  std::size_t pos = 0;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer())
      throw ValidationError(p.string() + ": " + key + "[" + std::to_string(pos) + "] is not an integer");
    const long node = v.get<long>();
    if (node < 0 || node >= num_nodes)
      throw ValidationError(p.string() + ": " + key + "[" + std::to_string(pos) + "] = " +
                            std::to_string(node) + " is out of range");
    mask.push_back(static_cast<int>(node));
    ++pos;
  }
  std::vector<int> sorted = mask;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] == sorted[i - 1])
      throw ValidationError(p.string() + ": " + std::string(key) + " lists node " +
                            std::to_string(sorted[i]) + " twice");
  return sorted;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;

  const auto meta_path = dir / "meta.json";
  const json meta = parse_json_file(meta_path);
  for (const char* key : {"nodes", "features", "classes"})
    if (!meta.contains(key) || !meta[key].is_number_integer())
      throw ValidationError(meta_path.string() + ": missing integer field '" + key + "'");
  ds.num_nodes = meta["nodes"].get<long>();
  ds.num_features = meta["features"].get<long>();
  ds.num_classes = meta["classes"].get<int>();
  const bool row_normalize = meta.value("row_normalize", false);
  if (ds.num_nodes <= 0 || ds.num_features <= 0 || ds.num_classes <= 0)
    throw ValidationError(meta_path.string() + ": nodes, features and classes must be positive");

  // graph.edges
  {
    const auto path = dir / "graph.edges";
    std::ifstream in = open_or_throw(path);
    std::unordered_set<std::uint64_t> seen;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = split_fields(line, 2, path, lineno);
      const long src = parse_long(f[0], path, lineno);
      const long dst = parse_long(f[1], path, lineno);
      if (src < 0 || src >= ds.num_nodes || dst < 0 || dst >= ds.num_nodes)
        bad_line(path, lineno, "node index out of range");
      if (src == dst) bad_line(path, lineno, "self-loop on node " + std::to_string(src));
      const int lo = static_cast<int>(std::min(src, dst));
      const int hi = static_cast<int>(std::max(src, dst));
      const std::uint64_t key = static_cast<std::uint64_t>(lo) * static_cast<std::uint64_t>(ds.num_nodes) + hi;
      if (seen.insert(key).second) ds.edges.emplace_back(lo, hi);
    }
    std::sort(ds.edges.begin(), ds.edges.end());
  }

  // features.tsv
  {
    const auto path = dir / "features.tsv";
    std::ifstream in = open_or_throw(path);
    struct Triple {
      long node, feature;
      double value;
      long lineno;
    };
    std::vector<Triple> triples;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = split_fields(line, 3, path, lineno);
      Triple t;
      t.node = parse_long(f[0], path, lineno);
      t.feature = parse_long(f[1], path, lineno);
      t.value = parse_double(f[2], path, lineno);
      t.lineno = lineno;
      if (t.node < 0 || t.node >= ds.num_nodes) bad_line(path, lineno, "node index out of range");
      if (t.feature < 0 || t.feature >= ds.num_features) bad_line(path, lineno, "feature index out of range");
      if (!std::isfinite(t.value) || t.value < 0.0) bad_line(path, lineno, "feature values must be finite and nonnegative");
      triples.push_back(t);
    }
    std::stable_sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
      return a.node != b.node ? a.node < b.node : a.feature < b.feature;
    });
    for (std::size_t i = 1; i < triples.size(); ++i)
      if (triples[i].node == triples[i - 1].node && triples[i].feature == triples[i - 1].feature)
        bad_line(path, triples[i].lineno,
                 "duplicate entry for node " + std::to_string(triples[i].node) + ", feature " +
                     std::to_string(triples[i].feature));

    ds.features.rows = ds.num_nodes;
    ds.features.cols = ds.num_features;
    ds.features.row_start.assign(ds.num_nodes + 1, 0);
    for (const auto& t : triples) ++ds.features.row_start[t.node + 1];
    for (long i = 0; i < ds.num_nodes; ++i) ds.features.row_start[i + 1] += ds.features.row_start[i];
    ds.features.col_index.reserve(triples.size());
    ds.features.values.reserve(triples.size());
    for (const auto& t : triples) {
      ds.features.col_index.push_back(static_cast<int>(t.feature));
      ds.features.values.push_back(t.value);
    }
  }

  // labels.txt
  {
    const auto path = dir / "labels.txt";
    std::ifstream in = open_or_throw(path);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() && in.peek() == EOF) break;
      const long label = parse_long(line, path, lineno);
      if (label < 0 || label >= ds.num_classes) bad_line(path, lineno, "label out of range");
      ds.labels.push_back(static_cast<int>(label));
    }
    if (static_cast<long>(ds.labels.size()) != ds.num_nodes)
      throw ValidationError(path.string() + ": expected " + std::to_string(ds.num_nodes) +
                            " labels, found " + std::to_string(ds.labels.size()));
  }

  // splits.json
  {
    const auto path = dir / "splits.json";
    const json splits = parse_json_file(path);
    ds.train_mask = read_mask(splits, "train", ds.num_nodes, path);
    ds.test_mask = read_mask(splits, "test", ds.num_nodes, path);
    std::size_t ti = 0;
    for (std::size_t i = 0; i < ds.train_mask.size(); ++i) {
      while (ti < ds.test_mask.size() && ds.test_mask[ti] < ds.train_mask[i]) ++ti;
      if (ti < ds.test_mask.size() && ds.test_mask[ti] == ds.train_mask[i])
        throw ValidationError(path.string() + ": node " + std::to_string(ds.train_mask[i]) +
                              " (train[" + std::to_string(i) + "]) appears in both masks");
    }
  }

  if (row_normalize) {
    for (long i = 0; i < ds.num_nodes; ++i) {
      double sum = 0.0;
      for (long k = ds.features.row_start[i]; k < ds.features.row_start[i + 1]; ++k)
        sum += ds.features.values[k];
      if (sum > 0.0)
        for (long k = ds.features.row_start[i]; k < ds.features.row_start[i + 1]; ++k)
          ds.features.values[k] /= sum;
    }
    ds.row_normalized = true;
  }

  validate_dataset(ds);
  return ds;
}

void validate_dataset(const Dataset& ds) {
  if (ds.num_nodes <= 0 || ds.num_features <= 0 || ds.num_classes <= 0)
    throw ValidationError("dataset dimensions must be positive");
  if (static_cast<long>(ds.labels.size()) != ds.num_nodes)
    throw ValidationError("label count does not match node count");
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.num_classes)
      throw ValidationError("label out of range at node " + std::to_string(i));
  for (const auto& [lo, hi] : ds.edges) {
    if (lo == hi) throw ValidationError("self-loop on node " + std::to_string(lo));
    if (lo < 0 || hi >= ds.num_nodes) throw ValidationError("edge endpoint out of range");
  }
  for (std::size_t i = 1; i < ds.edges.size(); ++i)
    if (ds.edges[i] == ds.edges[i - 1])
      throw ValidationError("duplicate edge " + std::to_string(ds.edges[i].first) + "-" +
                            std::to_string(ds.edges[i].second));
  if (ds.features.rows != ds.num_nodes || ds.features.cols != ds.num_features)
    throw ValidationError("feature matrix shape does not match meta.json");
  for (double v : ds.features.values)
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("feature values must be finite and nonnegative");
  auto check_mask = [&](const std::vector<int>& mask, const char* name) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] < 0 || mask[i] >= ds.num_nodes)
        throw ValidationError(std::string(name) + " mask index out of range");
      if (i > 0 && mask[i] <= mask[i - 1])
        throw ValidationError(std::string(name) + " mask must be strictly increasing");
    }
  };
  check_mask(ds.train_mask, "train");
  check_mask(ds.test_mask, "test");
  std::size_t ti = 0;
  for (int node : ds.train_mask) {
    while (ti < ds.test_mask.size() && ds.test_mask[ti] < node) ++ti;
    if (ti < ds.test_mask.size() && ds.test_mask[ti] == node)
      throw ValidationError("node " + std::to_string(node) + " appears in both masks");
  }
}

NormalizedGraph normalize(const Dataset& ds) {
  const long n = ds.num_nodes;
  std::vector<long> degree(n, 0);
  for (const auto& [lo, hi] : ds.edges) {
    ++degree[lo];
    ++degree[hi];
  }

  // Adjacency lists including the self-loop, columns sorted.
  std::vector<std::vector<int>> nbrs(n);
  for (long i = 0; i < n; ++i) nbrs[i].reserve(degree[i] + 1);
  for (const auto& [lo, hi] : ds.edges) {
    nbrs[lo].push_back(hi);
    nbrs[hi].push_back(lo);
  }

  NormalizedGraph g;
  g.n = n;
  g.row_start.assign(n + 1, 0);
  for (long i = 0; i < n; ++i) g.row_start[i + 1] = g.row_start[i] + degree[i] + 1;
  g.col_index.resize(g.row_start[n]);
  g.values.resize(g.row_start[n]);

  for (long i = 0; i < n; ++i) {
    auto& row = nbrs[i];
    row.push_back(static_cast<int>(i));
    std::sort(row.begin(), row.end());
    const double di = std::sqrt(static_cast<double>(degree[i] + 1));
    long k = g.row_start[i];
    for (int j : row) {
      g.col_index[k] = j;
      g.values[k] = 1.0 / (di * std::sqrt(static_cast<double>(degree[j] + 1)));
      ++k;
    }
  }
  return g;
}

Matrix spmm(const NormalizedGraph& g, const Matrix& x) {
  if (x.rows != g.n) throw std::invalid_argument("spmm: row count mismatch");
  Matrix out(x.rows, x.cols);
  const long c = x.cols;
  for (long i = 0; i < g.n; ++i) {
    double* oi = out.row(i);
    for (long k = g.row_start[i]; k < g.row_start[i + 1]; ++k) {
      const double v = g.values[k];
      const double* xj = x.row(g.col_index[k]);
      for (long t = 0; t < c; ++t) oi[t] += v * xj[t];
    }
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    json meta;
    meta["nodes"] = ds.num_nodes;
    meta["features"] = ds.num_features;
    meta["classes"] = ds.num_classes;
    meta["row_normalize"] = ds.row_normalized;
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "graph.edges");
    for (const auto& [lo, hi] : ds.edges) out << lo << '\t' << hi << '\n';
  }
  {
    std::ofstream out(dir / "features.tsv");
    char buf[64];
    for (long i = 0; i < ds.num_nodes; ++i)
      for (long k = ds.features.row_start[i]; k < ds.features.row_start[i + 1]; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.features.values[k]);
        out << i << '\t' << ds.features.col_index[k] << '\t' << buf << '\n';
      }
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (int label : ds.labels) out << label << '\n';
  }
  {
    json splits;
    splits["train"] = ds.train_mask;
    splits["test"] = ds.test_mask;
    std::ofstream out(dir / "splits.json");
    out << splits.dump() << "\n";
  }
}

}  // namespace bayesgcn
