#pragma once

// Citation-graph datasets: on-disk directory format, validation, the
// degree-normalized adjacency operator, and CSR-times-dense products.
//
// A dataset directory holds five files:
//   meta.json      {"nodes": N, "features": F, "classes": K, "row_normalize": bool}
//   graph.edges    one "src<TAB>dst" pair per line, 0-based, direction ignored
//   features.tsv   sparse triples "node<TAB>feature<TAB>value"
//   labels.txt     line i carries the class of node i
//   splits.json    {"train": [...], "test": [...]}, disjoint node index sets

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bayesgcn/linalg.hpp"

namespace bayesgcn {

// A required file is missing or unreadable.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File contents violate the format or the dataset invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  long num_nodes = 0;
  long num_features = 0;
  int num_classes = 0;
  bool row_normalized = false;

  // Undirected, deduplicated, self-loop free; stored as (lo, hi), sorted.
  std::vector<std::pair<int, int>> edges;
  CsrMatrix features;            // num_nodes x num_features, nonnegative
  std::vector<int> labels;       // size num_nodes, values in [0, num_classes)
  std::vector<int> train_mask;   // sorted node indices, disjoint from test_mask
  std::vector<int> test_mask;
};

// Symmetric degree-normalized adjacency with self-loops, in CSR form:
// entry (i, j) = 1/sqrt((d_i + 1)(d_j + 1)) for each undirected edge {i, j},
// and the diagonal carries 1/(d_i + 1).
struct NormalizedGraph {
  long n = 0;
  std::vector<long> row_start;   // size n + 1
  std::vector<int> col_index;
  std::vector<double> values;
};

Dataset load_dataset(const std::filesystem::path& dir);

// Re-checks every dataset invariant; throws ValidationError on the first hit.
void validate_dataset(const Dataset& ds);

NormalizedGraph normalize(const Dataset& ds);

// Left-multiply a dense matrix by the normalized adjacency: result = A_hat * x.
Matrix spmm(const NormalizedGraph& g, const Matrix& x);

// Writes a dataset in the directory format above (creates dir if needed).
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

}  // namespace bayesgcn
