#pragma once

// Minimal dense row-major matrix and general CSR container used throughout.

#include <cstddef>
#include <vector>

namespace bayesgcn {

struct Matrix {
  long rows = 0;
  long cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(long r, long c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(long i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(long i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  double& at(long i, long j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(long i, long j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

// Compressed sparse rows; row i holds entries [row_start[i], row_start[i+1]).
struct CsrMatrix {
  long rows = 0;
  long cols = 0;
  std::vector<long> row_start;   // size rows + 1
  std::vector<int> col_index;
  std::vector<double> values;
};

}  // namespace bayesgcn
