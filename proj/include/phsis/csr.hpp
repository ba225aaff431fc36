#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

namespace phsis {

using Index = std::int64_t;

/// Compressed sparse row matrix with sorted column indices per row.
struct CsrMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> col;
  std::vector<double> val;

  Index nnz() const { return static_cast<Index>(val.size()); }

  /// Entries with |value| <= drop are not stored.
  static CsrMatrix from_dense(const Eigen::MatrixXd& dense, double drop = 0.0);
  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

  double diagonal(Index i) const;
  double max_abs_diagonal() const;
  double norm_inf() const;
  CsrMatrix transpose() const;
};

}  // namespace phsis
