#include "phsis/csr.hpp"

#include <algorithm>
#include <cmath>

namespace phsis {

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense, double drop) {
  CsrMatrix m;
  m.rows = dense.rows();
  m.cols = dense.cols();
  m.row_ptr.assign(static_cast<std::size_t>(m.rows) + 1, 0);
  for (Index i = 0; i < m.rows; ++i) {
    for (Index j = 0; j < m.cols; ++j) {
      if (std::abs(dense(i, j)) > drop) {
        m.col.push_back(j);
        m.val.push_back(dense(i, j));
      }
    }
    m.row_ptr[i + 1] = m.nnz();
  }
  return m;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) d(i, col[k]) += val[k];
  return d;
}

Eigen::SparseMatrix<double> CsrMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(val.size());
  for (Index i = 0; i < rows; ++i)
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) triplets.emplace_back(i, col[k], val[k]);
  Eigen::SparseMatrix<double> s(rows, cols);
  s.setFromTriplets(triplets.begin(), triplets.end());
  return s;
}

double CsrMatrix::diagonal(Index i) const {
  const auto first = col.begin() + row_ptr[i];
  const auto last = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(first, last, i);
  return (it != last && *it == i) ? val[it - col.begin()] : 0.0;
}

double CsrMatrix::max_abs_diagonal() const {
  double m = 0.0;
  for (Index i = 0; i < std::min(rows, cols); ++i) m = std::max(m, std::abs(diagonal(i)));
  return m;
}

double CsrMatrix::norm_inf() const {
  double m = 0.0;
  for (Index i = 0; i < rows; ++i) {
    double s = 0.0;
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += std::abs(val[k]);
    m = std::max(m, s);
  }
  return m;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (Index c : col) ++t.row_ptr[c + 1];
  for (Index i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col.resize(col.size());
  t.val.resize(val.size());
  std::vector<Index> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const Index dst = cursor[col[k]]++;
      t.col[dst] = i;
      t.val[dst] = val[k];
    }
  }
  return t;
}

}  // namespace phsis
