#pragma once

#include <span>

#include "phsis/csr.hpp"

namespace phsis {

/// Block structure I⊗L + w·C⊗(c rᵀ) over n nodes with p phases each.
/// C is the n×n node coupling (an adjacency), L the p×p per-node block,
/// c and r the outer-product factors of the coupling block.
struct KroneckerBlocks {
  CsrMatrix coupling;
  Eigen::MatrixXd local;
  Eigen::VectorXd out;
  Eigen::VectorXd in;
  double weight = 1.0;

  Index nodes() const { return coupling.rows; }
  Index phases() const { return local.rows(); }
  Index dim() const { return nodes() * phases(); }
};

// OpenMP kernels. Results are bitwise identical to the serial reference:
// every output entry is computed by one thread with the same operation order.
namespace kernels {

/// y = (M + shift·I) x
void spmv(const CsrMatrix& m, std::span<const double> x, std::span<double> y, double shift = 0.0);

/// y = (I⊗L + w·C⊗(c rᵀ) + shift·I) x, matrix free.
void kron_apply(const KroneckerBlocks& k, std::span<const double> x, std::span<double> y, double shift = 0.0);

int max_threads();

}  // namespace kernels

namespace kernels::serial {

void spmv(const CsrMatrix& m, std::span<const double> x, std::span<double> y, double shift = 0.0);
void kron_apply(const KroneckerBlocks& k, std::span<const double> x, std::span<double> y, double shift = 0.0);

}  // namespace kernels::serial

}  // namespace phsis
