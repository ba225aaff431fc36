#include "phsis/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phsis {

namespace {

inline double row_dot(const CsrMatrix& m, Index i, std::span<const double> x) {
  double s = 0.0;
  for (Index k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) s += m.val[k] * x[m.col[k]];
  return s;
}

inline double phase_dot(const Eigen::VectorXd& r, std::span<const double> x, Index offset) {
  double s = 0.0;
  for (Index l = 0; l < r.size(); ++l) s += r[l] * x[offset + l];
  return s;
}

// y_i = L x_i + shift x_i + w (sum_j C_ij proj_j) c
inline void kron_block(const KroneckerBlocks& k, Index i, std::span<const double> x,
                       const std::vector<double>& proj, std::span<double> y, double shift) {
  const Index p = k.phases();
  const Index base = i * p;
  double pressure = 0.0;
  for (Index e = k.coupling.row_ptr[i]; e < k.coupling.row_ptr[i + 1]; ++e)
    pressure += k.coupling.val[e] * proj[k.coupling.col[e]];
  pressure *= k.weight;
  for (Index l = 0; l < p; ++l) {
    double s = shift * x[base + l];
    for (Index m = 0; m < p; ++m) s += k.local(l, m) * x[base + m];
    y[base + l] = s + pressure * k.out[l];
  }
}

}  // namespace

namespace kernels {

void spmv(const CsrMatrix& m, std::span<const double> x, std::span<double> y, double shift) {
  const Index n = m.rows;
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) y[i] = row_dot(m, i, x) + shift * x[i];
}

void kron_apply(const KroneckerBlocks& k, std::span<const double> x, std::span<double> y, double shift) {
  const Index n = k.nodes();
  const Index p = k.phases();
  std::vector<double> proj(static_cast<std::size_t>(n));
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (Index j = 0; j < n; ++j) proj[j] = phase_dot(k.in, x, j * p);
#pragma omp for schedule(static)
    for (Index i = 0; i < n; ++i) kron_block(k, i, x, proj, y, shift);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace kernels

namespace kernels::serial {

void spmv(const CsrMatrix& m, std::span<const double> x, std::span<double> y, double shift) {
  for (Index i = 0; i < m.rows; ++i) y[i] = row_dot(m, i, x) + shift * x[i];
}

void kron_apply(const KroneckerBlocks& k, std::span<const double> x, std::span<double> y, double shift) {
  const Index n = k.nodes();
  const Index p = k.phases();
  std::vector<double> proj(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) proj[j] = phase_dot(k.in, x, j * p);
  for (Index i = 0; i < n; ++i) kron_block(k, i, x, proj, y, shift);
}

}  // namespace kernels::serial

}  // namespace phsis
