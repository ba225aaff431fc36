#include "phsis/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace phsis {

// ---------------------------------------------------------------------------
// Operators

MetzlerMatrix::MetzlerMatrix(CsrMatrix m) : m_(std::move(m)) {
  if (m_.rows != m_.cols) throw InputError("metzler: matrix must be square");
  for (Index i = 0; i < m_.rows; ++i)
    for (Index k = m_.row_ptr[i]; k < m_.row_ptr[i + 1]; ++k)
      if (m_.col[k] != i && m_.val[k] < 0.0) throw InputError("metzler: off-diagonal negative entry");
}

MetzlerMatrix MetzlerMatrix::from_dense(const Eigen::MatrixXd& dense) {
  return MetzlerMatrix(CsrMatrix::from_dense(dense));
}

void MetzlerMatrix::apply(std::span<const double> x, std::span<double> y, double shift) const {
  kernels::spmv(m_, x, y, shift);
}

KroneckerOperator::KroneckerOperator(KroneckerBlocks blocks) : k_(std::move(blocks)) {
  const Index p = k_.phases();
  if (k_.local.cols() != p || k_.out.size() != p || k_.in.size() != p)
    throw InputError("kronecker: block dimensions disagree");
  if (k_.coupling.rows != k_.coupling.cols) throw InputError("kronecker: coupling must be square");
  if (k_.weight < 0.0 || (k_.out.array() < 0.0).any() || (k_.in.array() < 0.0).any())
    throw InputError("kronecker: coupling factors must be nonnegative");
  for (double a : k_.coupling.val)
    if (a < 0.0) throw InputError("kronecker: coupling must be nonnegative");
  for (Index l = 0; l < p; ++l)
    for (Index m = 0; m < p; ++m)
      if (l != m && k_.local(l, m) < 0.0) throw InputError("kronecker: local block is not Metzler");
  if (k_.dim() > 0 && k_.coupling.nnz() * p * p + k_.dim() * p > kMaxAssembledNonzeros * 10)
    throw InputError("kronecker: dimension overflow");
}

void KroneckerOperator::apply(std::span<const double> x, std::span<double> y, double shift) const {
  kernels::kron_apply(k_, x, y, shift);
}

double KroneckerOperator::max_abs_diagonal() const {
  double m = 0.0;
  for (Index i = 0; i < k_.nodes(); ++i) {
    const double cii = k_.coupling.diagonal(i);
    for (Index l = 0; l < k_.phases(); ++l)
      m = std::max(m, std::abs(k_.local(l, l) + k_.weight * cii * k_.out[l] * k_.in[l]));
  }
  return m;
}

double KroneckerOperator::norm_inf() const {
  const double in_sum = k_.in.cwiseAbs().sum();
  const Eigen::VectorXd local_rows = k_.local.cwiseAbs().rowwise().sum();
  double m = 0.0;
  for (Index i = 0; i < k_.nodes(); ++i) {
    double csum = 0.0;
    for (Index e = k_.coupling.row_ptr[i]; e < k_.coupling.row_ptr[i + 1]; ++e) csum += std::abs(k_.coupling.val[e]);
    for (Index l = 0; l < k_.phases(); ++l)
      m = std::max(m, local_rows[l] + k_.weight * std::abs(k_.out[l]) * csum * in_sum);
  }
  return m;
}

CsrMatrix KroneckerOperator::materialize() const {
  const Index n = k_.nodes();
  const Index p = k_.phases();
  CsrMatrix m;
  m.rows = m.cols = n * p;
  m.row_ptr.assign(static_cast<std::size_t>(n * p) + 1, 0);
  std::vector<std::pair<Index, double>> row;
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < p; ++l) {
      row.clear();
      for (Index mm = 0; mm < p; ++mm) row.emplace_back(i * p + mm, k_.local(l, mm));
      for (Index e = k_.coupling.row_ptr[i]; e < k_.coupling.row_ptr[i + 1]; ++e) {
        const Index j = k_.coupling.col[e];
        const double a = k_.weight * k_.coupling.val[e] * k_.out[l];
        for (Index mm = 0; mm < p; ++mm) row.emplace_back(j * p + mm, a * k_.in[mm]);
      }
      std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t q = 0; q < row.size();) {
        Index c = row[q].first;
        double s = 0.0;
        for (; q < row.size() && row[q].first == c; ++q) s += row[q].second;
        if (s != 0.0) {
          m.col.push_back(c);
          m.val.push_back(s);
        }
      }
      if (m.nnz() > kMaxAssembledNonzeros) throw InputError("kronecker: more than 1e7 nonzeros");
      m.row_ptr[i * p + l + 1] = m.nnz();
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Structure

namespace {

std::size_t reach_count(const CsrMatrix& m) {
  std::vector<char> seen(static_cast<std::size_t>(m.rows), 0);
  std::vector<Index> queue{0};
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Index i = queue[head];
    for (Index k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
      const Index j = m.col[k];
      if (j != i && m.val[k] != 0.0 && !seen[j]) {
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return queue.size();
}

}  // namespace

bool is_irreducible(const CsrMatrix& m) {
  if (m.rows <= 1) return true;
  const auto n = static_cast<std::size_t>(m.rows);
  return reach_count(m) == n && reach_count(m.transpose()) == n;
}

bool is_irreducible(const Eigen::MatrixXd& m) { return is_irreducible(CsrMatrix::from_dense(m)); }

// ---------------------------------------------------------------------------
// Spectral abscissa

namespace {

SpectralResult dense_rightmost(const CsrMatrix& csr, Index limit) {
  if (csr.rows > limit)
    throw PreconditionError("spectral_abscissa: reducible input of dimension " + std::to_string(csr.rows) +
                            " exceeds the dense fallback limit");
  const Eigen::MatrixXd d = csr.to_dense();
  Eigen::EigenSolver<Eigen::MatrixXd> es(d, true);
  if (es.info() != Eigen::Success) throw ConvergenceError("spectral_abscissa: dense eigensolver failed", 0.0);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()[k].real() > es.eigenvalues()[best].real()) best = k;
  SpectralResult r;
  r.abscissa = r.lower = r.upper = es.eigenvalues()[best].real();
  Eigen::VectorXd vec = es.eigenvectors().col(best).real();
  if (vec.sum() < 0.0) vec = -vec;
  const double l1 = vec.cwiseAbs().sum();
  r.vector = l1 > 0.0 ? Eigen::VectorXd(vec / l1) : vec;
  r.irreducible = false;
  r.dense_fallback = true;
  return r;
}

}  // namespace

SpectralResult spectral_abscissa_full(const MetzlerOperator& m, const PowerOptions& opts,
                                      const Eigen::VectorXd* warm_start) {
  const Index n = m.dim();
  if (n == 0) throw InputError("spectral_abscissa: empty matrix");
  const CsrMatrix pattern = m.materialize();
  if (!is_irreducible(pattern)) return dense_rightmost(pattern, opts.dense_limit);

  const double c = 1.0 + m.max_abs_diagonal();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (warm_start && warm_start->size() == n && (warm_start->array() > 0.0).all())
    x = *warm_start / warm_start->sum();
  Eigen::VectorXd y(n);

  SpectralResult r;
  for (long it = 1; it <= opts.max_iterations; ++it) {
    m.apply({x.data(), static_cast<std::size_t>(n)}, {y.data(), static_cast<std::size_t>(n)}, c);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Index i = 0; i < n; ++i) {
      const double ratio = y[i] / x[i];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    const double total = y.sum();
    r.iterations = it;
    r.lower = lo - c;
    r.upper = hi - c;
    const bool sign_known = opts.sign_only && (lo > c || hi < c);
    if (hi - lo <= opts.tolerance * hi || sign_known || !std::isfinite(total)) {
      if (!std::isfinite(total)) throw ConvergenceError("spectral_abscissa: iterate overflow", hi - lo);
      r.abscissa = 0.5 * (lo + hi) - c;
      r.vector = y / total;
      return r;
    }
    x = y / total;
    // Entries that underflow to zero would break the ratio bracket.
    if ((x.array() <= 0.0).any()) x = x.cwiseMax(std::numeric_limits<double>::min());
  }
  throw ConvergenceError("spectral_abscissa: power iteration did not converge in " +
                             std::to_string(opts.max_iterations) + " iterations",
                         r.upper - r.lower);
}

double spectral_abscissa(const MetzlerOperator& m, const PowerOptions& opts) {
  return spectral_abscissa_full(m, opts).abscissa;
}

Eigen::VectorXd perron_vector(const MetzlerOperator& m, const PowerOptions& opts) {
  if (!is_irreducible(m.materialize())) throw PreconditionError("perron_vector: matrix is reducible");
  return spectral_abscissa_full(m, opts).vector;
}

HurwitzResult is_hurwitz(const MetzlerMatrix& m) {
  const Index n = m.dim();
  HurwitzResult result;
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, -1.0);

  Eigen::SparseMatrix<double> s = m.csr().to_eigen();
  s.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(s);
  bool solved = false;
  Eigen::VectorXd x;
  if (lu.info() == Eigen::Success) {
    x = lu.solve(rhs);
    solved = lu.info() == Eigen::Success && x.allFinite() && x.cwiseAbs().maxCoeff() < 1e10;
  }

  if (solved) {
    const bool positive = (x.array() > 0.0).all();
    if (positive) {
      Eigen::VectorXd mx(n);
      m.apply({x.data(), static_cast<std::size_t>(n)}, {mx.data(), static_cast<std::size_t>(n)});
      if ((mx.array() < 0.0).all()) {
        result.stable = true;
        result.certificate = std::move(x);
        return result;
      }
    }
  }

  // Unstable, or too close to singular to trust the solve.
  const SpectralResult sr = spectral_abscissa_full(m);
  result.abscissa = sr.abscissa;
  result.stable = sr.abscissa < -1e-10;
  result.certificate = sr.vector;
  return result;
}

// ---------------------------------------------------------------------------
// Kronecker assembly

KroneckerBlocks a_beta_blocks(const Graph& g, const PhaseType& ph, double beta) {
  KroneckerBlocks k;
  k.coupling = adjacency(g);
  k.local = ph.S().transpose();
  k.out = ph.phi();
  k.in = Eigen::VectorXd::Ones(ph.phases());
  k.weight = beta;
  return k;
}

KroneckerBlocks b_delta_blocks(const Graph& g, const PhaseType& ph, double delta) {
  const int p = ph.phases();
  KroneckerBlocks k;
  k.coupling = adjacency(g);
  k.local = ph.S().transpose() + ph.phi() * ph.v().transpose() - delta * Eigen::MatrixXd::Identity(p, p);
  k.out = ph.phi();
  k.in = ph.v();
  k.weight = 1.0;
  return k;
}

KroneckerOperator a_beta_operator(const Graph& g, const PhaseType& ph, double beta) {
  if (!(beta > 0.0)) throw InputError("A_beta: beta must be positive");
  return KroneckerOperator(a_beta_blocks(g, ph, beta));
}

KroneckerOperator b_delta_operator(const Graph& g, const PhaseType& ph, double delta) {
  if (!(delta >= 0.0)) throw InputError("B_delta: delta must be nonnegative");
  return KroneckerOperator(b_delta_blocks(g, ph, delta));
}

MetzlerMatrix assemble_A_beta(const Graph& g, const PhaseType& ph, double beta) {
  return MetzlerMatrix(a_beta_operator(g, ph, beta).materialize());
}

MetzlerMatrix assemble_B_delta(const Graph& g, const PhaseType& ph, double delta) {
  return MetzlerMatrix(b_delta_operator(g, ph, delta).materialize());
}

// ---------------------------------------------------------------------------
// Thresholds

namespace {

// Sign of eta(A_beta), warm-starting the power iteration from `vec`.
int abscissa_sign(const Graph& g, const PhaseType& ph, double beta, Eigen::VectorXd& vec,
                  ThresholdDiagnostics* diag) {
  PowerOptions opts;
  opts.sign_only = true;
  const SpectralResult r = spectral_abscissa_full(a_beta_operator(g, ph, beta), opts, &vec);
  if (r.vector.size() == vec.size() || vec.size() == 0) vec = r.vector;
  if (diag) {
    diag->power_iterations += r.iterations;
    diag->dense_fallback = diag->dense_fallback || r.dense_fallback;
  }
  if (r.lower > 0.0) return 1;
  if (r.upper < 0.0) return -1;
  return r.abscissa > 0.0 ? 1 : (r.abscissa < 0.0 ? -1 : 0);
}

}  // namespace

double beta_threshold_spectral(const Graph& g, const PhaseType& ph, ThresholdDiagnostics* diag, double rel_tol) {
  if (!is_connected(g)) throw PreconditionError("beta_threshold_spectral: adjacency is reducible");
  if (g.edges().empty()) throw PreconditionError("beta_threshold_spectral: graph has no edges");
  const double eta = spectral_radius(g);
  double beta = 1.0 / (mean(ph) * eta);

  Eigen::VectorXd vec;
  int s = abscissa_sign(g, ph, beta, vec, diag);
  if (s == 0) return beta;
  double lo = beta;
  double hi = beta;
  int steps = 0;
  while (true) {
    if (++steps > 60) throw ConvergenceError("beta_threshold_spectral: no sign change within 60 doublings", beta);
    if (s > 0) {
      hi = beta;
      beta *= 0.5;
    } else {
      lo = beta;
      beta *= 2.0;
    }
    const int t = abscissa_sign(g, ph, beta, vec, diag);
    if (t == 0) return beta;
    if (t != s) {
      (t > 0 ? hi : lo) = beta;
      break;
    }
  }
  if (diag) diag->bracket_steps = steps;

  int bisections = 0;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    const int t = abscissa_sign(g, ph, mid, vec, diag);
    ++bisections;
    if (t == 0) {
      lo = hi = mid;
      break;
    }
    (t > 0 ? hi : lo) = mid;
  }
  if (diag) diag->bisection_steps = bisections;
  return 0.5 * (lo + hi);
}

double delta_threshold_spectral(const Graph& g, const PhaseType& ph, ThresholdDiagnostics* diag) {
  const SpectralResult r = spectral_abscissa_full(b_delta_operator(g, ph, 0.0));
  if (diag) {
    diag->power_iterations += r.iterations;
    diag->dense_fallback = diag->dense_fallback || r.dense_fallback;
  }
  return r.abscissa;
}

double delta_threshold_laplace(double eta_A, const PhaseType& ph, double rel_tol) {
  if (!(eta_A > 0.0)) throw PreconditionError("delta_threshold_laplace: threshold undefined for eta(A) = 0");
  const double target = 1.0 / (1.0 + eta_A);
  double lo = 0.0;
  double hi = std::max(1.0, eta_A / mean(ph));
  int doublings = 0;
  while (laplace(ph, hi) >= target) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) throw ConvergenceError("delta_threshold_laplace: no bracket", hi);
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (laplace(ph, mid) >= target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double delta_threshold_laplace(const Graph& g, const PhaseType& ph, double rel_tol) {
  return delta_threshold_laplace(spectral_radius(g), ph, rel_tol);
}

double weibull_delta_zero(double alpha, double eta_A) {
  if (!(alpha > 0.0) || !(eta_A > 0.0)) throw InputError("weibull_delta_zero: arguments must be positive");
  return std::tgamma(1.0 + 1.0 / alpha) * std::pow(std::tgamma(alpha + 1.0), 1.0 / alpha) *
         std::pow(eta_A, 1.0 / alpha);
}

std::string to_string(Regime r) { return r == Regime::ph_recovery ? "ph-recovery" : "ph-transmission"; }

Regime parse_regime(const std::string& s) {
  if (s == "ph-recovery" || s == "A" || s == "a") return Regime::ph_recovery;
  if (s == "ph-transmission" || s == "B" || s == "b") return Regime::ph_transmission;
  throw InputError("unknown regime '" + s + "' (expected ph-recovery or ph-transmission)");
}

ThresholdReport threshold_report(const Graph& g, const PhaseType& ph, Regime regime) {
  ThresholdReport rep;
  rep.regime = regime;
  rep.eta_A = spectral_radius(g);
  if (regime == Regime::ph_recovery) {
    rep.beta_star = beta_threshold_spectral(g, ph, &rep.diagnostics);
    rep.beta_zero = 1.0 / (mean(ph) * rep.eta_A);
  } else {
    rep.delta_one = delta_threshold_spectral(g, ph, &rep.diagnostics);
    rep.delta_zero = delta_threshold_laplace(rep.eta_A, ph);
  }
  rep.subgenerator_irreducible = is_irreducible(ph.S());
  const double spectral = rep.beta_star ? *rep.beta_star : *rep.delta_one;
  const double closed = rep.beta_zero ? *rep.beta_zero : *rep.delta_zero;
  rep.thresholds_agree = std::abs(spectral - closed) <= kAgreementTolerance * std::abs(closed);
  return rep;
}

}  // namespace phsis
