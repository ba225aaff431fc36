#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>

#include "phsis/csr.hpp"
#include "phsis/graph.hpp"
#include "phsis/kernels.hpp"
#include "phsis/phase_type.hpp"

namespace phsis {

/// Square operator with nonnegative off-diagonal entries, applied either
/// from a stored sparse matrix or matrix free.
class MetzlerOperator {
 public:
  virtual ~MetzlerOperator() = default;
  virtual Index dim() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y, double shift = 0.0) const = 0;
  virtual double max_abs_diagonal() const = 0;
  virtual double norm_inf() const = 0;
  virtual CsrMatrix materialize() const = 0;
};

/// Stored sparse Metzler matrix. Off-diagonal entries are checked to be
/// nonnegative exactly (no tolerance) on construction.
class MetzlerMatrix final : public MetzlerOperator {
 public:
  explicit MetzlerMatrix(CsrMatrix m);
  static MetzlerMatrix from_dense(const Eigen::MatrixXd& dense);

  const CsrMatrix& csr() const { return m_; }
  Eigen::MatrixXd to_dense() const { return m_.to_dense(); }

  Index dim() const override { return m_.rows; }
  void apply(std::span<const double> x, std::span<double> y, double shift = 0.0) const override;
  double max_abs_diagonal() const override { return m_.max_abs_diagonal(); }
  double norm_inf() const override { return m_.norm_inf(); }
  CsrMatrix materialize() const override { return m_; }

 private:
  CsrMatrix m_;
};

/// Matrix-free I⊗L + w·A⊗(c rᵀ) over a graph.
class KroneckerOperator final : public MetzlerOperator {
 public:
  explicit KroneckerOperator(KroneckerBlocks blocks);

  const KroneckerBlocks& blocks() const { return k_; }

  Index dim() const override { return k_.dim(); }
  void apply(std::span<const double> x, std::span<double> y, double shift = 0.0) const override;
  double max_abs_diagonal() const override;
  double norm_inf() const override;
  CsrMatrix materialize() const override;

 private:
  KroneckerBlocks k_;
};

struct PowerOptions {
  /// Relative width of the Collatz-Wielandt bracket at convergence.
  double tolerance = 1e-13;
  long max_iterations = 5'000'000;
  /// Largest dimension handled by the dense fallback for reducible input.
  Index dense_limit = 2000;
  /// Stop as soon as the sign of the abscissa is certain.
  bool sign_only = false;
};

struct SpectralResult {
  double abscissa = 0.0;
  /// Certified bracket [lower, upper] for the abscissa (irreducible case).
  double lower = 0.0;
  double upper = 0.0;
  Eigen::VectorXd vector;  // Perron vector, unit 1-norm
  long iterations = 0;
  bool irreducible = true;
  bool dense_fallback = false;
};

/// Rightmost eigenvalue of a Metzler operator. Irreducible input: power
/// iteration on M + cI with c = 1 + max|diag|, stopped on the
/// Collatz-Wielandt bracket. Reducible input: dense eigensolver up to
/// opts.dense_limit, otherwise PreconditionError.
SpectralResult spectral_abscissa_full(const MetzlerOperator& m, const PowerOptions& opts = {},
                                      const Eigen::VectorXd* warm_start = nullptr);
double spectral_abscissa(const MetzlerOperator& m, const PowerOptions& opts = {});

struct HurwitzResult {
  bool stable = false;
  /// Stable: x = -M^{-1}1 > 0 with Mx = -1. Unstable: a nonnegative
  /// eigenvector for the rightmost eigenvalue.
  Eigen::VectorXd certificate;
  std::optional<double> abscissa;  // set when the spectral fallback ran
};

HurwitzResult is_hurwitz(const MetzlerMatrix& m);

/// Strong connectivity of the off-diagonal nonzero pattern.
bool is_irreducible(const CsrMatrix& m);
bool is_irreducible(const Eigen::MatrixXd& m);

/// Positive eigenvector of an irreducible Metzler matrix for eta(M), unit
/// 1-norm. Throws PreconditionError on reducible input.
Eigen::VectorXd perron_vector(const MetzlerOperator& m, const PowerOptions& opts = {});

/// Raw block data for the operators below, without argument checks.
KroneckerBlocks a_beta_blocks(const Graph& g, const PhaseType& ph, double beta);
KroneckerBlocks b_delta_blocks(const Graph& g, const PhaseType& ph, double delta);

/// I⊗Sᵀ + beta·A⊗(phi 1ᵀ)
KroneckerOperator a_beta_operator(const Graph& g, const PhaseType& ph, double beta);
/// I⊗Sᵀ + (A+I)⊗(phi vᵀ) - delta·I
KroneckerOperator b_delta_operator(const Graph& g, const PhaseType& ph, double delta);
MetzlerMatrix assemble_A_beta(const Graph& g, const PhaseType& ph, double beta);
MetzlerMatrix assemble_B_delta(const Graph& g, const PhaseType& ph, double delta);

/// Upper bound on stored nonzeros for assembled Kronecker matrices.
inline constexpr Index kMaxAssembledNonzeros = 10'000'000;

struct ThresholdDiagnostics {
  int bracket_steps = 0;
  int bisection_steps = 0;
  long power_iterations = 0;
  bool dense_fallback = false;
};

/// beta* with eta(A_beta*) = 0. Requires a connected graph.
double beta_threshold_spectral(const Graph& g, const PhaseType& ph, ThresholdDiagnostics* diag = nullptr,
                               double rel_tol = 1e-9);
/// delta_1 = eta(I⊗Sᵀ + (A+I)⊗(phi vᵀ)).
double delta_threshold_spectral(const Graph& g, const PhaseType& ph, ThresholdDiagnostics* diag = nullptr);
/// delta_0 solving laplace(ph, delta) = 1 / (1 + eta_A).
double delta_threshold_laplace(double eta_A, const PhaseType& ph, double rel_tol = 1e-9);
double delta_threshold_laplace(const Graph& g, const PhaseType& ph, double rel_tol = 1e-9);
/// Closed form Gamma(1+1/alpha) Gamma(alpha+1)^(1/alpha) eta^(1/alpha).
double weibull_delta_zero(double alpha, double eta_A);

enum class Regime { ph_recovery, ph_transmission };
std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

struct ThresholdReport {
  Regime regime = Regime::ph_recovery;
  double eta_A = 0.0;
  std::optional<double> beta_star;
  std::optional<double> beta_zero;
  std::optional<double> delta_one;
  std::optional<double> delta_zero;
  std::string graph_id;
  std::string ph_id;
  ThresholdDiagnostics diagnostics;
  double tolerance = 1e-9;
  bool subgenerator_irreducible = true;
  /// Spectral and closed-form thresholds agree within kAgreementTolerance.
  bool thresholds_agree = true;
};

inline constexpr double kAgreementTolerance = 1e-6;

ThresholdReport threshold_report(const Graph& g, const PhaseType& ph, Regime regime);

}  // namespace phsis
