#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "phsis/errors.hpp"
#include "phsis/rng.hpp"

namespace phsis {

/// Phase-type distribution (phi, S): the absorption time of a continuous-time
/// Markov chain with transient phases 1..p, initial distribution phi and
/// subgenerator S. Exit rates are v = -S·1.
///
/// Instances are immutable and always valid: phi lies on the simplex (no
/// atom at zero), S is Metzler with nonpositive row sums, and S is Hurwitz.
class PhaseType {
 public:
  /// Validates and builds. Throws InputError naming the violated invariant.
  static PhaseType make(Eigen::VectorXd phi, Eigen::MatrixXd S);

  static PhaseType exponential(double rate);
  /// Erlang with k phases, each of the given rate.
  static PhaseType erlang(int k, double rate);

  int phases() const { return static_cast<int>(phi_.size()); }
  const Eigen::VectorXd& phi() const { return phi_; }
  const Eigen::MatrixXd& S() const { return S_; }
  const Eigen::VectorXd& v() const { return v_; }

  /// Cumulative weights over the initial phase.
  std::span<const double> initial_cdf() const { return initial_cdf_; }
  /// Cumulative weights of leaving phase l: entries 0..p-1 are the jump
  /// targets (own index has zero mass), entry p is absorption. The last
  /// entry is the total outflow rate -S(l,l).
  std::span<const double> transition_cdf(int l) const {
    return {transition_cdf_.data() + static_cast<std::size_t>(l) * (phases() + 1),
            static_cast<std::size_t>(phases() + 1)};
  }

 private:
  PhaseType() = default;

  Eigen::VectorXd phi_;
  Eigen::MatrixXd S_;
  Eigen::VectorXd v_;
  std::vector<double> initial_cdf_;
  std::vector<double> transition_cdf_;
};

double mean(const PhaseType& ph);
double pdf(const PhaseType& ph, double t);
double cdf(const PhaseType& ph, double t);
/// phi^T (sI - S)^{-1} v
double laplace(const PhaseType& ph, double s);
/// Exact draw of the absorption time.
double sample(const PhaseType& ph, RandomStream& rng);
/// Draws an initial phase from phi.
int sample_initial_phase(const PhaseType& ph, RandomStream& rng);

/// Smallest t (to relative 1e-10) with cdf(t) >= q, by doubling then bisection.
double quantile_horizon(const PhaseType& ph, double q);

/// Weibull density (alpha/b)(t/b)^(alpha-1) exp(-(t/b)^alpha).
/// Throws InputError for alpha <= 0, b <= 0, t < 0, or t == 0 with alpha < 1.
double weibull_pdf(double alpha, double b, double t);
double weibull_cdf(double alpha, double b, double t);
double weibull_quantile(double alpha, double b, double q);
/// Scale b giving unit mean: 1 / Gamma(1 + 1/alpha).
double weibull_unit_mean_scale(double alpha);

}  // namespace phsis
