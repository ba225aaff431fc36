#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phsis/phase_type.hpp"

namespace phsis {

/// Distribution to be approximated by a phase-type fit.
struct FitTarget {
  enum class Kind { weibull, samples, tabulated };

  Kind kind = Kind::weibull;
  double alpha = 1.0;  // weibull shape
  double scale = 1.0;  // weibull scale b
  std::vector<double> samples;
  std::vector<double> table_t;  // tabulated density abscissae, increasing
  std::vector<double> table_density;

  /// Weibull with the scale that gives unit mean.
  static FitTarget weibull_unit_mean(double alpha);
  static FitTarget weibull(double alpha, double scale);
  static FitTarget from_samples(std::vector<double> samples);
  /// Piecewise-linear density through (t, g(t)); zero outside the table.
  static FitTarget tabulated(std::vector<double> t, std::vector<double> density);

  double density(double t) const;
  double mean() const;
  double quantile(double q) const;
  std::string describe() const;
};

enum class FitInit { erlang_chain, random };

struct FitConfig {
  int phases = 10;
  int grid = 400;
  double quantile = 0.9999;
  int max_iterations = 1000;
  double tolerance = 1e-7;
  FitInit init = FitInit::erlang_chain;
  std::uint64_t seed = 1;
  int max_attempts = 5;

  void validate() const;
};

struct FitResult {
  PhaseType ph;
  double log_likelihood;
  int iterations;
  int attempts;
  double l1_distance;          // trapezoidal L1 distance on the fitting grid
  double mean_relative_error;  // |mean(fit) - mean(target)| / mean(target)
  std::vector<double> log_likelihood_trace;
  std::vector<double> grid;  // observation points (density targets only)
};

/// EM fit (Asmussen-Nerman-Olsson) to a density discretized on a uniform
/// grid over [t_min, T_q] with trapezoidal weights. Sample targets are
/// forwarded to fit_samples.
FitResult fit_density(const FitTarget& target, const FitConfig& cfg);

/// EM fit with unit-weight observations. Needs at least 10 positive samples.
FitResult fit_samples(std::span<const double> samples, const FitConfig& cfg);

/// Weighted-observation EM core. `points` ascending, nonnegative weights;
/// zero-weight points are skipped. `censored_weight` is the mass of a
/// right-censored observation "X > points.back()"; together with the point
/// weights it should sum to one.
FitResult fit_weighted(std::span<const double> points, std::span<const double> weights, double target_mean,
                       const FitConfig& cfg, double censored_weight = 0.0);

/// Initial guess used by the EM; exposed for tests.
PhaseType initial_guess(int phases, double target_mean, FitInit mode, std::uint64_t seed);

}  // namespace phsis
