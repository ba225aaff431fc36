#include "phsis/phase_type.hpp"

#include <cmath>
#include <limits>

#include "phsis/expm.hpp"

namespace phsis {

namespace {

constexpr double kSimplexTol = 1e-12;

}  // namespace

PhaseType PhaseType::make(Eigen::VectorXd phi, Eigen::MatrixXd S) {
  const Eigen::Index p = phi.size();
  if (p < 1) throw InputError("phase-type: need at least one phase");
  if (S.rows() != p || S.cols() != p)
    throw InputError("phase-type: dimension mismatch between phi (" + std::to_string(p) + ") and S (" +
                     std::to_string(S.rows()) + "x" + std::to_string(S.cols()) + ")");
  if (!phi.allFinite() || !S.allFinite()) throw InputError("phase-type: non-finite entry");
  if ((phi.array() < 0.0).any()) throw InputError("phase-type: phi has a negative entry");
  if (std::abs(phi.sum() - 1.0) > kSimplexTol) throw InputError("phase-type: phi does not sum to one");

  double scale = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) {
    for (Eigen::Index m = 0; m < p; ++m) {
      if (l != m && S(l, m) < 0.0) throw InputError("phase-type: off-diagonal negative entry in S");
    }
    scale = std::max(scale, std::abs(S(l, l)));
  }

  Eigen::VectorXd v = -S.rowwise().sum();
  const double row_tol = kSimplexTol * std::max(1.0, scale);
  for (Eigen::Index l = 0; l < p; ++l) {
    if (v[l] < -row_tol) throw InputError("phase-type: S has a positive row sum");
    if (v[l] < 0.0) v[l] = 0.0;
  }
  if (!(v.array() > 0.0).any()) throw InputError("phase-type: no strictly negative row sum in S");

  // Metzler S is Hurwitz iff S x = -1 has a nonnegative finite solution.
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible()) throw InputError("phase-type: S is singular");
  const Eigen::VectorXd x = lu.solve(Eigen::VectorXd::Constant(p, -1.0));
  if (!x.allFinite() || (x.array() <= 0.0).any()) throw InputError("phase-type: S is not Hurwitz");

  PhaseType ph;
  ph.phi_ = std::move(phi);
  ph.S_ = std::move(S);
  ph.v_ = std::move(v);

  ph.initial_cdf_.resize(static_cast<std::size_t>(p));
  double acc = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) ph.initial_cdf_[l] = (acc += ph.phi_[l]);

  ph.transition_cdf_.resize(static_cast<std::size_t>(p * (p + 1)));
  for (Eigen::Index l = 0; l < p; ++l) {
    double* row = ph.transition_cdf_.data() + l * (p + 1);
    acc = 0.0;
    for (Eigen::Index m = 0; m < p; ++m) row[m] = (acc += (m == l ? 0.0 : ph.S_(l, m)));
    row[p] = acc + ph.v_[l];
  }
  return ph;
}

PhaseType PhaseType::exponential(double rate) {
  if (!(rate > 0.0)) throw InputError("exponential: rate must be positive");
  return make(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(1, 1, -rate));
}

PhaseType PhaseType::erlang(int k, double rate) {
  if (k < 1) throw InputError("erlang: need at least one phase");
  if (!(rate > 0.0)) throw InputError("erlang: rate must be positive");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(k);
  phi[0] = 1.0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
  for (int l = 0; l < k; ++l) {
    S(l, l) = -rate;
    if (l + 1 < k) S(l, l + 1) = rate;
  }
  return make(std::move(phi), std::move(S));
}

double mean(const PhaseType& ph) {
  const Eigen::VectorXd x = ph.S().fullPivLu().solve(Eigen::VectorXd::Constant(ph.phases(), -1.0));
  return ph.phi().dot(x);
}

double pdf(const PhaseType& ph, double t) {
  if (t < 0.0) return 0.0;
  return ph.phi().dot(expm(ph.S() * t) * ph.v());
}

double cdf(const PhaseType& ph, double t) {
  if (t <= 0.0) return 0.0;
  const double survival = ph.phi().dot(expm(ph.S() * t).rowwise().sum());
  return std::clamp(1.0 - survival, 0.0, 1.0);
}

double laplace(const PhaseType& ph, double s) {
  const int p = ph.phases();
  const Eigen::MatrixXd shifted = s * Eigen::MatrixXd::Identity(p, p) - ph.S();
  return ph.phi().dot(shifted.partialPivLu().solve(ph.v()));
}

int sample_initial_phase(const PhaseType& ph, RandomStream& rng) {
  return static_cast<int>(rng.categorical(ph.initial_cdf()));
}

double sample(const PhaseType& ph, RandomStream& rng) {
  const int p = ph.phases();
  int phase = sample_initial_phase(ph, rng);
  double t = 0.0;
  while (true) {
    const auto row = ph.transition_cdf(phase);
    t += rng.exponential(row.back());
    const auto next = static_cast<int>(rng.categorical(row));
    if (next == p) return t;
    phase = next;
  }
}

double quantile_horizon(const PhaseType& ph, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InputError("quantile_horizon: q must be in (0,1)");
  double hi = mean(ph);
  int doublings = 0;
  while (cdf(ph, hi) < q) {
    hi *= 2.0;
    if (++doublings > 200) throw ConvergenceError("quantile_horizon: no bracket", hi);
  }
  double lo = 0.0;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (cdf(ph, mid) >= q ? hi : lo) = mid;
  }
  return hi;
}

double weibull_pdf(double alpha, double b, double t) {
  if (!(alpha > 0.0) || !(b > 0.0)) throw InputError("weibull: shape and scale must be positive");
  if (t < 0.0) throw InputError("weibull: negative time");
  if (t == 0.0) {
    if (alpha < 1.0) throw InputError("weibull: density is unbounded at t=0 for shape < 1");
    return alpha == 1.0 ? 1.0 / b : 0.0;
  }
  const double z = t / b;
  return (alpha / b) * std::pow(z, alpha - 1.0) * std::exp(-std::pow(z, alpha));
}

double weibull_cdf(double alpha, double b, double t) {
  if (t <= 0.0) return 0.0;
  return -std::expm1(-std::pow(t / b, alpha));
}

double weibull_quantile(double alpha, double b, double q) {
  return b * std::pow(-std::log1p(-q), 1.0 / alpha);
}

double weibull_unit_mean_scale(double alpha) { return 1.0 / std::tgamma(1.0 + 1.0 / alpha); }

}  // namespace phsis
