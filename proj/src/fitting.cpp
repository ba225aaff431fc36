#include "phsis/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "phsis/expm.hpp"

namespace phsis {

// ---------------------------------------------------------------------------
// Targets

FitTarget FitTarget::weibull_unit_mean(double alpha) { return weibull(alpha, weibull_unit_mean_scale(alpha)); }

FitTarget FitTarget::weibull(double alpha, double scale) {
  if (!(alpha > 0.0) || !(scale > 0.0)) throw InputError("fit target: weibull shape and scale must be positive");
  FitTarget t;
  t.kind = Kind::weibull;
  t.alpha = alpha;
  t.scale = scale;
  return t;
}

FitTarget FitTarget::from_samples(std::vector<double> samples) {
  for (double s : samples)
    if (!(s > 0.0) || !std::isfinite(s)) throw InputError("fit target: samples must be positive");
  FitTarget t;
  t.kind = Kind::samples;
  t.samples = std::move(samples);
  return t;
}

FitTarget FitTarget::tabulated(std::vector<double> t, std::vector<double> density) {
  if (t.size() != density.size() || t.size() < 2) throw InputError("fit target: malformed density table");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(density[k] >= 0.0)) throw InputError("fit target: tabulated density must be nonnegative");
    if (t[k] < 0.0 || (k > 0 && !(t[k] > t[k - 1]))) throw InputError("fit target: abscissae must increase from >= 0");
  }
  FitTarget f;
  f.kind = Kind::tabulated;
  f.table_t = std::move(t);
  f.table_density = std::move(density);
  return f;
}

double FitTarget::density(double t) const {
  switch (kind) {
    case Kind::weibull:
      return weibull_pdf(alpha, scale, t);
    case Kind::tabulated: {
      if (t < table_t.front() || t > table_t.back()) return 0.0;
      const auto it = std::upper_bound(table_t.begin(), table_t.end(), t);
      if (it == table_t.end()) return table_density.back();
      const std::size_t k = static_cast<std::size_t>(it - table_t.begin());
      const double w = (t - table_t[k - 1]) / (table_t[k] - table_t[k - 1]);
      return (1.0 - w) * table_density[k - 1] + w * table_density[k];
    }
    case Kind::samples:
      break;
  }
  throw InputError("fit target: sample targets have no density");
}

double FitTarget::mean() const {
  switch (kind) {
    case Kind::weibull:
      return scale * std::tgamma(1.0 + 1.0 / alpha);
    case Kind::samples:
      return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    case Kind::tabulated: {
      double mass = 0.0;
      double first = 0.0;
      for (std::size_t k = 1; k < table_t.size(); ++k) {
        const double dt = table_t[k] - table_t[k - 1];
        mass += 0.5 * dt * (table_density[k] + table_density[k - 1]);
        first += 0.5 * dt * (table_t[k] * table_density[k] + table_t[k - 1] * table_density[k - 1]);
      }
      return first / mass;
    }
  }
  return 0.0;
}

double FitTarget::quantile(double q) const {
  switch (kind) {
    case Kind::weibull:
      return weibull_quantile(alpha, scale, q);
    case Kind::samples: {
      std::vector<double> s = samples;
      std::sort(s.begin(), s.end());
      const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size()))) - 1;
      return s[std::min(k, s.size() - 1)];
    }
    case Kind::tabulated: {
      std::vector<double> cum(table_t.size(), 0.0);
      for (std::size_t k = 1; k < table_t.size(); ++k)
        cum[k] = cum[k - 1] + 0.5 * (table_t[k] - table_t[k - 1]) * (table_density[k] + table_density[k - 1]);
      const double goal = q * cum.back();
      const auto it = std::lower_bound(cum.begin(), cum.end(), goal);
      return table_t[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), table_t.size() - 1)];
    }
  }
  return 0.0;
}

std::string FitTarget::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::weibull:
      os << "weibull(alpha=" << alpha << ",b=" << scale << ")";
      break;
    case Kind::samples:
      os << "samples(n=" << samples.size() << ")";
      break;
    case Kind::tabulated:
      os << "tabulated(n=" << table_t.size() << ")";
      break;
  }
  return os.str();
}

void FitConfig::validate() const {
  if (phases < 1) throw InputError("fit: phases must be >= 1");
  if (grid < 100) throw InputError("fit: grid must have at least 100 points");
  if (!(quantile >= 0.99 && quantile < 1.0)) throw InputError("fit: truncation quantile must lie in [0.99, 1)");
  if (!(tolerance > 0.0)) throw InputError("fit: tolerance must be positive");
  if (max_iterations < 1) throw InputError("fit: max_iterations must be >= 1");
  if (max_attempts < 1) throw InputError("fit: max_attempts must be >= 1");
}

// ---------------------------------------------------------------------------
// EM

PhaseType initial_guess(int p, double target_mean, FitInit mode, std::uint64_t seed) {
  RandomStream rng(seed, 0x5EED);
  const double rate = p / target_mean;
  auto jitter = [&] { return 1.0 + 0.05 * (2.0 * rng.uniform() - 1.0); };

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  if (mode == FitInit::erlang_chain) {
    // Coxian-shaped chain: mostly enters phase 1, small exits everywhere.
    phi[0] = 1.0;
    for (int l = 1; l < p; ++l) phi[l] = 0.05 * rng.uniform() / p;
    for (int l = 0; l < p; ++l) {
      const double exit = (l + 1 == p) ? rate * jitter() : 0.05 * rate * rng.uniform();
      const double forward = (l + 1 < p) ? rate * jitter() : 0.0;
      if (l + 1 < p) S(l, l + 1) = forward;
      S(l, l) = -(forward + exit);
    }
  } else {
    for (int l = 0; l < p; ++l) phi[l] = 0.1 + rng.uniform();
    for (int l = 0; l < p; ++l) {
      double out = 0.0;
      for (int m = 0; m < p; ++m) {
        if (m == l) continue;
        S(l, m) = rate * rng.uniform() / p;
        out += S(l, m);
      }
      S(l, l) = -(out + rate * (0.1 + rng.uniform()));
    }
  }
  phi /= phi.sum();
  return PhaseType::make(std::move(phi), std::move(S));
}

namespace {

// (a, b, C) with a' = aS, b' = Sb, C' = SC + v a; a(0) = phi, b(0) = v, C(0) = 0.
// With a censored tail, also (d, D) with d' = Sd, D' = SD + 1 a; d(0) = 1, D(0) = 0.
struct EmState {
  Eigen::RowVectorXd a;
  Eigen::VectorXd b, d;
  Eigen::MatrixXd C, D;

  EmState(int p, bool tail) : a(p), b(p), d(tail ? p : 0), C(p, p), D(tail ? p : 0, tail ? p : 0) {}
};

class EmIntegrator {
 public:
  EmIntegrator(const Eigen::MatrixXd& S, const Eigen::VectorXd& v, bool tail)
      : S_(S), v_(v), tail_(tail), k1_(p(), tail), k2_(p(), tail), k3_(p(), tail), k4_(p(), tail), tmp_(p(), tail) {}

  void derivative(const EmState& y, EmState& out) const {
    out.a.noalias() = y.a * S_;
    out.b.noalias() = S_ * y.b;
    out.C.noalias() = S_ * y.C;
    out.C.noalias() += v_ * y.a;
    if (tail_) {
      out.d.noalias() = S_ * y.d;
      out.D.noalias() = S_ * y.D;
      out.D.rowwise() += y.a;
    }
  }

  void step(EmState& y, double h) {
    derivative(y, k1_);
    axpy(y, 0.5 * h, k1_, tmp_);
    derivative(tmp_, k2_);
    axpy(y, 0.5 * h, k2_, tmp_);
    derivative(tmp_, k3_);
    axpy(y, h, k3_, tmp_);
    derivative(tmp_, k4_);
    const double w = h / 6.0;
    y.a += w * (k1_.a + 2.0 * k2_.a + 2.0 * k3_.a + k4_.a);
    y.b += w * (k1_.b + 2.0 * k2_.b + 2.0 * k3_.b + k4_.b);
    y.C += w * (k1_.C + 2.0 * k2_.C + 2.0 * k3_.C + k4_.C);
    if (tail_) {
      y.d += w * (k1_.d + 2.0 * k2_.d + 2.0 * k3_.d + k4_.d);
      y.D += w * (k1_.D + 2.0 * k2_.D + 2.0 * k3_.D + k4_.D);
    }
  }

 private:
  int p() const { return static_cast<int>(S_.rows()); }

  void axpy(const EmState& y, double h, const EmState& k, EmState& out) const {
    out.a = y.a + h * k.a;
    out.b = y.b + h * k.b;
    out.C = y.C + h * k.C;
    if (tail_) {
      out.d = y.d + h * k.d;
      out.D = y.D + h * k.D;
    }
  }

  const Eigen::MatrixXd& S_;
  const Eigen::VectorXd& v_;
  bool tail_;
  EmState k1_, k2_, k3_, k4_, tmp_;
};

struct Statistics {
  Eigen::VectorXd B, Z, exits;
  Eigen::MatrixXd N;
  double log_likelihood = 0.0;
};

// Number of RK4 substeps over an interval: at least 4, and fine enough that
// h·max|S_ll| <= 0.5 for stability.
int substeps(double length, double max_rate) {
  return std::max(4, static_cast<int>(std::ceil(length * max_rate / 0.5)));
}

// `tail` is the weight of a right-censored observation at points.back().
Statistics e_step(const PhaseType& ph, std::span<const double> points, std::span<const double> weights, double tail) {
  const int p = ph.phases();
  const Eigen::MatrixXd& S = ph.S();
  const Eigen::VectorXd& v = ph.v();
  const double max_rate = S.diagonal().cwiseAbs().maxCoeff();

  Statistics st;
  st.B = Eigen::VectorXd::Zero(p);
  st.Z = Eigen::VectorXd::Zero(p);
  st.exits = Eigen::VectorXd::Zero(p);
  st.N = Eigen::MatrixXd::Zero(p, p);

  const bool censored = tail > 0.0;
  EmState y(p, censored);
  y.a = ph.phi().transpose();
  y.b = v;
  y.C.setZero();
  if (censored) {
    y.d.setOnes();
    y.D.setZero();
  }
  EmIntegrator rk(S, v, censored);

  double t = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double length = points[k] - t;
    if (length > 0.0) {
      const int m = substeps(length, max_rate);
      const double h = length / m;
      for (int s = 0; s < m; ++s) rk.step(y, h);
      t = points[k];
    }
    const double w = weights[k];
    if (w <= 0.0) continue;
    const double f = y.a.dot(v);
    if (!(f > 0.0) || !std::isfinite(f)) {
      st.log_likelihood = std::numeric_limits<double>::quiet_NaN();
      return st;
    }
    const double wf = w / f;
    st.log_likelihood += w * std::log(f);
    st.B += wf * ph.phi().cwiseProduct(y.b);
    st.Z += wf * y.C.diagonal();
    st.exits += wf * y.a.transpose().cwiseProduct(v);
    // N_ij += w S_ij C_ji / f
    st.N.noalias() += wf * S.cwiseProduct(y.C.transpose());
  }
  if (censored) {
    const double survival = y.a.sum();
    if (!(survival > 0.0) || !std::isfinite(survival)) {
      st.log_likelihood = std::numeric_limits<double>::quiet_NaN();
      return st;
    }
    const double wf = tail / survival;
    st.log_likelihood += tail * std::log(survival);
    st.B += wf * ph.phi().cwiseProduct(y.d);
    st.Z += wf * y.D.diagonal();
    st.N.noalias() += wf * S.cwiseProduct(y.D.transpose());
  }
  return st;
}

PhaseType m_step(const Statistics& st) {
  const int p = static_cast<int>(st.B.size());
  Eigen::VectorXd phi = st.B / st.B.sum();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  for (int l = 0; l < p; ++l) {
    if (!(st.Z[l] > 0.0)) throw ConvergenceError("em: phase " + std::to_string(l) + " has zero occupancy", st.Z[l]);
    double out = st.exits[l] / st.Z[l];
    for (int m = 0; m < p; ++m) {
      if (m == l) continue;
      S(l, m) = std::max(0.0, st.N(l, m)) / st.Z[l];
      out += S(l, m);
    }
    S(l, l) = -out;
  }
  return PhaseType::make(std::move(phi), std::move(S));
}

FitResult run_em(PhaseType ph, std::span<const double> points, std::span<const double> weights, double tail,
                 const FitConfig& cfg) {
  std::vector<double> trace;
  double previous = -std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const Statistics st = e_step(ph, points, weights, tail);
    if (!std::isfinite(st.log_likelihood)) throw ConvergenceError("em: non-finite log-likelihood", it);
    trace.push_back(st.log_likelihood);
    if (std::abs(st.log_likelihood - previous) < cfg.tolerance) break;
    previous = st.log_likelihood;
    ph = m_step(st);
  }
  const double ll = trace.back();
  return FitResult{std::move(ph), ll, static_cast<int>(trace.size()), 1, 0.0, 0.0, std::move(trace), {}};
}

}  // namespace

FitResult fit_weighted(std::span<const double> points, std::span<const double> weights, double target_mean,
                       const FitConfig& cfg, double censored_weight) {
  cfg.validate();
  if (points.size() != weights.size() || points.empty()) throw InputError("fit: points and weights disagree");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k] < 0.0 || (k > 0 && points[k] < points[k - 1])) throw InputError("fit: points must be ascending");
    if (weights[k] < 0.0) throw InputError("fit: negative weight");
  }
  if (!(censored_weight >= 0.0 && censored_weight < 1.0)) throw InputError("fit: censored weight must lie in [0, 1)");

  std::string last_error;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    try {
      PhaseType start = initial_guess(cfg.phases, target_mean, cfg.init, cfg.seed + static_cast<std::uint64_t>(attempt));
      FitResult r = run_em(std::move(start), points, weights, censored_weight, cfg);
      r.attempts = attempt + 1;
      r.mean_relative_error = std::abs(mean(r.ph) - target_mean) / target_mean;
      return r;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw ConvergenceError("fit: failed after " + std::to_string(cfg.max_attempts) + " attempts: " + last_error,
                         std::numeric_limits<double>::quiet_NaN());
}

FitResult fit_density(const FitTarget& target, const FitConfig& cfg) {
  cfg.validate();
  if (target.kind == FitTarget::Kind::samples) return fit_samples(target.samples, cfg);

  const double t_max = target.quantile(cfg.quantile);
  const bool singular_origin = target.kind == FitTarget::Kind::weibull && target.alpha < 1.0;
  const double t_min = singular_origin ? t_max / cfg.grid : 0.0;
  const int n = cfg.grid;
  const double dt = (t_max - t_min) / (n - 1);

  std::vector<double> points(static_cast<std::size_t>(n));
  std::vector<double> density(points.size());
  std::vector<double> weights(points.size());
  for (int k = 0; k < n; ++k) {
    points[k] = t_min + k * dt;
    density[k] = target.density(points[k]);
    weights[k] = density[k] * dt * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InputError("fit: target density has no mass on the grid");
  // Mass beyond the truncation point enters as one right-censored observation,
  // so the truncated tail does not bias the fitted mean downwards.
  const double tail = 1.0 - cfg.quantile;
  for (double& w : weights) w *= cfg.quantile / total;

  FitResult r = fit_weighted(points, weights, target.mean(), cfg, tail);

  // Fitted density on the grid by exact propagation of phi^T exp(S t).
  const Eigen::MatrixXd step = expm(r.ph.S() * dt);
  Eigen::RowVectorXd a = r.ph.phi().transpose() * expm(r.ph.S() * t_min);
  double l1 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double fitted = a.dot(r.ph.v());
    l1 += std::abs(density[k] - fitted) * dt * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
    a = a * step;
  }
  r.l1_distance = l1;
  r.grid = std::move(points);
  return r;
}

FitResult fit_samples(std::span<const double> samples, const FitConfig& cfg) {
  if (samples.size() < 10) throw InputError("fit: need at least 10 samples");
  std::vector<double> points(samples.begin(), samples.end());
  for (double s : points)
    if (!(s > 0.0) || !std::isfinite(s)) throw InputError("fit: samples must be positive and finite");
  std::sort(points.begin(), points.end());
  const std::vector<double> weights(points.size(), 1.0 / static_cast<double>(points.size()));
  const double sample_mean = std::accumulate(points.begin(), points.end(), 0.0) / static_cast<double>(points.size());
  FitResult r = fit_weighted(points, weights, sample_mean, cfg);
  r.l1_distance = std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace phsis
