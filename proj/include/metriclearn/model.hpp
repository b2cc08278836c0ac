#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "metriclearn/linops.hpp"
#include "metriclearn/rng.hpp"
#include "metriclearn/triplet.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

// Overflow-safe log(1 + e^u).
inline double softplus(double u) {
  if (u > 30.0) return u;
  if (u < -30.0) return std::exp(u);
  return std::log1p(std::exp(u));
}

// Decreasing logistic link: f(x) = 1/(1 + e^{s x}) = P(y = -1 | margin x).
// f(0) = 1/2 and f is small when x is large, i.e. when i is closer to k.
struct LinkFunction {
  double scale = 1.0;

  double eval(double x) const {
    const double u = scale * x;
    if (u >= 0.0) {
      const double e = std::exp(-u);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
  }

  // f'(x) = -s f(x)(1 - f(x)); always negative.
  double deriv(double x) const {
    const double f = eval(x);
    return -scale * f * (1.0 - f);
  }

  // inf |f'| over [-gamma, gamma]; attained at the endpoints.
  double c_f(double gamma) const {
    const double f = eval(std::abs(gamma));
    return scale * f * (1.0 - f);
  }
};

enum class LossKind { LogisticLog, Hinge, ZeroOne };

// Loss of the signed margin u = y <M_t, K>. Logistic and hinge are convex
// and 1-Lipschitz at scale 1; zero-one is evaluation-only.
struct LossFunction {
  LossKind kind = LossKind::LogisticLog;
  double scale = 1.0;  // logistic only; matches the link scale

  double eval(double u) const {
    switch (kind) {
      case LossKind::LogisticLog:
        return softplus(-scale * u);
      case LossKind::Hinge:
        return u < 1.0 ? 1.0 - u : 0.0;
      case LossKind::ZeroOne:
        return u > 0.0 ? 0.0 : 1.0;
    }
    return 0.0;
  }

  // Subderivative; at the hinge kink we take 0.
  double deriv(double u) const {
    switch (kind) {
      case LossKind::LogisticLog: {
        const double su = scale * u;
        if (su > 30.0) return -scale * std::exp(-su);
        return -scale / (1.0 + std::exp(su));
      }
      case LossKind::Hinge:
        return u < 1.0 ? -1.0 : 0.0;
      case LossKind::ZeroOne:
        throw std::invalid_argument("loss: zero-one loss has no gradient");
    }
    return 0.0;
  }

  bool differentiable() const { return kind != LossKind::ZeroOne; }
};

struct RiskEstimate {
  double value = 0.0;
  double stderr_ = 0.0;  // Monte Carlo standard error; 0 for exact sums
  std::int64_t n_terms = 0;
};

inline Matrix gram_of(const PointSet& x, const Matrix& k) {
  return x.data.transpose() * k * x.data;
}

// (1/|S|) sum of per-sample losses, with the sample standard error.
inline RiskEstimate empirical_risk(const Matrix& k, const PointSet& x,
                                   std::span<const LabeledTriplet> samples,
                                   const LossFunction& loss) {
  if (samples.empty()) throw std::invalid_argument("empirical_risk: empty sample set");
  const Matrix g = gram_of(x, k);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& s : samples) {
    const double v = loss.eval(s.y * l_value(g, s.t));
    sum += v;
    sumsq += v * v;
  }
  const double m = static_cast<double>(samples.size());
  RiskEstimate out;
  out.value = sum / m;
  out.n_terms = static_cast<std::int64_t>(samples.size());
  if (samples.size() > 1) {
    const double var = std::max(0.0, (sumsq - sum * sum / m) / (m - 1.0));
    out.stderr_ = std::sqrt(var / m);
  }
  return out;
}

// (1/|S|) sum ell'(y_t <M_t,K>) y_t M_t, accumulated on the n x n
// coefficient matrix and mapped back through X once.
inline Matrix risk_gradient(const Matrix& k, const PointSet& x,
                            std::span<const LabeledTriplet> samples,
                            const LossFunction& loss) {
  if (samples.empty()) throw std::invalid_argument("risk_gradient: empty sample set");
  if (!loss.differentiable())
    throw std::invalid_argument("risk_gradient: zero-one loss unsupported");
  const Matrix g = gram_of(x, k);
  const double inv_m = 1.0 / static_cast<double>(samples.size());
  Matrix a = Matrix::Zero(x.n(), x.n());
  for (const auto& s : samples) {
    const double c = loss.deriv(s.y * l_value(g, s.t)) * s.y * inv_m;
    a(s.t.i, s.t.k) += c;
    a(s.t.k, s.t.i) += c;
    a(s.t.i, s.t.j) -= c;
    a(s.t.j, s.t.i) -= c;
    a(s.t.j, s.t.j) += c;
    a(s.t.k, s.t.k) -= c;
  }
  return x.data * a * x.data.transpose();
}

// Fused objective + gradient sharing one Gram evaluation per iterate.
inline double risk_value_and_gradient(const Matrix& k, const PointSet& x,
                                      std::span<const LabeledTriplet> samples,
                                      const LossFunction& loss, Matrix& grad) {
  if (samples.empty()) throw std::invalid_argument("risk: empty sample set");
  const Matrix g = gram_of(x, k);
  const double inv_m = 1.0 / static_cast<double>(samples.size());
  Matrix a = Matrix::Zero(x.n(), x.n());
  double sum = 0.0;
  for (const auto& s : samples) {
    const double u = s.y * l_value(g, s.t);
    sum += loss.eval(u);
    const double c = loss.deriv(u) * s.y * inv_m;
    a(s.t.i, s.t.k) += c;
    a(s.t.k, s.t.i) += c;
    a(s.t.i, s.t.j) -= c;
    a(s.t.j, s.t.i) -= c;
    a(s.t.j, s.t.j) += c;
    a(s.t.k, s.t.k) -= c;
  }
  grad = x.data * a * x.data.transpose();
  return sum * inv_m;
}

// How the true risk expectation over T is evaluated.
struct EvalSet {
  bool full = true;
  std::int64_t mc_size = 0;
  std::uint64_t seed = 0;

  static EvalSet Full() { return EvalSet{}; }
  static EvalSet MonteCarlo(std::int64_t m, std::uint64_t seed) {
    return EvalSet{false, m, seed};
  }
};

namespace detail {

// Accumulate g(t) over the evaluation set; exact mean over T, or an
// unbiased Monte Carlo mean with standard error.
template <typename Fn>
RiskEstimate expect_over_triplets(std::int64_t n, const EvalSet& eval, Fn&& term) {
  RiskEstimate out;
  if (eval.full) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (const Triplet& t : TripletRange(n)) {
      sum += term(t);
      ++count;
    }
    out.value = sum / static_cast<double>(count);
    out.n_terms = count;
    return out;
  }
  RngStream rng(eval.seed, 0, "true-risk-eval");
  const std::uint64_t total = static_cast<std::uint64_t>(triplet_count(n));
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t s = 0; s < eval.mc_size; ++s) {
    const Triplet t = triplet_unrank(n, static_cast<std::int64_t>(rng.uniform_int(total)));
    const double v = term(t);
    sum += v;
    sumsq += v * v;
  }
  const double m = static_cast<double>(eval.mc_size);
  out.value = sum / m;
  out.n_terms = eval.mc_size;
  if (eval.mc_size > 1) {
    const double var = std::max(0.0, (sumsq - sum * sum / m) / (m - 1.0));
    out.stderr_ = std::sqrt(var / m);
  }
  return out;
}

}  // namespace detail

// R(K) = E[ loss(y <M_t,K>) ] with y drawn from the link at K*:
// per triplet, f(m*) loss(-m) + (1 - f(m*)) loss(+m).
inline RiskEstimate true_risk(const Matrix& k, const Matrix& kstar, const PointSet& x,
                              const LinkFunction& link, const LossFunction& loss,
                              const EvalSet& eval = EvalSet::Full()) {
  const Matrix g = gram_of(x, k);
  const Matrix gstar = gram_of(x, kstar);
  return detail::expect_over_triplets(x.n(), eval, [&](const Triplet& t) {
    const double m = l_value(g, t);
    const double q = link.eval(l_value(gstar, t));
    return q * loss.eval(-m) + (1.0 - q) * loss.eval(m);
  });
}

inline double kl_bernoulli(double z, double y) {
  if (z <= 0.0 || z >= 1.0 || y <= 0.0 || y >= 1.0)
    throw std::invalid_argument("kl_bernoulli: arguments must lie in (0,1)");
  return z * std::log(z / y) + (1.0 - z) * std::log((1.0 - z) / (1.0 - y));
}

// R(K) - R(K*) under the link's log loss:
// (1/|T|) sum KL(f(<M_t,K*>) || f(<M_t,K>)). Nonnegative.
inline RiskEstimate excess_risk_kl(const Matrix& k, const Matrix& kstar,
                                   const PointSet& x, const LinkFunction& link,
                                   const EvalSet& eval = EvalSet::Full()) {
  const Matrix g = gram_of(x, k);
  const Matrix gstar = gram_of(x, kstar);
  return detail::expect_over_triplets(x.n(), eval, [&](const Triplet& t) {
    return kl_bernoulli(link.eval(l_value(gstar, t)), link.eval(l_value(g, t)));
  });
}

}  // namespace metriclearn
