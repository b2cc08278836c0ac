#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "metriclearn/model.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

enum class ConstraintKind { Psd, Nuclear, L12 };

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::Psd;
  double lambda = 0.0;               // nuclear / l12 radius
  std::optional<double> gamma;       // diagnostic cap on max_t <M_t,K>

  static ConstraintSpec PsdOnly() { return {ConstraintKind::Psd, 0.0, {}}; }
  static ConstraintSpec NuclearBall(double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("ConstraintSpec: lambda must be > 0");
    return {ConstraintKind::Nuclear, lambda, {}};
  }
  static ConstraintSpec L12Ball(double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("ConstraintSpec: lambda must be > 0");
    return {ConstraintKind::L12, lambda, {}};
  }
};

// Euclidean projection onto the PSD cone: clamp negative eigenvalues.
inline Matrix project_psd(const Matrix& s) {
  require_symmetric(s, "project_psd");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("project_psd: eigendecomposition failed");
  const Vector w = es.eigenvalues().cwiseMax(0.0);
  Matrix out = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

namespace detail {

// Project v >= 0 onto {w >= 0, sum w <= cap}. If the clamped vector already
// fits it is returned unchanged; otherwise this is the simplex projection.
inline Vector project_nonneg_sum_cap(Vector v, double cap) {
  v = v.cwiseMax(0.0);
  if (v.sum() <= cap) return v;
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    cum += sorted[r];
    const double cand = (cum - cap) / static_cast<double>(r + 1);
    if (r + 1 == sorted.size() || sorted[r + 1] <= cand) {
      tau = cand;
      break;
    }
  }
  return (v.array() - tau).cwiseMax(0.0);
}

}  // namespace detail

// Exact Euclidean projection onto PSD intersect {||.||_* <= lambda}:
// the eigenvalues move, the eigenvectors stay.
inline Matrix project_nuclear_psd(const Matrix& s, double lambda) {
  require_symmetric(s, "project_nuclear_psd");
  if (lambda <= 0.0) throw std::invalid_argument("project_nuclear_psd: lambda must be > 0");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("project_nuclear_psd: eigendecomposition failed");
  const Vector w = detail::project_nonneg_sum_cap(es.eigenvalues(), lambda);
  Matrix out = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Projection onto the l_{1,2} ball: scale each row by the factor obtained
// from projecting the row-norm vector onto the l1 ball, then symmetrize.
inline Matrix project_l12_ball(const Matrix& s, double lambda) {
  Vector norms(s.rows());
  for (Eigen::Index r = 0; r < s.rows(); ++r) norms(r) = s.row(r).norm();
  if (norms.sum() <= lambda) return s;
  const Vector target = detail::project_nonneg_sum_cap(norms, lambda);
  Matrix out = s;
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    out.row(r) *= norms(r) > 0.0 ? target(r) / norms(r) : 0.0;
  return 0.5 * (out + out.transpose());
}

struct DykstraResult {
  Matrix value;
  bool converged = false;
  int iterations = 0;
};

// Dykstra alternating projections between the PSD cone and the l_{1,2}
// ball. Converges to the Euclidean projection onto the intersection.
inline DykstraResult project_l12_psd(const Matrix& s, double lambda,
                                     int max_iters = 200, double tol = 1e-8) {
  require_symmetric(s, "project_l12_psd");
  if (lambda <= 0.0) throw std::invalid_argument("project_l12_psd: lambda must be > 0");
  Matrix x = s;
  Matrix p = Matrix::Zero(s.rows(), s.cols());
  Matrix q = Matrix::Zero(s.rows(), s.cols());
  DykstraResult out;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix y = project_psd(x + p);
    p = x + p - y;
    const Matrix x_next = project_l12_ball(y + q, lambda);
    q = y + q - x_next;
    const double delta = (x_next - x).norm();
    x = x_next;
    out.iterations = it + 1;
    if (delta < tol) {
      out.converged = true;
      break;
    }
  }
  out.value = 0.5 * (x + x.transpose());
  return out;
}

inline double nuclear_norm_psd(const Matrix& k) { return k.trace(); }

inline double l12_norm(const Matrix& k) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < k.rows(); ++r) sum += k.row(r).norm();
  return sum;
}

struct StepRule {
  bool backtracking = true;
  double eta = 1.0;     // fixed step, or initial step for backtracking
  double beta = 0.5;    // backtracking shrink factor
  double c = 1e-4;      // sufficient-decrease constant
};

struct FitOptions {
  int max_iters = 500;
  StepRule step;
  double tol = 1e-6;          // relative objective change over a 10-iter window
  int tol_window = 10;
  int dykstra_iters = 200;
  double dykstra_tol = 1e-8;
  std::uint64_t seed = 0;     // reserved; initialization is deterministic
};

struct FitReport {
  Matrix khat;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  double min_eigenvalue = 0.0;
  double norm_value = 0.0;      // ||K||_* or ||K||_{1,2} for the active constraint
  double norm_slack = 0.0;      // lambda - norm_value (0 for psd-only)
  double max_margin = 0.0;      // observed max_t <M_t, Khat> over the sample
  double pg_mapping_norm = 0.0; // ||K - P(K - eta grad)||_F / eta at the solution
  bool gamma_exceeded = false;
};

namespace detail {

inline Matrix apply_projection(const Matrix& s, const ConstraintSpec& cons,
                               const FitOptions& opts) {
  switch (cons.kind) {
    case ConstraintKind::Psd:
      return project_psd(s);
    case ConstraintKind::Nuclear:
      return project_nuclear_psd(s, cons.lambda);
    case ConstraintKind::L12:
      return project_l12_psd(s, cons.lambda, opts.dykstra_iters, opts.dykstra_tol).value;
  }
  return s;
}

}  // namespace detail

// Constrained ERM by projected (sub)gradient descent with backtracking.
// Deterministic given inputs and options; returns the best iterate seen.
inline FitReport fit_erm(std::span<const LabeledTriplet> samples, const PointSet& x,
                         const ConstraintSpec& cons, const LossFunction& loss,
                         const FitOptions& opts = FitOptions{}) {
  if (samples.empty()) throw std::invalid_argument("fit_erm: empty sample set");
  if (!loss.differentiable())
    throw std::invalid_argument("fit_erm: zero-one loss cannot be optimized");
  const Eigen::Index p = x.p();

  Matrix k;
  if (cons.kind == ConstraintKind::Psd) {
    k = Matrix::Identity(p, p);
  } else {
    const double c0 = std::min(cons.lambda, static_cast<double>(p)) / static_cast<double>(p);
    k = detail::apply_projection(c0 * Matrix::Identity(p, p), cons, opts);
  }

  FitReport report;
  Matrix grad;
  double f = risk_value_and_gradient(k, x, samples, loss, grad);
  if (!std::isfinite(f)) throw std::runtime_error("fit_erm: non-finite initial objective");
  report.objective_trace.push_back(f);

  Matrix best_k = k;
  double best_f = f;
  double eta = opts.step.eta;
  double last_eta = eta;

  for (int it = 0; it < opts.max_iters; ++it) {
    Matrix cand;
    double f_cand = 0.0;
    if (opts.step.backtracking) {
      bool accepted = false;
      double step = std::min(eta * 2.0, 1e6);  // tentative growth, then shrink
      for (int bt = 0; bt < 60; ++bt) {
        cand = detail::apply_projection(k - step * grad, cons, opts);
        f_cand = empirical_risk(cand, x, samples, loss).value;
        const double decrease = grad.cwiseProduct(cand - k).sum();
        if (f_cand <= f + opts.step.c * decrease && f_cand <= f) {
          accepted = true;
          break;
        }
        step *= opts.step.beta;
      }
      if (!accepted || f_cand > f) {
        // no admissible step; keep the current iterate
        cand = k;
        f_cand = f;
      }
      eta = step;
    } else {
      cand = detail::apply_projection(k - opts.step.eta * grad, cons, opts);
      f_cand = empirical_risk(cand, x, samples, loss).value;
      eta = opts.step.eta;
    }
    if (!std::isfinite(f_cand)) throw std::runtime_error("fit_erm: non-finite objective");

    k = cand;
    f = f_cand;
    last_eta = eta;
    report.objective_trace.push_back(f);
    report.iterations = it + 1;
    if (f < best_f) {
      best_f = f;
      best_k = k;
    }

    const int w = opts.tol_window;
    const auto& tr = report.objective_trace;
    if (static_cast<int>(tr.size()) > w) {
      const double prev = tr[tr.size() - 1 - static_cast<std::size_t>(w)];
      const double denom = std::max(std::abs(prev), 1e-12);
      if (std::abs(prev - f) / denom < opts.tol) {
        report.converged = true;
        break;
      }
    }
    if (it + 1 < opts.max_iters)
      f = risk_value_and_gradient(k, x, samples, loss, grad);
  }

  report.khat = best_k;

  // diagnostics at the returned point
  Matrix g_best;
  risk_value_and_gradient(best_k, x, samples, loss, g_best);
  const Matrix mapped = detail::apply_projection(best_k - last_eta * g_best, cons, opts);
  report.pg_mapping_norm = (best_k - mapped).norm() / last_eta;

  Eigen::SelfAdjointEigenSolver<Matrix> es(best_k, Eigen::EigenvaluesOnly);
  report.min_eigenvalue = es.eigenvalues().minCoeff();
  if (cons.kind == ConstraintKind::Nuclear) {
    report.norm_value = nuclear_norm_psd(best_k);
    report.norm_slack = cons.lambda - report.norm_value;
  } else if (cons.kind == ConstraintKind::L12) {
    report.norm_value = l12_norm(best_k);
    report.norm_slack = cons.lambda - report.norm_value;
  }

  const Matrix gk = gram_of(x, best_k);
  double max_margin = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) max_margin = std::max(max_margin, l_value(gk, s.t));
  report.max_margin = max_margin;
  if (cons.gamma && max_margin > *cons.gamma) report.gamma_exceeded = true;
  return report;
}

}  // namespace metriclearn
