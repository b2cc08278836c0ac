#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "metriclearn/linops.hpp"
#include "metriclearn/model.hpp"
#include "metriclearn/triplet.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

struct BoundInputs {
  double lambda = 1.0;
  double gamma = 1.0;
  double lipschitz = 1.0;
  double xxt_opnorm = 1.0;  // ||X X^T||
  double n = 3.0;
  double p = 2.0;
  double samples = 1.0;
  double delta = 0.05;
  double c1 = 1.0;               // absolute constant from the packing set; configurable
  LinkFunction link{};           // used by the lower bound
};

struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double margin = 0.0;

  static CheckReport make(std::string name, double lhs, double rhs) {
    CheckReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.satisfied = lhs <= rhs + 1e-12;
    r.margin = rhs - lhs;
    return r;
  }
};

// Generalization error upper bound:
// 4L(sqrt(140 lambda^2 (||XX^T||/n) log p / |S|) + 2 log p / |S|)
//   + sqrt(2 L^2 gamma^2 log(2/delta) / |S|).
inline double excess_risk_upper_bound(const BoundInputs& in) {
  const double s = in.samples;
  const double logp = std::log(in.p);
  const double ratio = in.xxt_opnorm / in.n;
  const double rad = std::sqrt(140.0 * in.lambda * in.lambda * ratio * logp / s);
  const double tail = std::sqrt(2.0 * in.lipschitz * in.lipschitz * in.gamma * in.gamma *
                                std::log(2.0 / in.delta) / s);
  return 4.0 * in.lipschitz * (rad + 2.0 * logp / s) + tail;
}

// inf of f(x)(1-f(x)) over |x| <= gamma; f(1-f) peaks at x = 0, so the
// infimum sits at the endpoints.
inline double logistic_inf_var(const LinkFunction& link, double gamma) {
  const double f = link.eval(std::abs(gamma));
  return f * (1.0 - f);
}

// sup of f'(x)^2 over |x| <= gamma; |f'| peaks at x = 0 with value s/4.
inline double logistic_sup_deriv_sq(const LinkFunction& link, double /*gamma*/) {
  const double m = link.scale / 4.0;
  return m * m;
}

// Minimax lower bound:
// C sqrt((C1^3 ln 4 / 2) lambda^2 (||XX^T||/n) / |S|),
// C = (C_f^2 / 32) sqrt(inf f(1-f) / sup f'^2), C_f = inf |f'| on [-g, g].
inline double minimax_lower_bound(const BoundInputs& in) {
  const double cf = in.link.c_f(in.gamma);
  const double c = cf * cf / 32.0 *
                   std::sqrt(logistic_inf_var(in.link, in.gamma) /
                             logistic_sup_deriv_sq(in.link, in.gamma));
  const double ratio = in.xxt_opnorm / in.n;
  return c * std::sqrt(in.c1 * in.c1 * in.c1 * std::log(4.0) / 2.0 * in.lambda * in.lambda *
                       ratio / in.samples);
}

inline double bound_ratio(const BoundInputs& in) {
  return excess_risk_upper_bound(in) / minimax_lower_bound(in);
}

// Second-moment bound: (1/|T|) ||sum_t M_t^2|| <= 70 ||XX^T|| / n, under
// the normalization max_i ||x_i||^2 = 1 (the input is rescaled to it).
inline CheckReport second_moment_check(const PointSet& x, std::int64_t max_n = 40) {
  if (x.n() > max_n)
    throw std::invalid_argument(
        "second_moment_check: n too large for the exact sum over T; subsample first");
  double max_sq = 0.0;
  for (Eigen::Index c = 0; c < x.n(); ++c)
    max_sq = std::max(max_sq, x.data.col(c).squaredNorm());
  PointSet xs(x.data / std::sqrt(max_sq), x.centered);

  Matrix acc = Matrix::Zero(xs.p(), xs.p());
  for (const Triplet& t : TripletRange(xs.n())) {
    const Matrix m = m_matrix(xs, t);
    acc += m * m;
  }
  acc /= static_cast<double>(triplet_count(xs.n()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(acc, Eigen::EigenvaluesOnly);
  const double lhs = es.eigenvalues().cwiseAbs().maxCoeff();

  const Matrix xxt = xs.data * xs.data.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es2(xxt, Eigen::EigenvaluesOnly);
  const double rhs = 70.0 * es2.eigenvalues().cwiseAbs().maxCoeff() / static_cast<double>(xs.n());
  return CheckReport::make("second-moment", lhs, rhs);
}

struct KlSandwich {
  CheckReport lower;  // 2(z-y)^2 <= KL(z||y)
  CheckReport upper;  // KL(z||y) <= (z-y)^2 / (2 inf x(1-x)), inf over [min,max]
  double kl = 0.0;
};

inline KlSandwich kl_square_bounds(double z, double y) {
  if (z <= 0.0 || z >= 1.0 || y <= 0.0 || y >= 1.0)
    throw std::invalid_argument("kl_square_bounds: arguments must lie in (0,1)");
  KlSandwich out;
  out.kl = kl_bernoulli(z, y);
  const double sq = (z - y) * (z - y);
  out.lower = CheckReport::make("kl-lower", 2.0 * sq, out.kl);
  // x(1-x) over the interval between y and z is minimized at the endpoint
  // farther from 1/2
  const double lo = std::min(y, z), hi = std::max(y, z);
  const double endpoint = std::abs(lo - 0.5) > std::abs(hi - 0.5) ? lo : hi;
  const double inf_var = endpoint * (1.0 - endpoint);
  out.upper = CheckReport::make("kl-upper", out.kl, sq / (2.0 * inf_var));
  return out;
}

// Risk-to-operator bound: (2 C_f^2 / |T|) ||M(K) - M(K*)||^2 <= R(K) - R(K*),
// with gamma taken as the observed max margin over both matrices.
inline CheckReport risk_to_m_check(const Matrix& k, const Matrix& kstar,
                                   const PointSet& x, const LinkFunction& link) {
  if (x.n() > 20)
    throw std::invalid_argument("risk_to_m_check: exact sums limited to n <= 20");
  const Matrix g = gram_of(x, k);
  const Matrix gstar = gram_of(x, kstar);
  double gamma = 0.0, sq_sum = 0.0;
  for (const Triplet& t : TripletRange(x.n())) {
    const double m = l_value(g, t);
    const double ms = l_value(gstar, t);
    gamma = std::max({gamma, std::abs(m), std::abs(ms)});
    sq_sum += (m - ms) * (m - ms);
  }
  const double cf = link.c_f(gamma);
  const double lhs = 2.0 * cf * cf * sq_sum / static_cast<double>(triplet_count(x.n()));
  LossFunction log_loss{LossKind::LogisticLog, link.scale};
  const double rhs = true_risk(k, kstar, x, link, log_loss).value -
                     true_risk(kstar, kstar, x, link, log_loss).value;
  return CheckReport::make("risk-to-m", lhs, rhs);
}

// ||K||_* <= ||K||_{1,2} for PSD K.
inline CheckReport l12_dominates_nuclear_check(const Matrix& k) {
  require_symmetric(k, "l12_dominates_nuclear_check");
  Eigen::SelfAdjointEigenSolver<Matrix> es(k, Eigen::EigenvaluesOnly);
  const double nuc = es.eigenvalues().cwiseAbs().sum();
  double l12 = 0.0;
  for (Eigen::Index r = 0; r < k.rows(); ++r) l12 += k.row(r).norm();
  return CheckReport::make("l12-dominates-nuclear", nuc, l12);
}

struct NullSpaceResult {
  int nullity = 0;
  double cosine_with_v = 0.0;  // |cos| between the kernel and V
};

// Kernel of the triplet operator restricted to centered symmetric
// matrices: build an orthonormal basis of {S = S^T, S 1 = 0}, assemble
// the |T| x dim operator matrix, and read the nullity off its spectrum.
// Expected: nullity 1 with kernel spanned by V.
inline NullSpaceResult null_space_check(int n) {
  const Matrix v = centering_matrix(n);
  const Eigen::Index nsq = static_cast<Eigen::Index>(n) * n;
  std::vector<Vector> gens;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Matrix e = Matrix::Zero(n, n);
      e(a, b) = e(b, a) = 1.0;
      const Matrix c = v * e * v;
      gens.push_back(Eigen::Map<const Vector>(c.data(), nsq));
    }
  Matrix gen_mat(nsq, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t c = 0; c < gens.size(); ++c)
    gen_mat.col(static_cast<Eigen::Index>(c)) = gens[c];
  Eigen::JacobiSVD<Matrix> basis_svd(gen_mat, Eigen::ComputeThinU);
  const auto& bsv = basis_svd.singularValues();
  Eigen::Index dim = 0;
  while (dim < bsv.size() && bsv(dim) > 1e-10 * bsv(0)) ++dim;
  const Matrix u = basis_svd.matrixU().leftCols(dim);

  Matrix op(triplet_count(n), dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const Matrix m = Eigen::Map<const Matrix>(u.col(c).data(), n, n);
    Eigen::Index row = 0;
    for (const Triplet& t : TripletRange(n)) op(row++, c) = l_value(m, t);
  }
  Eigen::JacobiSVD<Matrix> svd(op, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  NullSpaceResult out;
  out.nullity = static_cast<int>((sv.array() <= 1e-9 * sv(0)).count());
  const Vector kern_coords = svd.matrixV().col(svd.matrixV().cols() - 1);
  const Vector kern_vec = u * kern_coords;
  const Eigen::Map<const Vector> v_vec(v.data(), nsq);
  out.cosine_with_v = std::abs(kern_vec.dot(v_vec)) / (kern_vec.norm() * v_vec.norm());
  return out;
}

}  // namespace metriclearn
