#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "metriclearn/model.hpp"
#include "metriclearn/rng.hpp"
#include "metriclearn/triplet.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

enum class TruthKind { DenseLowRank, SparseLowRank };

struct GroundTruth {
  Matrix kstar;
  TruthKind kind = TruthKind::DenseLowRank;
  Eigen::Index d = 0;
};

// n i.i.d. columns from N(0, (1/p) I). Not centered.
inline PointSet sample_isotropic_points(Eigen::Index n, Eigen::Index p, RngStream& rng) {
  if (n < 3 || p < 1)
    throw std::invalid_argument("sample_isotropic_points: need n >= 3, p >= 1");
  Matrix x(p, n);
  const double sd = 1.0 / std::sqrt(static_cast<double>(p));
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < p; ++r) x(r, c) = sd * rng.gaussian();
  return PointSet(std::move(x), false);
}

namespace detail {

// Orthonormal columns from a Gaussian draw.
inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = rng.gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  return q;
}

}  // namespace detail

// K* = (p/sqrt(d)) U U^T with U a random p x d orthonormal frame.
// Eigenvalues are p/sqrt(d) with multiplicity d; ||K*||_F = p.
inline GroundTruth make_dense_lowrank(Eigen::Index p, Eigen::Index d, RngStream& rng) {
  if (d < 1 || d > p) throw std::invalid_argument("make_dense_lowrank: need 1 <= d <= p");
  const Matrix u = detail::random_orthonormal(p, d, rng);
  GroundTruth out;
  out.kind = TruthKind::DenseLowRank;
  out.d = d;
  out.kstar = (static_cast<double>(p) / std::sqrt(static_cast<double>(d))) * u * u.transpose();
  out.kstar = 0.5 * (out.kstar + out.kstar.transpose());
  return out;
}

// Row-sparse truth: a uniformly random support of size d carrying the
// dense rank-d construction; rows outside the support are exactly zero.
inline GroundTruth make_sparse_lowrank(Eigen::Index p, Eigen::Index d, RngStream& rng) {
  if (d < 1 || d > p) throw std::invalid_argument("make_sparse_lowrank: need 1 <= d <= p");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(p - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<Eigen::Index> support(idx.begin(), idx.begin() + d);
  std::sort(support.begin(), support.end());

  const Matrix u = detail::random_orthonormal(d, d, rng);
  Matrix block = (static_cast<double>(p) / std::sqrt(static_cast<double>(d))) * u * u.transpose();
  block = 0.5 * (block + block.transpose());

  GroundTruth out;
  out.kind = TruthKind::SparseLowRank;
  out.d = d;
  out.kstar = Matrix::Zero(p, p);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      out.kstar(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]) = block(a, b);
  return out;
}

// m i.i.d. uniform draws from T, with replacement.
inline std::vector<Triplet> draw_triplets(std::int64_t n, std::int64_t m, RngStream& rng) {
  if (m < 1) throw std::invalid_argument("draw_triplets: need m >= 1");
  const auto total = static_cast<std::uint64_t>(triplet_count(n));
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(m));
  for (std::int64_t s = 0; s < m; ++s)
    out.push_back(triplet_unrank(n, static_cast<std::int64_t>(rng.uniform_int(total))));
  return out;
}

// y_t = -1 with probability f(M_t(K*)), independently across samples.
inline std::vector<LabeledTriplet> draw_labels(const PointSet& x, const Matrix& kstar,
                                               const LinkFunction& link,
                                               std::span<const Triplet> triplets,
                                               RngStream& rng) {
  const Matrix gstar = gram_of(x, kstar);
  std::vector<LabeledTriplet> out;
  out.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    const double q = link.eval(l_value(gstar, t));
    out.push_back({t, rng.uniform() < q ? -1 : 1});
  }
  return out;
}

// Step-link limit: y_t = -sign(M_t(K*)); ties resolve to +1.
inline std::vector<LabeledTriplet> draw_labels_noiseless(const PointSet& x,
                                                         const Matrix& kstar,
                                                         std::span<const Triplet> triplets) {
  const Matrix gstar = gram_of(x, kstar);
  std::vector<LabeledTriplet> out;
  out.reserve(triplets.size());
  for (const Triplet& t : triplets)
    out.push_back({t, l_value(gstar, t) < 0.0 ? -1 : 1});
  return out;
}

}  // namespace metriclearn
