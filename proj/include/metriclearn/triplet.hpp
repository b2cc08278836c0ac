#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace metriclearn {

// A comparison "is item i closer to j or to k". y = -1 means i is closer
// to j. The canonical enumeration order requires j < k, but observed data
// may arrive with j > k; only i != j != k is validated.
struct Triplet {
  std::int64_t i = 0, j = 0, k = 0;

  Triplet() = default;
  Triplet(std::int64_t i_, std::int64_t j_, std::int64_t k_) : i(i_), j(j_), k(k_) {
    if (i == j || i == k || j == k)
      throw std::invalid_argument("Triplet: indices must be pairwise distinct");
  }

  bool operator==(const Triplet&) const = default;
};

struct LabeledTriplet {
  Triplet t;
  int y = 1;  // -1 or +1
};

inline std::int64_t triplet_count(std::int64_t n) {
  if (n < 3) throw std::invalid_argument("triplet_count: need n >= 3");
  return n * (n - 1) * (n - 2) / 2;
}

// Lexicographic rank of (i,j,k) with j < k over the full set of
// n*(n-1 choose 2) triplets.
inline std::int64_t triplet_rank(std::int64_t n, const Triplet& t) {
  if (t.i >= n || t.j >= n || t.k >= n || t.i < 0 || t.j < 0 || t.k < 0)
    throw std::out_of_range("triplet_rank: index out of range");
  if (t.j >= t.k) throw std::invalid_argument("triplet_rank: needs j < k");
  const std::int64_t m = n - 1;  // items other than i
  // map j,k into {0..n-2} by deleting slot i; order is preserved
  const std::int64_t a = t.j < t.i ? t.j : t.j - 1;
  const std::int64_t b = t.k < t.i ? t.k : t.k - 1;
  const std::int64_t pair_rank = a * (2 * m - a - 1) / 2 + (b - a - 1);
  return t.i * (m * (m - 1) / 2) + pair_rank;
}

inline Triplet triplet_unrank(std::int64_t n, std::int64_t rank) {
  const std::int64_t total = triplet_count(n);
  if (rank < 0 || rank >= total) throw std::out_of_range("triplet_unrank: bad rank");
  const std::int64_t m = n - 1;
  const std::int64_t block = m * (m - 1) / 2;
  const std::int64_t i = rank / block;
  std::int64_t r = rank % block;
  // row a of the pair table has m-1-a entries
  std::int64_t a = 0;
  while (r >= m - 1 - a) {
    r -= m - 1 - a;
    ++a;
  }
  const std::int64_t b = a + 1 + r;
  const std::int64_t j = a < i ? a : a + 1;
  const std::int64_t k = b < i ? b : b + 1;
  return Triplet(i, j, k);
}

// Streaming enumeration of the full triplet set in lexicographic order.
// O(1) memory; no |T|-length buffers.
class TripletRange {
 public:
  explicit TripletRange(std::int64_t n) : n_(n), count_(triplet_count(n)) {}

  std::int64_t size() const { return count_; }
  Triplet operator[](std::int64_t rank) const { return triplet_unrank(n_, rank); }

  class Iterator {
   public:
    Iterator(std::int64_t n, std::int64_t rank) : n_(n), rank_(rank) {
      if (rank_ < triplet_count(n)) cur_ = triplet_unrank(n_, rank_);
    }
    const Triplet& operator*() const { return cur_; }
    Iterator& operator++() {
      ++rank_;
      advance();
      return *this;
    }
    bool operator!=(const Iterator& o) const { return rank_ != o.rank_; }

   private:
    void advance() {
      // increment (j,k) within the block, roll i when exhausted
      std::int64_t i = cur_.i, j = cur_.j, k = cur_.k;
      auto next_ne = [i](std::int64_t v) { return v + 1 == i ? v + 2 : v + 1; };
      std::int64_t k2 = next_ne(k);
      if (k2 < n_) {
        cur_ = Triplet(i, j, k2);
        return;
      }
      std::int64_t j2 = next_ne(j);
      std::int64_t k3 = next_ne(j2);
      if (k3 < n_) {
        cur_ = Triplet(i, j2, k3);
        return;
      }
      if (i + 1 < n_) {
        const std::int64_t i2 = i + 1;
        const std::int64_t j0 = i2 == 0 ? 1 : 0;
        const std::int64_t k0 = j0 + 1 == i2 ? j0 + 2 : j0 + 1;
        cur_ = Triplet(i2, j0, k0);
      }
    }

    std::int64_t n_;
    std::int64_t rank_;
    Triplet cur_{0, 1, 2};
  };

  Iterator begin() const { return Iterator(n_, 0); }
  Iterator end() const { return Iterator(n_, count_); }

 private:
  std::int64_t n_;
  std::int64_t count_;
};

inline std::vector<Triplet> enumerate_triplets(std::int64_t n) {
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(triplet_count(n)));
  for (const Triplet& t : TripletRange(n)) out.push_back(t);
  return out;
}

}  // namespace metriclearn
