#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nncert/dataset.hpp"
#include "nncert/error.hpp"
#include "nncert/parallel.hpp"

namespace nncert {

/// SHA-256 digest of an example; compared as a big-endian unsigned integer,
/// larger digest = larger rank.
struct RankHash {
  std::array<std::uint8_t, 32> digest{};

  friend constexpr auto operator<=>(const RankHash&, const RankHash&) = default;

  std::string hex() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : digest) {
      s += kHex[b >> 4];
      s += kHex[b & 0xf];
    }
    return s;
  }
};

inline std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32)
    throw Error(ErrorCode::io_error, "SHA-256 evaluation failed");
  return out;
}

/// Digest of the features as little-endian IEEE-754 doubles in index order,
/// followed by the label as a little-endian uint32. Depends only on the
/// example, never on its position in a dataset.
inline RankHash rank_hash(std::span<const double> features, LabelId label) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(features.size() * 8 + 4);
  for (double v : features) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) bytes.push_back(static_cast<std::uint8_t>(bits >> s));
  }
  const auto lab = static_cast<std::uint32_t>(label.value);
  for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<std::uint8_t>(lab >> s));
  return {sha256(bytes)};
}

inline RankHash rank_hash(const Example& e) { return rank_hash(e.features, e.label); }

/// A training dataset paired with the rank hash of every row.
class RankedDataset {
 public:
  RankedDataset() = default;
  explicit RankedDataset(Dataset data, unsigned threads = 1) : data_(std::move(data)) {
    ranks_.resize(data_.size());
    parallel_for(data_.size(), threads,
                 [&](std::size_t i) { ranks_[i] = rank_hash(data_.features(i), data_.label(i)); });
  }
  /// `ranks[i]` must be rank_hash of row i; used when hashes are already known.
  RankedDataset(Dataset data, std::vector<RankHash> ranks) : data_(std::move(data)), ranks_(std::move(ranks)) {
    if (ranks_.size() != data_.size())
      throw Error(ErrorCode::invalid_argument, "rank count does not match dataset size");
  }

  const Dataset& data() const { return data_; }
  std::size_t size() const { return data_.size(); }
  const RankHash& rank(std::size_t i) const { return ranks_[i]; }

 private:
  Dataset data_;
  std::vector<RankHash> ranks_;
};

enum class Algorithm { knn, rnn };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::knn ? "knn" : "rnn"; }

/// kNN with `k`, or rNN with radius `r`.
struct Classifier {
  Algorithm algo = Algorithm::rnn;
  std::size_t k = 0;
  double r = 0.0;

  static Classifier knn(std::size_t k) { return {Algorithm::knn, k, 0.0}; }
  static Classifier rnn(double r) { return {Algorithm::rnn, 0, r}; }
};

namespace detail {

inline double l1_unchecked(const double* u, const double* v, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += std::abs(u[j] - v[j]);
  return s;
}

}  // namespace detail

inline double l1_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::dimension_mismatch,
                "vectors of dimension " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  return detail::l1_unchecked(u.data(), v.data(), u.size());
}

struct Neighbor {
  std::size_t index = 0;  // row in the training dataset
  double distance = 0.0;
  LabelId label;
};

/// Members sorted by (distance ascending, rank descending, index ascending).
struct NeighborSet {
  Algorithm algo = Algorithm::knn;
  std::vector<Neighbor> members;
};

namespace detail {

struct NeighborOrder {
  const RankedDataset* data;
  const std::vector<double>* dist;
  bool operator()(std::size_t a, std::size_t b) const {
    const double da = (*dist)[a];
    const double db = (*dist)[b];
    if (da != db) return da < db;
    const auto cmp = data->rank(a) <=> data->rank(b);
    if (cmp != 0) return cmp > 0;
    return a < b;
  }
};

inline std::vector<double> all_distances(const RankedDataset& d, std::span<const double> x) {
  if (x.size() != d.data().dim())
    throw Error(ErrorCode::dimension_mismatch, "query has dimension " + std::to_string(x.size()) +
                                                   ", training data has " + std::to_string(d.data().dim()));
  std::vector<double> dist(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    dist[i] = l1_unchecked(d.data().features(i).data(), x.data(), x.size());
  return dist;
}

inline NeighborSet to_neighbor_set(Algorithm algo, const RankedDataset& d, const std::vector<double>& dist,
                                   std::span<const std::size_t> idx) {
  NeighborSet out{algo, {}};
  out.members.reserve(idx.size());
  for (std::size_t i : idx) out.members.push_back({i, dist[i], d.data().label(i)});
  return out;
}

}  // namespace detail

/// The k training examples first under (distance ascending, rank hash
/// descending, index ascending).
inline NeighborSet knn_neighbors(const RankedDataset& d, std::span<const double> x, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  if (d.size() < k)
    throw Error(ErrorCode::dataset_too_small,
                "kNN with k=" + std::to_string(k) + " on " + std::to_string(d.size()) + " training examples");
  const auto dist = detail::all_distances(d, x);
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const detail::NeighborOrder order{&d, &dist};
  if (k < idx.size()) std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), order);
  idx.resize(k);
  std::sort(idx.begin(), idx.end(), order);
  return detail::to_neighbor_set(Algorithm::knn, d, dist, idx);
}

/// Every training example within L1 distance r (inclusive).
inline NeighborSet rnn_neighbors(const RankedDataset& d, std::span<const double> x, double r) {
  if (!(r >= 0)) throw Error(ErrorCode::invalid_argument, "radius must be >= 0");
  const auto dist = detail::all_distances(d, x);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] <= r) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), detail::NeighborOrder{&d, &dist});
  return detail::to_neighbor_set(Algorithm::rnn, d, dist, idx);
}

inline NeighborSet neighbors(const RankedDataset& d, std::span<const double> x, const Classifier& clf) {
  return clf.algo == Algorithm::knn ? knn_neighbors(d, x, clf.k) : rnn_neighbors(d, x, clf.r);
}

/// Per-label vote counts with the top two labels. Count ties go to the larger
/// label, so s_a == s_b implies a > b.
struct VoteTally {
  Algorithm algo = Algorithm::knn;
  std::vector<int> counts;  // counts[l-1] = s_l
  LabelId a;
  LabelId b;
  int s_a = 0;
  int s_b = 0;

  int num_classes() const { return static_cast<int>(counts.size()); }
  int count(LabelId l) const { return counts[static_cast<std::size_t>(l.value - 1)]; }
};

/// Builds a tally from per-label counts (counts[l-1] = s_l).
inline VoteTally tally_from_counts(std::vector<int> counts, Algorithm algo) {
  const int c = static_cast<int>(counts.size());
  if (c < 2) throw Error(ErrorCode::invalid_argument, "vote tally needs at least two classes");
  VoteTally t{algo, std::move(counts), {}, {}, 0, 0};
  int best = c;
  for (int l = c - 1; l >= 1; --l)
    if (t.counts[l - 1] > t.counts[best - 1]) best = l;
  int second = best == c ? c - 1 : c;
  for (int l = c; l >= 1; --l) {
    if (l == best) continue;
    if (t.counts[l - 1] > t.counts[second - 1]) second = l;
  }
  t.a = LabelId{best};
  t.b = LabelId{second};
  t.s_a = t.counts[best - 1];
  t.s_b = t.counts[second - 1];
  return t;
}

inline VoteTally tally(const NeighborSet& ns, int num_classes) {
  if (num_classes < 2) throw Error(ErrorCode::invalid_argument, "vote tally needs at least two classes");
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto& m : ns.members) {
    if (m.label.value < 1 || m.label.value > num_classes)
      throw Error(ErrorCode::label_out_of_range, "neighbor label " + std::to_string(m.label.value));
    ++counts[static_cast<std::size_t>(m.label.value - 1)];
  }
  return tally_from_counts(std::move(counts), ns.algo);
}

inline LabelId predict(const VoteTally& t) { return t.a; }

/// Label predicted for `x` by the classifier trained on `d`.
inline LabelId classify(const RankedDataset& d, std::span<const double> x, const Classifier& clf) {
  return predict(tally(neighbors(d, x, clf), d.data().num_classes()));
}

/// Tallies for every row of `queries`, computed in parallel; output order
/// follows the queries.
inline std::vector<VoteTally> tally_all(const RankedDataset& train, const Dataset& queries, const Classifier& clf,
                                        unsigned threads = 0) {
  std::vector<VoteTally> out(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    out[i] = tally(neighbors(train, queries.features(i), clf), train.data().num_classes());
  });
  return out;
}

}  // namespace nncert
