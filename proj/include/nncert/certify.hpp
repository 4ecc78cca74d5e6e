#pragma once

#include <boost/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nncert/dataset.hpp"
#include "nncert/error.hpp"
#include "nncert/neighbors.hpp"
#include "nncert/parallel.hpp"
#include "nncert/random.hpp"

namespace nncert {

using Fraction = boost::rational<std::int64_t>;

/// Fixed-point rendering with six fractional digits, rounded half up.
inline std::string to_decimal6(const Fraction& f) {
  std::int64_t num = f.numerator();
  const std::int64_t den = f.denominator();
  const bool negative = num < 0;
  if (negative) num = -num;
  const std::int64_t scaled = (num * 2'000'000 + den) / (2 * den);
  std::string frac = std::to_string(scaled % 1'000'000);
  frac.insert(0, 6 - frac.size(), '0');
  return (negative && scaled != 0 ? "-" : "") + std::to_string(scaled / 1'000'000) + "." + frac;
}

/// Certificate of one test example against poisoning of the training set.
struct IndividualCert {
  std::size_t test_index = 0;
  Algorithm algo = Algorithm::knn;
  LabelId a;
  LabelId b;
  int s_a = 0;
  int s_b = 0;
  LabelId y;             // true label
  bool correct = false;  // a == y
  int e_star = -1;       // prediction provably unchanged for every poisoning of size <= e_star

  int tie_bonus() const { return a > b ? 1 : 0; }
  int gap() const { return s_a - s_b; }
  /// s_a - s_b - e + I(a > b): removals of a-votes needed to flip this example
  /// once the attacker has also spent e additions on b.
  std::int64_t margin(std::int64_t e) const { return std::int64_t{gap()} - e + tie_bonus(); }
  bool certified_at(std::int64_t e) const { return correct && e <= e_star; }
};

inline IndividualCert individual_cert(const VoteTally& t, LabelId y, std::size_t test_index = 0) {
  IndividualCert c;
  c.test_index = test_index;
  c.algo = t.algo;
  c.a = t.a;
  c.b = t.b;
  c.s_a = t.s_a;
  c.s_b = t.s_b;
  c.y = y;
  c.correct = t.a == y;
  const int num = c.gap() + c.tie_bonus();
  // ceil(num / 2) - 1 with floor semantics for negative num
  const int ceil_half = num >= 0 ? (num + 1) / 2 : -((-num) / 2);
  c.e_star = ceil_half - 1;
  return c;
}

inline std::vector<IndividualCert> individual_certs(std::span<const VoteTally> tallies, const TestSet& test) {
  if (tallies.size() != test.size())
    throw Error(ErrorCode::invalid_argument, "tally count does not match test set size");
  std::vector<IndividualCert> out;
  out.reserve(tallies.size());
  for (std::size_t i = 0; i < tallies.size(); ++i) out.push_back(individual_cert(tallies[i], test.label(i), i));
  return out;
}

/// Fraction of certificates that are correct and certified at poisoning size e.
inline Fraction individual_ca(std::span<const IndividualCert> certs, std::int64_t e) {
  if (certs.empty()) throw Error(ErrorCode::empty_test_set, "no certificates to aggregate");
  std::int64_t hits = 0;
  for (const auto& c : certs) hits += c.certified_at(e) ? 1 : 0;
  return {hits, static_cast<std::int64_t>(certs.size())};
}

/// Test examples with pairwise-distinct predicted labels.
struct Group {
  std::vector<IndividualCert> members;

  std::size_t size() const { return members.size(); }
};

struct GroupCert {
  std::int64_t e = 0;
  std::size_t w = 1;  // least w' in 1..m+1 whose cost suffix fits in e
  Fraction mu;        // (w - 1) / m
};

/// Joint bound for an rNN group: sort members by (s_a - s_b) * I(a = y)
/// descending, charge each max(margin(e), 0) * I(a = y) removals, and find the
/// least w with the cost of members w..m within budget e. Members before w
/// stay correct under every poisoning of size <= e.
///
/// Equal sort keys can still carry different costs (I(a > b) differs, or a
/// correct zero-gap member meets a misclassified one), so ties go to the
/// larger cost first. The costs are then non-increasing along the order,
/// which the bound relies on; test index settles the rest.
inline GroupCert joint_group_bound(const Group& group, std::int64_t e) {
  const std::size_t m = group.size();
  if (m == 0) throw Error(ErrorCode::invalid_argument, "empty group");
  std::vector<int> seen;
  for (const auto& c : group.members) {
    if (c.algo != Algorithm::rnn)
      throw Error(ErrorCode::knn_not_supported, "joint certification requires rnn");
    if (std::find(seen.begin(), seen.end(), c.a.value) != seen.end())
      throw Error(ErrorCode::duplicate_predicted_label,
                  "predicted label " + std::to_string(c.a.value) + " appears twice in a group");
    seen.push_back(c.a.value);
  }

  std::vector<const IndividualCert*> order;
  order.reserve(m);
  for (const auto& c : group.members) order.push_back(&c);
  auto cost = [e](const IndividualCert* c) -> std::int64_t {
    return c->correct ? std::max<std::int64_t>(c->margin(e), 0) : 0;
  };
  std::sort(order.begin(), order.end(), [&](const IndividualCert* x, const IndividualCert* y) {
    const int kx = x->correct ? x->gap() : 0;
    const int ky = y->correct ? y->gap() : 0;
    if (kx != ky) return kx > ky;
    if (cost(x) != cost(y)) return cost(x) > cost(y);
    return x->test_index < y->test_index;
  });

  // suffix[i] = total cost of sorted members i..m-1 (0-based); suffix[m] = 0.
  std::vector<std::int64_t> suffix(m + 1, 0);
  for (std::size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] + cost(order[i]);
  std::size_t w = m + 1;
  for (std::size_t i = 0; i <= m; ++i) {
    if (suffix[i] <= e) {
      w = i + 1;
      break;
    }
  }
  return {e, w, Fraction(static_cast<std::int64_t>(w - 1), static_cast<std::int64_t>(m))};
}

/// Random division: shuffle, then place each certificate in the first group
/// that lacks its predicted label, opening a new group if none does.
inline std::vector<Group> group_rd(std::span<const IndividualCert> certs, int num_classes, std::uint64_t seed) {
  std::vector<IndividualCert> shuffled(certs.begin(), certs.end());
  Rng rng(seed);
  seeded_shuffle(std::span<IndividualCert>(shuffled), rng);

  std::vector<Group> groups;
  std::vector<std::vector<bool>> has_label;
  for (const auto& c : shuffled) {
    if (c.a.value < 1 || c.a.value > num_classes)
      throw Error(ErrorCode::label_out_of_range, "predicted label " + std::to_string(c.a.value));
    const auto l = static_cast<std::size_t>(c.a.value - 1);
    std::size_t g = 0;
    while (g < groups.size() && has_label[g][l]) ++g;
    if (g == groups.size()) {
      groups.emplace_back();
      has_label.emplace_back(static_cast<std::size_t>(num_classes), false);
    }
    groups[g].members.push_back(c);
    has_label[g][l] = true;
  }
  return groups;
}

/// Isolation and division at poisoning size e.
///
/// Certificates already certified at e, and certificates that no group can
/// save (margin(e) * I(a = y) <= 0), each become a singleton group. The rest
/// are grouped round by round: each round takes, for every label in 1..c, the
/// remaining certificate with that predicted label and the largest
/// margin(e) (ties by test index).
inline std::vector<Group> group_island(std::span<const IndividualCert> certs, std::int64_t e) {
  std::vector<Group> groups;
  std::vector<std::vector<const IndividualCert*>> by_label;
  for (const auto& c : certs) {
    const bool always = c.certified_at(e);
    const bool never = (c.correct ? c.margin(e) : 0) <= 0;
    if (always || never) {
      groups.push_back(Group{{c}});
      continue;
    }
    const auto l = static_cast<std::size_t>(c.a.value - 1);
    if (by_label.size() <= l) by_label.resize(l + 1);
    by_label[l].push_back(&c);
  }

  std::size_t rounds = 0;
  for (auto& bucket : by_label) {
    std::sort(bucket.begin(), bucket.end(), [e](const IndividualCert* x, const IndividualCert* y) {
      const auto kx = x->margin(e);
      const auto ky = y->margin(e);
      if (kx != ky) return kx > ky;
      return x->test_index < y->test_index;
    });
    rounds = std::max(rounds, bucket.size());
  }
  for (std::size_t round = 0; round < rounds; ++round) {
    Group g;
    for (const auto& bucket : by_label)
      if (round < bucket.size()) g.members.push_back(*bucket[round]);
    groups.push_back(std::move(g));
  }
  return groups;
}

namespace detail {

inline std::size_t check_disjoint(std::span<const Group> groups, std::optional<std::size_t> n_test) {
  std::vector<std::size_t> seen;
  for (const auto& g : groups)
    for (const auto& c : g.members) seen.push_back(c.test_index);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw Error(ErrorCode::groups_not_partition, "a test example appears in more than one group");
  if (n_test) {
    if (seen.size() != *n_test || (!seen.empty() && seen.back() >= *n_test))
      throw Error(ErrorCode::groups_not_partition, "groups cover " + std::to_string(seen.size()) + " of " +
                                                       std::to_string(*n_test) + " test examples");
  }
  return seen.size();
}

}  // namespace detail

/// Dataset-level joint bound: sum of mu_j * |U_j| over sum of |U_j|. With
/// `n_test` given the groups must cover test indices 0..n_test-1 exactly.
inline Fraction joint_ca(std::span<const Group> groups, std::int64_t e,
                         std::optional<std::size_t> n_test = std::nullopt) {
  const std::size_t total = detail::check_disjoint(groups, n_test);
  if (total == 0) throw Error(ErrorCode::empty_test_set, "no grouped test examples");
  std::int64_t certified = 0;
  for (const auto& g : groups) certified += static_cast<std::int64_t>(joint_group_bound(g, e).w - 1);
  return {certified, static_cast<std::int64_t>(total)};
}

enum class Method { individual, joint_rd, joint_island };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::individual: return "individual";
    case Method::joint_rd: return "joint-rd";
    case Method::joint_island: return "joint-island";
  }
  return "individual";
}

inline Method parse_method(std::string_view s) {
  if (s == "individual") return Method::individual;
  if (s == "joint-rd") return Method::joint_rd;
  if (s == "joint-island") return Method::joint_island;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + std::string(s) + "'");
}

struct CurvePoint {
  std::int64_t e = 0;
  Fraction ca_individual;
  std::optional<Fraction> ca_joint;
  std::size_t n_test = 0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Certified accuracy at each e. RD groups are drawn once from `seed` and
/// reused; ISLAND regroups per e.
inline std::vector<CurvePoint> curve_from_certs(std::span<const IndividualCert> certs, int num_classes,
                                                std::span<const std::int64_t> e_values, Method method,
                                                std::uint64_t seed, unsigned threads = 1) {
  if (certs.empty()) throw Error(ErrorCode::empty_test_set, "no test examples");
  if (!std::is_sorted(e_values.begin(), e_values.end()) ||
      (!e_values.empty() && e_values.front() < 0))
    throw Error(ErrorCode::invalid_argument, "e values must be non-negative and ascending");
  if (method != Method::individual) {
    for (const auto& c : certs)
      if (c.algo != Algorithm::rnn) throw Error(ErrorCode::knn_not_supported, "joint certification requires rnn");
  }

  std::vector<Group> rd_groups;
  if (method == Method::joint_rd) rd_groups = group_rd(certs, num_classes, seed);

  std::vector<CurvePoint> out(e_values.size());
  parallel_for(e_values.size(), threads, [&](std::size_t i) {
    const auto e = e_values[i];
    CurvePoint p{e, individual_ca(certs, e), std::nullopt, certs.size()};
    if (method == Method::joint_rd) {
      p.ca_joint = joint_ca(rd_groups, e, certs.size());
    } else if (method == Method::joint_island) {
      const auto groups = group_island(certs, e);
      p.ca_joint = joint_ca(groups, e, certs.size());
    }
    out[i] = std::move(p);
  });
  return out;
}

struct CurveOptions {
  Classifier classifier;
  std::vector<std::int64_t> e_values;
  Method method = Method::individual;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Tallies every test example once against `train`, then evaluates the curve.
inline std::vector<CurvePoint> curve(const RankedDataset& train, const TestSet& test, const CurveOptions& opt) {
  if (opt.method != Method::individual && opt.classifier.algo != Algorithm::rnn)
    throw Error(ErrorCode::knn_not_supported, "joint certification requires rnn");
  if (test.dim() != train.data().dim())
    throw Error(ErrorCode::dimension_mismatch, "test dimension " + std::to_string(test.dim()) +
                                                   " differs from training dimension " +
                                                   std::to_string(train.data().dim()));
  const auto tallies = tally_all(train, test, opt.classifier, opt.threads);
  const auto certs = individual_certs(tallies, test);
  return curve_from_certs(certs, train.data().num_classes(), opt.e_values, opt.method, opt.seed, opt.threads);
}

/// e = 0, step, 2*step, ... up to e_max inclusive.
inline std::vector<std::int64_t> e_grid(std::int64_t e_max, std::int64_t e_step) {
  if (e_step < 1) throw Error(ErrorCode::invalid_argument, "e step must be >= 1");
  if (e_max < 0) throw Error(ErrorCode::invalid_argument, "e max must be >= 0");
  std::vector<std::int64_t> out;
  for (std::int64_t e = 0; e <= e_max; e += e_step) out.push_back(e);
  return out;
}

inline void write_curve_csv(std::ostream& os, std::span<const CurvePoint> points) {
  os << "e,ca_individual,ca_joint,n_test\n";
  for (const auto& p : points) {
    os << p.e << ',' << to_decimal6(p.ca_individual) << ',';
    if (p.ca_joint) os << to_decimal6(*p.ca_joint);
    os << ',' << p.n_test << '\n';
  }
}

}  // namespace nncert
