#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "nncert/certify.hpp"
#include "nncert/dataset.hpp"
#include "nncert/error.hpp"
#include "nncert/io.hpp"
#include "nncert/neighbors.hpp"
#include "nncert/random.hpp"

// Exhaustive attack enumeration over toy instances. Every certificate the
// library issues is a lower bound, so a single attack that beats one is a bug.

namespace nncert::oracle {

/// Attacker model: remove any sub-multiset of `base`, add any multiset drawn
/// from `pool`, subject to poisoning size <= `budget`.
struct AttackSpace {
  Dataset base;
  Dataset pool;
  std::int64_t budget = 0;
  std::size_t min_size = 0;             // poisoned sets smaller than this are skipped (kNN needs |D*| >= k)
  std::uint64_t ceiling = 20'000'000;   // refuse enumerations larger than this
};

/// All 2-D points of {0..side-1}^2 under every label.
inline Dataset grid_pool(int side, int num_classes) {
  Dataset pool(2, num_classes);
  for (int x = 0; x < side; ++x)
    for (int y = 0; y < side; ++y)
      for (int l = 1; l <= num_classes; ++l) {
        const double f[2] = {double(x), double(y)};
        pool.push_back(f, LabelId{l});
      }
  return pool;
}

/// One poisoned training set: the base rows that survive plus the pool rows
/// that were added. Poisoning size is max(|removed|, |added|).
struct Poisoning {
  const AttackSpace* space = nullptr;
  std::vector<std::size_t> kept;      // base rows, ascending
  std::vector<std::size_t> removed;   // base rows, ascending
  std::vector<std::size_t> added;     // pool rows, non-decreasing, repeats allowed

  std::size_t size() const { return kept.size() + added.size(); }
  std::int64_t poisoning_size() const {
    return static_cast<std::int64_t>(std::max(removed.size(), added.size()));
  }

  Dataset materialize() const {
    Dataset d(space->base.dim(), space->base.num_classes());
    d.reserve(size());
    for (auto i : kept) d.push_back(space->base.features(i), space->base.label(i));
    for (auto j : added) d.push_back(space->pool.features(j), space->pool.label(j));
    return d;
  }

  std::string describe() const {
    std::string s = "remove[";
    for (std::size_t i = 0; i < removed.size(); ++i) s += (i ? "," : "") + std::to_string(removed[i]);
    s += "] add[";
    for (std::size_t i = 0; i < added.size(); ++i) {
      const auto j = added[i];
      const auto f = space->pool.features(j);
      s += (i ? ";" : "");
      s += "(";
      for (std::size_t k = 0; k < f.size(); ++k) {
        s += (k ? "," : "");
        append_double(s, f[k]);
      }
      s += ")/" + std::to_string(space->pool.label(j).value);
    }
    return s + "]";
  }
};

namespace detail {

inline std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Distinct examples of `d` in first-occurrence order with their row indices.
inline std::vector<std::vector<std::size_t>> distinct_rows(const Dataset& d) {
  std::map<std::vector<std::uint64_t>, std::size_t> slot;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(nncert::detail::example_key(d, i), out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(i);
  }
  return out;
}

}  // namespace detail

/// Upper bound on the number of poisoned sets `for_each_poisoning` visits.
inline std::uint64_t enumeration_bound(const AttackSpace& s) {
  const auto b = static_cast<std::uint64_t>(std::max<std::int64_t>(s.budget, 0));
  std::uint64_t removals = 0;
  std::uint64_t additions = 0;
  for (std::uint64_t j = 0; j <= b; ++j) {
    removals += detail::binom(s.base.size(), j);
    additions += j == 0 ? 1 : detail::binom(s.pool.size() + j - 1, j);
  }
  return removals * additions;
}

/// Visits every distinct multiset D* with poisoning_size(base, D*) <= budget
/// exactly once, including base itself.
///
/// A poisoned set is canonically base - R + A with R a sub-multiset of base,
/// A a multiset over the pool, and no example both removed and added; then
/// |D* ∩ base| = |base| - |R| and the poisoning size is max(|R|, |A|).
/// Returns the number of sets visited.
inline std::uint64_t for_each_poisoning(const AttackSpace& space, const std::function<void(const Poisoning&)>& visit) {
  if (space.budget < 0) throw Error(ErrorCode::invalid_argument, "negative budget");
  if (space.base.dim() != space.pool.dim() || space.base.num_classes() != space.pool.num_classes())
    throw Error(ErrorCode::dimension_mismatch, "pool and base dataset disagree on shape");
  if (enumeration_bound(space) > space.ceiling)
    throw Error(ErrorCode::budget_too_large, "enumeration of up to " + std::to_string(enumeration_bound(space)) +
                                                 " poisoned sets exceeds ceiling " + std::to_string(space.ceiling));

  const auto base_groups = detail::distinct_rows(space.base);
  const auto pool_groups = detail::distinct_rows(space.pool);
  // pool element -> base group holding the same example, if any
  std::vector<std::ptrdiff_t> pool_in_base(pool_groups.size(), -1);
  {
    std::map<std::vector<std::uint64_t>, std::size_t> base_slot;
    for (std::size_t g = 0; g < base_groups.size(); ++g)
      base_slot.emplace(nncert::detail::example_key(space.base, base_groups[g].front()), g);
    for (std::size_t p = 0; p < pool_groups.size(); ++p) {
      auto it = base_slot.find(nncert::detail::example_key(space.pool, pool_groups[p].front()));
      if (it != base_slot.end()) pool_in_base[p] = static_cast<std::ptrdiff_t>(it->second);
    }
  }

  const auto budget = static_cast<std::size_t>(space.budget);
  std::vector<std::size_t> remove_count(base_groups.size(), 0);
  std::vector<std::size_t> add_count(pool_groups.size(), 0);
  std::uint64_t visited = 0;
  Poisoning p;
  p.space = &space;

  auto emit = [&] {
    p.kept.clear();
    p.removed.clear();
    p.added.clear();
    for (std::size_t g = 0; g < base_groups.size(); ++g) {
      const auto& rows = base_groups[g];
      const std::size_t keep = rows.size() - remove_count[g];
      p.kept.insert(p.kept.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(keep));
      p.removed.insert(p.removed.end(), rows.begin() + static_cast<std::ptrdiff_t>(keep), rows.end());
    }
    std::sort(p.kept.begin(), p.kept.end());
    std::sort(p.removed.begin(), p.removed.end());
    for (std::size_t q = 0; q < pool_groups.size(); ++q)
      p.added.insert(p.added.end(), add_count[q], pool_groups[q].front());
    if (p.size() < space.min_size) return;
    ++visited;
    visit(p);
  };

  // Choose additions for a fixed removal, pool element by pool element.
  std::function<void(std::size_t, std::size_t)> choose_additions = [&](std::size_t q, std::size_t left) {
    if (q == pool_groups.size()) {
      emit();
      return;
    }
    const bool blocked = pool_in_base[q] >= 0 && remove_count[static_cast<std::size_t>(pool_in_base[q])] > 0;
    const std::size_t max_here = blocked ? 0 : left;
    for (std::size_t c = 0; c <= max_here; ++c) {
      add_count[q] = c;
      choose_additions(q + 1, left - c);
    }
    add_count[q] = 0;
  };

  std::function<void(std::size_t, std::size_t)> choose_removals = [&](std::size_t g, std::size_t left) {
    if (g == base_groups.size()) {
      choose_additions(0, budget);
      return;
    }
    const std::size_t max_here = std::min(left, base_groups[g].size());
    for (std::size_t c = 0; c <= max_here; ++c) {
      remove_count[g] = c;
      choose_removals(g + 1, left - c);
    }
    remove_count[g] = 0;
  };

  choose_removals(0, budget);
  return visited;
}

/// Materialized list of every poisoned set in the space.
inline std::vector<Dataset> enumerate_poisonings(const AttackSpace& space) {
  std::vector<Dataset> out;
  for_each_poisoning(space, [&](const Poisoning& p) { out.push_back(p.materialize()); });
  return out;
}

/// Reference classifier: sorts every training example under (distance,
/// rank hash descending, index) and votes with a linear scan. Shares no code
/// with the library's neighbor search.
class BruteForceClassifier {
 public:
  BruteForceClassifier(const AttackSpace& space, Classifier clf) : space_(&space), clf_(clf) {
    for (std::size_t i = 0; i < space.base.size(); ++i)
      base_rank_.push_back(rank_hash(space.base.features(i), space.base.label(i)));
    for (std::size_t j = 0; j < space.pool.size(); ++j)
      pool_rank_.push_back(rank_hash(space.pool.features(j), space.pool.label(j)));
  }

  LabelId classify(const Poisoning& p, std::span<const double> x) const {
    struct Row {
      double dist;
      const RankHash* rank;
      std::size_t pos;
      LabelId label;
    };
    std::vector<Row> rows;
    rows.reserve(p.size());
    auto dist = [&](std::span<const double> f) {
      double s = 0;
      for (std::size_t j = 0; j < f.size(); ++j) s += f[j] > x[j] ? f[j] - x[j] : x[j] - f[j];
      return s;
    };
    std::size_t pos = 0;
    for (auto i : p.kept) rows.push_back({dist(space_->base.features(i)), &base_rank_[i], pos++, space_->base.label(i)});
    for (auto j : p.added) rows.push_back({dist(space_->pool.features(j)), &pool_rank_[j], pos++, space_->pool.label(j)});
    std::sort(rows.begin(), rows.end(), [](const Row& u, const Row& v) {
      if (u.dist != v.dist) return u.dist < v.dist;
      if (*u.rank != *v.rank) return *u.rank > *v.rank;
      return u.pos < v.pos;
    });
    std::size_t take = rows.size();
    if (clf_.algo == Algorithm::knn) {
      take = clf_.k;
    } else {
      take = 0;
      while (take < rows.size() && rows[take].dist <= clf_.r) ++take;
    }
    const int c = space_->base.num_classes();
    std::vector<int> votes(static_cast<std::size_t>(c) + 1, 0);
    for (std::size_t i = 0; i < take; ++i) ++votes[static_cast<std::size_t>(rows[i].label.value)];
    int best = c;
    for (int l = c; l >= 1; --l)
      if (votes[static_cast<std::size_t>(l)] > votes[static_cast<std::size_t>(best)]) best = l;
    return LabelId{best};
  }

 private:
  const AttackSpace* space_;
  Classifier clf_;
  std::vector<RankHash> base_rank_;
  std::vector<RankHash> pool_rank_;
};

struct Violation {
  std::string kind;            // "individual", "joint-group" or "joint-aggregate"
  std::uint64_t instance_seed = 0;
  std::int64_t budget = 0;
  std::int64_t test_index = -1;  // individual: test example; joint-group: group index
  std::string attack;
  std::string detail;

  auto key() const { return std::tie(instance_seed, kind, budget, test_index, attack, detail); }
  friend bool operator<(const Violation& a, const Violation& b) { return a.key() < b.key(); }
};

struct IndividualReport {
  IndividualCert cert;
  std::int64_t budget_checked = 0;  // e_star + offset, capped by the space budget
  bool capped = false;
  std::uint64_t datasets_checked = 0;
  std::vector<Violation> violations;
};

/// Checks that no poisoning of size <= e_star (+ `budget_offset`) changes the
/// prediction for `x`. A positive offset deliberately over-claims and is
/// expected to find violations on some instances.
inline IndividualReport verify_individual(const AttackSpace& space, std::span<const double> x, LabelId y,
                                          const Classifier& clf, std::int64_t budget_offset = 0,
                                          std::uint64_t instance_seed = 0, std::size_t test_index = 0) {
  IndividualReport rep;
  const RankedDataset clean(space.base);
  rep.cert = individual_cert(tally(neighbors(clean, x, clf), space.base.num_classes()), y, test_index);
  const std::int64_t wanted = rep.cert.e_star + budget_offset;
  rep.budget_checked = std::min(wanted, space.budget);
  rep.capped = wanted > space.budget;
  if (rep.budget_checked < 0) return rep;

  AttackSpace sub = space;
  sub.budget = rep.budget_checked;
  const BruteForceClassifier brute(sub, clf);
  rep.datasets_checked = for_each_poisoning(sub, [&](const Poisoning& p) {
    const LabelId got = brute.classify(p, x);
    if (got != rep.cert.a) {
      rep.violations.push_back({"individual", instance_seed, rep.budget_checked,
                                static_cast<std::int64_t>(test_index), p.describe(),
                                "predicted " + std::to_string(got.value) + ", certified " +
                                    std::to_string(rep.cert.a.value) + " (e_star " +
                                    std::to_string(rep.cert.e_star) + ")"});
    }
  });
  return rep;
}

struct JointReport {
  Method grouping = Method::joint_island;
  std::vector<IndividualCert> certs;
  std::vector<Group> groups;
  std::vector<GroupCert> bounds;
  Fraction joint_bound;
  Fraction individual_bound;
  std::uint64_t datasets_checked = 0;
  std::size_t worst_correct = 0;  // fewest correctly classified test points over all attacks
  std::vector<Violation> violations;
};

/// Checks the joint rNN bound: under every poisoning of size <= e, each group
/// keeps at least w-1 members correct and the overall accuracy stays at or
/// above the dataset bound. A positive `budget_offset` attacks with e + offset
/// against bounds computed for e, which should break some instances.
inline JointReport verify_joint(const AttackSpace& space, const TestSet& tests, const Classifier& clf,
                                Method grouping, std::int64_t e, std::uint64_t rd_seed = 0,
                                std::uint64_t instance_seed = 0, std::int64_t budget_offset = 0) {
  if (clf.algo != Algorithm::rnn) throw Error(ErrorCode::knn_not_supported, "joint certification requires rnn");
  if (grouping == Method::individual) throw Error(ErrorCode::invalid_argument, "joint verification needs a grouping");
  JointReport rep;
  rep.grouping = grouping;
  const RankedDataset clean(space.base);
  const auto tallies = tally_all(clean, tests, clf, 1);
  rep.certs = individual_certs(tallies, tests);
  rep.groups = grouping == Method::joint_island ? group_island(rep.certs, e)
                                                : group_rd(rep.certs, space.base.num_classes(), rd_seed);
  for (const auto& g : rep.groups) rep.bounds.push_back(joint_group_bound(g, e));
  rep.joint_bound = joint_ca(rep.groups, e, tests.size());
  rep.individual_bound = individual_ca(rep.certs, e);

  AttackSpace sub = space;
  sub.budget = e + budget_offset;
  const BruteForceClassifier brute(sub, clf);
  rep.worst_correct = tests.size();
  std::vector<bool> correct(tests.size());
  rep.datasets_checked = for_each_poisoning(sub, [&](const Poisoning& p) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < tests.size(); ++i) {
      correct[i] = brute.classify(p, tests.features(i)) == tests.label(i);
      total += correct[i] ? 1 : 0;
    }
    rep.worst_correct = std::min(rep.worst_correct, total);
    for (std::size_t g = 0; g < rep.groups.size(); ++g) {
      std::size_t ok = 0;
      for (const auto& c : rep.groups[g].members) ok += correct[c.test_index] ? 1 : 0;
      if (ok + 1 < rep.bounds[g].w) {
        rep.violations.push_back({"joint-group", instance_seed, sub.budget, static_cast<std::int64_t>(g), p.describe(),
                                  std::to_string(ok) + " correct, bound " + std::to_string(rep.bounds[g].w - 1)});
      }
    }
    if (Fraction(static_cast<std::int64_t>(total), static_cast<std::int64_t>(tests.size())) < rep.joint_bound) {
      rep.violations.push_back({"joint-aggregate", instance_seed, sub.budget, -1, p.describe(),
                                std::to_string(total) + "/" + std::to_string(tests.size()) + " correct, bound " +
                                    to_decimal6(rep.joint_bound)});
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Randomized sweeps

struct SweepLimits {
  int grid_side = 4;               // features in {0..grid_side-1}^2
  int max_train = 6;
  std::int64_t max_budget = 2;
  std::size_t individual_points = 3;  // test points per individual instance
  std::size_t joint_points_min = 3;
  std::size_t joint_points_max = 5;
};

struct Instance {
  std::uint64_t seed = 0;
  Classifier clf;
  Dataset train;
  TestSet tests;
  std::int64_t e = 0;  // joint budget; unused for individual instances
};

namespace detail {

inline std::int64_t pick(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline void random_points(Rng& rng, Dataset& d, std::size_t count, int side, int dominant = 0) {
  for (std::size_t i = 0; i < count; ++i) {
    const double f[2] = {double(pick(rng, 0, side - 1)), double(pick(rng, 0, side - 1))};
    int label = static_cast<int>(pick(rng, 1, d.num_classes()));
    if (dominant > 0 && pick(rng, 0, 3) != 0) label = dominant;
    d.push_back(f, LabelId{label});
  }
}

// Half of the instances lean toward one training label so that vote margins,
// and hence certified sizes, are not all zero.
inline int maybe_dominant(Rng& rng, int classes) {
  return pick(rng, 0, 1) == 0 ? 0 : static_cast<int>(pick(rng, 1, classes));
}

// Test points whose true label usually matches the clean prediction.
inline TestSet random_tests(Rng& rng, const Dataset& train, const Classifier& clf, std::size_t count, int side) {
  TestSet tests(2, train.num_classes());
  const RankedDataset ranked(train);
  for (std::size_t i = 0; i < count; ++i) {
    const double f[2] = {double(pick(rng, 0, side - 1)), double(pick(rng, 0, side - 1))};
    LabelId y{static_cast<int>(pick(rng, 1, train.num_classes()))};
    if (pick(rng, 0, 3) != 0) {
      const bool enough = clf.algo == Algorithm::rnn || train.size() >= clf.k;
      if (enough) y = classify(ranked, f, clf);
    }
    tests.push_back(f, y);
  }
  return tests;
}

}  // namespace detail

/// kNN (k in {1,3}) or rNN (r in {1,2}) over 2..3 classes with a handful of
/// grid points; kNN instances keep at least k + max_budget training points.
inline Instance random_individual_instance(std::uint64_t seed, const SweepLimits& lim) {
  Rng rng(seed);
  Instance inst;
  inst.seed = seed;
  const int classes = static_cast<int>(detail::pick(rng, 2, 3));
  switch (detail::pick(rng, 0, 3)) {
    case 0: inst.clf = Classifier::knn(1); break;
    case 1: inst.clf = Classifier::knn(3); break;
    case 2: inst.clf = Classifier::rnn(1); break;
    default: inst.clf = Classifier::rnn(2); break;
  }
  const std::int64_t min_n =
      inst.clf.algo == Algorithm::knn ? static_cast<std::int64_t>(inst.clf.k) + lim.max_budget : 1;
  const auto n = static_cast<std::size_t>(detail::pick(rng, std::min<std::int64_t>(min_n, lim.max_train), lim.max_train));
  inst.train = Dataset(2, classes);
  detail::random_points(rng, inst.train, n, lim.grid_side, detail::maybe_dominant(rng, classes));
  inst.tests = detail::random_tests(rng, inst.train, inst.clf, lim.individual_points, lim.grid_side);
  return inst;
}

/// rNN instance with several test points and a joint budget e in 1..max_budget.
/// Each test location gets a home label and the training points are placed
/// within the radius of a random test location, mostly carrying its home
/// label, so that the points compete with different predicted labels.
inline Instance random_joint_instance(std::uint64_t seed, const SweepLimits& lim) {
  Rng rng(seed);
  Instance inst;
  inst.seed = seed;
  const int classes = static_cast<int>(detail::pick(rng, 2, 3));
  inst.clf = Classifier::rnn(static_cast<double>(detail::pick(rng, 1, 2)));
  const auto m = static_cast<std::size_t>(detail::pick(rng, static_cast<std::int64_t>(lim.joint_points_min),
                                                       static_cast<std::int64_t>(lim.joint_points_max)));
  std::vector<std::array<double, 2>> sites(m);
  std::vector<int> home(m);
  const auto first_home = detail::pick(rng, 0, classes - 1);
  for (std::size_t i = 0; i < m; ++i) {
    sites[i] = {double(detail::pick(rng, 0, lim.grid_side - 1)), double(detail::pick(rng, 0, lim.grid_side - 1))};
    home[i] = static_cast<int>((first_home + static_cast<std::int64_t>(i)) % classes) + 1;
  }
  const auto n = static_cast<std::size_t>(detail::pick(rng, 2, lim.max_train));
  inst.train = Dataset(2, classes);
  for (std::size_t j = 0; j < n; ++j) {
    const auto site = static_cast<std::size_t>(detail::pick(rng, 0, static_cast<std::int64_t>(m) - 1));
    double f[2];
    do {
      f[0] = double(detail::pick(rng, 0, lim.grid_side - 1));
      f[1] = double(detail::pick(rng, 0, lim.grid_side - 1));
    } while (std::abs(f[0] - sites[site][0]) + std::abs(f[1] - sites[site][1]) > inst.clf.r);
    int label = home[site];
    if (detail::pick(rng, 0, 3) == 0) label = static_cast<int>(detail::pick(rng, 1, classes));
    inst.train.push_back(f, LabelId{label});
  }
  inst.tests = TestSet(2, classes);
  const RankedDataset ranked(inst.train);
  for (std::size_t i = 0; i < m; ++i) {
    LabelId y = classify(ranked, sites[i], inst.clf);
    if (detail::pick(rng, 0, 3) == 0) y = LabelId{static_cast<int>(detail::pick(rng, 1, classes))};
    inst.tests.push_back(sites[i], y);
  }
  inst.e = detail::pick(rng, 1, lim.max_budget);
  return inst;
}

inline AttackSpace attack_space_for(const Instance& inst, const SweepLimits& lim) {
  AttackSpace s;
  s.base = inst.train;
  s.pool = grid_pool(lim.grid_side, inst.train.num_classes());
  s.budget = lim.max_budget;
  s.min_size = inst.clf.algo == Algorithm::knn ? inst.clf.k : 0;
  return s;
}

struct InstanceSummary {
  std::uint64_t seed = 0;
  std::string kind;  // "individual" or "joint"
  Classifier clf;
  int classes = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::int64_t e = 0;
  std::vector<std::int64_t> e_stars;
  std::string island_bound;
  std::string rd_bound;
  std::string individual_bound;
  std::uint64_t datasets_checked = 0;
  std::size_t violations = 0;
};

struct SweepReport {
  std::uint64_t seed = 0;
  std::size_t individual_instances = 0;
  std::size_t joint_instances = 0;
  std::int64_t budget_offset = 0;
  SweepLimits limits;
  std::uint64_t datasets_enumerated = 0;
  std::size_t certificates_checked = 0;
  std::size_t capped_certificates = 0;
  std::size_t joint_improvements = 0;  // joint instances whose ISLAND bound beats the individual bound
  std::vector<InstanceSummary> instances;
  std::vector<Violation> violations;  // sorted

  bool ok() const { return violations.empty(); }
};

/// Seeded soundness sweep. Instance seeds are drawn from `seed` in order, so
/// any instance can be replayed from the report.
inline SweepReport run_sweep(std::uint64_t seed, std::size_t individual_instances, std::size_t joint_instances,
                             const SweepLimits& lim = {}, std::int64_t budget_offset = 0) {
  SweepReport rep;
  rep.seed = seed;
  rep.individual_instances = individual_instances;
  rep.joint_instances = joint_instances;
  rep.budget_offset = budget_offset;
  rep.limits = lim;
  Rng master(seed);

  for (std::size_t i = 0; i < individual_instances; ++i) {
    const auto inst = random_individual_instance(master(), lim);
    const auto space = attack_space_for(inst, lim);
    InstanceSummary sum{inst.seed, "individual", inst.clf, inst.train.num_classes(), inst.train.size(),
                        inst.tests.size(), 0, {}, {}, {}, {}, 0, 0};
    for (std::size_t t = 0; t < inst.tests.size(); ++t) {
      auto r = verify_individual(space, inst.tests.features(t), inst.tests.label(t), inst.clf, budget_offset,
                                 inst.seed, t);
      sum.e_stars.push_back(r.cert.e_star);
      sum.datasets_checked += r.datasets_checked;
      sum.violations += r.violations.size();
      rep.certificates_checked += 1;
      rep.capped_certificates += r.capped ? 1 : 0;
      rep.violations.insert(rep.violations.end(), r.violations.begin(), r.violations.end());
    }
    rep.datasets_enumerated += sum.datasets_checked;
    rep.instances.push_back(std::move(sum));
  }

  for (std::size_t i = 0; i < joint_instances; ++i) {
    const auto inst = random_joint_instance(master(), lim);
    const auto space = attack_space_for(inst, lim);
    InstanceSummary sum{inst.seed, "joint", inst.clf, inst.train.num_classes(), inst.train.size(),
                        inst.tests.size(), inst.e, {}, {}, {}, {}, 0, 0};
    for (Method g : {Method::joint_island, Method::joint_rd}) {
      auto r = verify_joint(space, inst.tests, inst.clf, g, inst.e, inst.seed, inst.seed, budget_offset);
      (g == Method::joint_island ? sum.island_bound : sum.rd_bound) = to_decimal6(r.joint_bound);
      sum.individual_bound = to_decimal6(r.individual_bound);
      if (g == Method::joint_island && r.joint_bound > r.individual_bound) ++rep.joint_improvements;
      sum.datasets_checked += r.datasets_checked;
      sum.violations += r.violations.size();
      rep.certificates_checked += r.groups.size();
      rep.violations.insert(rep.violations.end(), r.violations.begin(), r.violations.end());
    }
    for (const auto& c : individual_certs(tally_all(RankedDataset(inst.train), inst.tests, inst.clf, 1), inst.tests))
      sum.e_stars.push_back(c.e_star);
    rep.datasets_enumerated += sum.datasets_checked;
    rep.instances.push_back(std::move(sum));
  }
  std::sort(rep.violations.begin(), rep.violations.end());
  return rep;
}

}  // namespace nncert::oracle
