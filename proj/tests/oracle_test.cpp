#include <map>
#include <set>

#include "test_util.hpp"

namespace nncert {
namespace {

using oracle::AttackSpace;
using testing::make_dataset;

std::set<std::vector<std::vector<std::uint64_t>>> as_key_set(const std::vector<Dataset>& sets) {
  std::set<std::vector<std::vector<std::uint64_t>>> out;
  for (const auto& d : sets) out.insert(detail::sorted_keys(d));
  return out;
}

TEST(Enumerate, ZeroBudgetYieldsBase) {
  const auto base = make_dataset(2, {{{0, 0}, 1}, {{1, 0}, 2}});
  const auto all = oracle::enumerate_poisonings(AttackSpace{base, oracle::grid_pool(2, 2), 0});
  ASSERT_EQ(all.size(), 1u);
  EXPECT_TRUE(multiset_equal(all[0], base));
}

TEST(Enumerate, TwoPointsOnePoolElement) {
  const auto base = make_dataset(2, {{{0, 0}, 1}, {{1, 0}, 2}});
  const auto pool = make_dataset(2, {{{3, 3}, 1}});
  const auto all = oracle::enumerate_poisonings(AttackSpace{base, pool, 1});
  EXPECT_EQ(all.size(), 6u);
  EXPECT_EQ(as_key_set(all).size(), 6u);
  for (const auto& d : all) EXPECT_LE(poisoning_size(base, d), 1u);
}

// Every multiset over the universe (distinct base rows plus pool rows) of
// size up to |base| + budget, filtered by the poisoning-size definition. Rows
// missing from the pool can only keep their base multiplicity.
std::set<std::vector<std::vector<std::uint64_t>>> naive(const Dataset& base, const Dataset& pool, std::size_t budget) {
  Dataset universe(base.dim(), base.num_classes());
  std::map<std::vector<std::uint64_t>, std::size_t> cap;
  std::vector<std::vector<std::uint64_t>> order;
  const std::size_t unbounded = base.size() + budget;
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto key = detail::example_key(base, i);
    if (cap.emplace(key, 0).second) {
      order.push_back(key);
      universe.push_back(base.features(i), base.label(i));
    }
    ++cap[key];
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto key = detail::example_key(pool, i);
    if (!cap.count(key)) {
      order.push_back(key);
      universe.push_back(pool.features(i), pool.label(i));
    }
    cap[key] = unbounded;
  }
  std::set<std::vector<std::vector<std::uint64_t>>> out;
  std::vector<std::size_t> count(universe.size(), 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t u, std::size_t used) {
    if (u == universe.size()) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < count.size(); ++i) rows.insert(rows.end(), count[i], i);
      const auto d = universe.select(rows);
      if (poisoning_size(base, d) <= budget) out.insert(detail::sorted_keys(d));
      return;
    }
    for (std::size_t c = 0; c <= cap[order[u]] && used + c <= unbounded; ++c) {
      count[u] = c;
      rec(u + 1, used + c);
    }
    count[u] = 0;
  };
  rec(0, 0);
  return out;
}

TEST(Enumerate, MatchesNaiveUniverseSearch) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    Dataset base(2, 2);
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      const double f[] = {double(rng() % 2), 0};
      base.push_back(f, LabelId{1 + static_cast<int>(rng() % 2)});
    }
    Dataset pool(2, 2);
    for (int i = 0; i < 2; ++i) {
      const double f[] = {double(i), 0};
      pool.push_back(f, LabelId{1 + static_cast<int>(rng() % 2)});
    }
    const std::size_t budget = rng() % 3;
    const auto got = oracle::enumerate_poisonings(AttackSpace{base, pool, static_cast<std::int64_t>(budget)});
    const auto keys = as_key_set(got);
    EXPECT_EQ(keys.size(), got.size()) << "duplicate multiset";
    EXPECT_EQ(keys, naive(base, pool, budget));
  }
}

TEST(Enumerate, CeilingRaises) {
  AttackSpace s{make_dataset(2, {{{0, 0}, 1}, {{1, 0}, 2}, {{2, 0}, 2}}), oracle::grid_pool(4, 2), 2};
  s.ceiling = 10;
  EXPECT_THROW_CODE(oracle::enumerate_poisonings(s), ErrorCode::budget_too_large);
}

TEST(Enumerate, MinSizeSkipsSmallSets) {
  const auto base = make_dataset(2, {{{0, 0}, 1}, {{1, 0}, 2}});
  AttackSpace s{base, make_dataset(2, {{{3, 3}, 1}}), 1};
  s.min_size = 2;
  for (const auto& d : oracle::enumerate_poisonings(s)) EXPECT_GE(d.size(), 2u);
  EXPECT_EQ(oracle::enumerate_poisonings(s).size(), 4u);
}

TEST(BruteForce, AgreesWithLibraryOnBase) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset base(2, 3);
    for (int i = 0; i < 6; ++i) {
      const double f[] = {double(rng() % 4), double(rng() % 4)};
      base.push_back(f, LabelId{1 + static_cast<int>(rng() % 3)});
    }
    const AttackSpace s{base, oracle::grid_pool(4, 3), 0};
    const std::vector<double> x{double(rng() % 4), double(rng() % 4)};
    for (const auto& clf : {Classifier::knn(1), Classifier::knn(3), Classifier::rnn(1), Classifier::rnn(2)}) {
      const oracle::BruteForceClassifier brute(s, clf);
      oracle::for_each_poisoning(s, [&](const oracle::Poisoning& p) {
        EXPECT_EQ(brute.classify(p, x), classify(RankedDataset(base), x, clf));
      });
    }
  }
}

TEST(VerifyIndividual, TieFlipsWithOneModification) {
  // x sits on 6 votes for label 2 and 5 for label 7; label 2 < 7 so one
  // relabelled neighbour produces a 6-6 tie that label 7 wins
  Dataset base(2, 7);
  const double origin[] = {0, 0};
  for (int i = 0; i < 6; ++i) base.push_back(origin, LabelId{2});
  for (int i = 0; i < 5; ++i) base.push_back(origin, LabelId{7});
  Dataset pool(2, 7);
  for (int l = 1; l <= 7; ++l) pool.push_back(origin, LabelId{l});
  const AttackSpace s{base, pool, 1};
  const auto clf = Classifier::rnn(0);
  const std::vector<double> x{0, 0};

  const auto ok = oracle::verify_individual(s, x, LabelId{2}, clf);
  EXPECT_EQ(ok.cert.e_star, 0);
  EXPECT_TRUE(ok.violations.empty());
  EXPECT_EQ(ok.datasets_checked, 1u);

  const auto over = oracle::verify_individual(s, x, LabelId{2}, clf, 1);
  EXPECT_EQ(over.budget_checked, 1);
  EXPECT_FALSE(over.violations.empty());
  bool found_modification = false;
  for (const auto& v : over.violations)
    found_modification |= v.attack == "remove[5] add[(0,0)/7]";
  EXPECT_TRUE(found_modification);
}

TEST(VerifyIndividual, CertifiedPointSurvivesEveryAttack) {
  const auto base = make_dataset(2, {{{0, 0}, 1}, {{0, 1}, 1}, {{1, 0}, 1}, {{1, 1}, 1}, {{3, 3}, 2}});
  const AttackSpace s{base, oracle::grid_pool(4, 2), 2};
  const auto rep = oracle::verify_individual(s, std::vector<double>{0, 0}, LabelId{1}, Classifier::rnn(2));
  EXPECT_EQ(rep.cert.s_a, 4);
  EXPECT_EQ(rep.cert.e_star, 1);
  EXPECT_GT(rep.datasets_checked, 1u);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(VerifyJoint, IslandScenarioHoldsOnConcreteInstance) {
  Dataset train(2, 2);
  for (auto [x, y, l] : {std::tuple{1, 1, 1}, {0, 1, 1}, {2, 1, 1}, {1, 0, 1}, {1, 2, 1}, {3, 3, 2}}) {
    const double f[] = {double(x), double(y)};
    train.push_back(f, LabelId{l});
  }
  TestSet test(2, 2);
  for (auto [x, y, l] : {std::tuple{1, 1, 1}, {3, 2, 1}, {3, 3, 2}, {0, 0, 1}}) {
    const double f[] = {double(x), double(y)};
    test.push_back(f, LabelId{l});
  }
  const AttackSpace s{train, oracle::grid_pool(5, 2), 1};
  const auto rep = oracle::verify_joint(s, test, Classifier::rnn(1), Method::joint_island, 1);
  EXPECT_EQ(rep.individual_bound, Fraction(1, 4));
  EXPECT_EQ(rep.joint_bound, Fraction(1, 2));
  EXPECT_GE(Fraction(static_cast<std::int64_t>(rep.worst_correct), 4), rep.joint_bound);
  EXPECT_TRUE(rep.violations.empty());
  // the bound is attained
  EXPECT_EQ(rep.worst_correct, 2u);

  const auto rd = oracle::verify_joint(s, test, Classifier::rnn(1), Method::joint_rd, 1, 5);
  EXPECT_TRUE(rd.violations.empty());
  EXPECT_GE(rd.joint_bound, rd.individual_bound);
}

TEST(VerifyJoint, EqualKeyGroupIsNotOverclaimed) {
  // two correct points with equal vote gaps, one winning its tie and one not;
  // RD puts them in one group since their predicted labels differ
  Dataset train(2, 3);
  const double a[] = {0, 0}, b[] = {3, 3};
  for (int i = 0; i < 2; ++i) {
    train.push_back(a, LabelId{1});
    train.push_back(b, LabelId{3});
  }
  TestSet test(2, 3);
  test.push_back(a, LabelId{1});
  test.push_back(b, LabelId{3});
  const AttackSpace s{train, oracle::grid_pool(4, 3), 1};
  const auto rep = oracle::verify_joint(s, test, Classifier::rnn(1), Method::joint_rd, 1);
  ASSERT_EQ(rep.groups.size(), 1u);
  EXPECT_EQ(rep.worst_correct, 1u);
  EXPECT_EQ(rep.joint_bound, Fraction(1, 2));
  EXPECT_TRUE(rep.violations.empty());
}

TEST(VerifyJoint, KnnRejected) {
  const auto base = make_dataset(2, {{{0, 0}, 1}});
  const AttackSpace s{base, oracle::grid_pool(2, 2), 1};
  EXPECT_THROW_CODE(oracle::verify_joint(s, base, Classifier::knn(1), Method::joint_island, 1),
                    ErrorCode::knn_not_supported);
}

TEST(Sweep, SmallRunIsClean) {
  const auto rep = oracle::run_sweep(7, 15, 8);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.instances.size(), 23u);
  EXPECT_GT(rep.datasets_enumerated, 0u);
}

TEST(Sweep, OverclaimIsCaught) {
  const auto rep = oracle::run_sweep(7, 15, 8, {}, 1);
  EXPECT_FALSE(rep.ok());
}

TEST(Sweep, Reproducible) {
  const auto a = oracle::run_sweep(9, 5, 3), b = oracle::run_sweep(9, 5, 3);
  EXPECT_EQ(a.datasets_enumerated, b.datasets_enumerated);
  EXPECT_EQ(a.certificates_checked, b.certificates_checked);
}

}  // namespace
}  // namespace nncert
