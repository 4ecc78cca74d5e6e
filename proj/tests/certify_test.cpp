#include <map>
#include <set>

#include "test_util.hpp"

namespace nncert {
namespace {

using testing::cert;

TEST(EStar, Examples) {
  EXPECT_EQ(cert(0, 1, 2, 10, 4, 1).e_star, 2);
  EXPECT_EQ(cert(0, 3, 2, 5, 5, 3).e_star, 0);
  EXPECT_EQ(cert(0, 2, 7, 6, 5, 2).e_star, 0);
}

TEST(EStar, NonNegativeForEveryTally) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> counts(2 + rng() % 5);
    for (auto& v : counts) v = static_cast<int>(rng() % 12);
    const auto c = individual_cert(tally_from_counts(counts, Algorithm::knn), LabelId{1});
    EXPECT_GE(c.e_star, 0);
    // e_star is the largest e with 2e < gap + I(a > b)
    EXPECT_LT(2 * c.e_star, c.gap() + c.tie_bonus());
    EXPECT_GE(2 * (c.e_star + 1), c.gap() + c.tie_bonus());
  }
}

TEST(IndividualCa, Examples) {
  const std::vector<IndividualCert> certs{cert(0, 1, 2, 5, 0, 1), cert(1, 1, 2, 5, 0, 1), cert(2, 1, 2, 1, 0, 1)};
  ASSERT_EQ(certs[0].e_star, 2);
  ASSERT_EQ(certs[2].e_star, 0);
  EXPECT_EQ(individual_ca(certs, 1), Fraction(2, 3));
  EXPECT_EQ(individual_ca(certs, 0), Fraction(1));
  const std::vector<IndividualCert> wrong{cert(0, 1, 2, 5, 0, 2), cert(1, 2, 1, 3, 0, 1)};
  for (std::int64_t e : {0, 1, 5}) EXPECT_EQ(individual_ca(wrong, e), Fraction(0));
  EXPECT_THROW_CODE(individual_ca(std::span<const IndividualCert>{}, 0), ErrorCode::empty_test_set);
}

// Theorem 3 evaluated from the attacker's side: the most members an attacker
// can flip is the largest count whose cheapest costs fit in e, so w - 1 is m
// minus that count.
std::size_t reference_w(std::vector<IndividualCert> g, std::int64_t e) {
  std::vector<std::int64_t> costs;
  for (const auto& c : g) costs.push_back(c.correct ? std::max<std::int64_t>(c.gap() - e + c.tie_bonus(), 0) : 0);
  std::sort(costs.begin(), costs.end());
  std::size_t flipped = 0;
  std::int64_t spent = 0;
  for (auto c : costs) {
    if (spent + c > e) break;
    spent += c;
    ++flipped;
  }
  return g.size() - flipped + 1;
}

TEST(JointGroupBound, EqualKeysDifferentTieBonus) {
  // both correct with gap 2; the a < b member flips at e = 1, the a > b one
  // does not, so at most one of the two is guaranteed
  const Group g{{cert(0, 1, 3, 2, 0, 1), cert(1, 3, 2, 2, 0, 3)}};
  EXPECT_EQ(joint_group_bound(g, 1).w, 2u);
  const Group swapped{{cert(0, 3, 2, 2, 0, 3), cert(1, 1, 3, 2, 0, 1)}};
  EXPECT_EQ(joint_group_bound(swapped, 1).w, 2u);
}

// Theorem 3 evaluated straight from its definition on a cost-ordered group.
std::size_t definition_w(std::vector<IndividualCert> g, std::int64_t e) {
  std::stable_sort(g.begin(), g.end(), [e](const auto& x, const auto& y) {
    const auto cx = x.correct ? std::max<std::int64_t>(x.gap() - e + x.tie_bonus(), 0) : 0;
    const auto cy = y.correct ? std::max<std::int64_t>(y.gap() - e + y.tie_bonus(), 0) : 0;
    return cx > cy;
  });
  const std::size_t m = g.size();
  for (std::size_t w = 1; w <= m + 1; ++w) {
    std::int64_t total = 0;
    for (std::size_t i = w - 1; i < m; ++i)
      if (g[i].correct) total += std::max<std::int64_t>(g[i].gap() - e + g[i].tie_bonus(), 0);
    if (total <= e) return w;
  }
  return m + 1;
}

TEST(JointGroupBound, ThreeMemberExample) {
  // c = 4 so that the three predicted labels can be distinct
  const Group g{{cert(0, 1, 2, 7, 0, 1), cert(1, 3, 2, 3, 0, 3), cert(2, 2, 3, 1, 0, 2)}};
  ASSERT_EQ(g.members[1].tie_bonus(), 1);
  ASSERT_EQ(g.members[0].tie_bonus(), 0);
  const auto b = joint_group_bound(g, 2);
  EXPECT_EQ(b.w, 2u);
  EXPECT_EQ(b.mu, Fraction(1, 3));
}

TEST(JointGroupBound, SingletonAndMisclassified) {
  const auto b = joint_group_bound(Group{{cert(0, 1, 2, 9, 0, 1)}}, 2);
  EXPECT_EQ(b.w, 2u);
  EXPECT_EQ(b.mu, Fraction(1));
  const auto z = joint_group_bound(Group{{cert(0, 1, 2, 4, 0, 2), cert(1, 2, 1, 6, 0, 1)}}, 1);
  EXPECT_EQ(z.w, 1u);
  EXPECT_EQ(z.mu, Fraction(0));
}

TEST(JointGroupBound, Errors) {
  EXPECT_THROW_CODE(joint_group_bound(Group{{cert(0, 1, 2, 3, 0, 1), cert(1, 1, 2, 2, 0, 1)}}, 1),
                    ErrorCode::duplicate_predicted_label);
  auto k = cert(0, 1, 2, 3, 0, 1);
  k.algo = Algorithm::knn;
  EXPECT_THROW_CODE(joint_group_bound(Group{{k}}, 1), ErrorCode::knn_not_supported);
  EXPECT_THROW_CODE(joint_group_bound(Group{}, 1), ErrorCode::invalid_argument);
}

std::vector<IndividualCert> random_certs(std::mt19937_64& rng, std::size_t n, int c) {
  std::vector<IndividualCert> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> counts(static_cast<std::size_t>(c));
    for (auto& v : counts) v = static_cast<int>(rng() % 30);
    const auto t = tally_from_counts(counts, Algorithm::rnn);
    const LabelId y = (rng() % 4 != 0) ? t.a : LabelId{1 + static_cast<int>(rng() % c)};
    out.push_back(individual_cert(t, y, i));
  }
  return out;
}

TEST(JointGroupBound, MatchesReference) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 5);
    auto certs = random_certs(rng, 12, c);
    const auto groups = group_rd(certs, c, rng());
    const std::int64_t e = static_cast<std::int64_t>(rng() % 15);
    for (const auto& g : groups) {
      const auto b = joint_group_bound(g, e);
      EXPECT_EQ(b.w, reference_w(g.members, e));
      EXPECT_EQ(b.w, definition_w(g.members, e));
      EXPECT_EQ(b.mu, Fraction(static_cast<std::int64_t>(b.w - 1), static_cast<std::int64_t>(g.size())));
    }
  }
}

TEST(JointGroupBound, SingletonMatchesTheoremOne) {
  std::mt19937_64 rng(43);
  for (const auto& c : random_certs(rng, 300, 4)) {
    for (std::int64_t e = 0; e < 16; ++e) {
      const auto b = joint_group_bound(Group{{c}}, e);
      EXPECT_EQ(b.mu == Fraction(1), c.certified_at(e)) << "e=" << e;
    }
  }
}

void expect_partition(const std::vector<Group>& groups, std::size_t n) {
  std::set<std::size_t> seen;
  for (const auto& g : groups) {
    std::set<int> labels;
    for (const auto& c : g.members) {
      EXPECT_TRUE(seen.insert(c.test_index).second);
      EXPECT_TRUE(labels.insert(c.a.value).second);
    }
  }
  EXPECT_EQ(seen.size(), n);
}

TEST(GroupRd, Examples) {
  std::vector<IndividualCert> same;
  for (std::size_t i = 0; i < 5; ++i) same.push_back(cert(i, 3, 1, 4, 1, 3));
  EXPECT_EQ(group_rd(same, 4, 9).size(), 5u);
  std::vector<IndividualCert> distinct;
  for (int l = 1; l <= 10; ++l) distinct.push_back(cert(static_cast<std::size_t>(l - 1), l, l == 1 ? 2 : 1, 4, 1, l));
  EXPECT_EQ(group_rd(distinct, 10, 9).size(), 1u);
}

TEST(GroupRd, PartitionAndDeterminism) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 9);
    const auto certs = random_certs(rng, 1 + rng() % 40, c);
    const auto seed = rng();
    const auto g1 = group_rd(certs, c, seed);
    expect_partition(g1, certs.size());
    const auto g2 = group_rd(certs, c, seed);
    ASSERT_EQ(g1.size(), g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i)
      for (std::size_t j = 0; j < g1[i].size(); ++j)
        EXPECT_EQ(g1[i].members[j].test_index, g2[i].members[j].test_index);
    // the greedy rule needs exactly as many groups as the most frequent label
    std::map<int, std::size_t> freq;
    for (const auto& x : certs) ++freq[x.a.value];
    std::size_t most = 0;
    for (auto [l, n] : freq) most = std::max(most, n);
    EXPECT_EQ(g1.size(), most);
  }
}

TEST(GroupIsland, FourExampleCase) {
  const std::vector<IndividualCert> certs{cert(0, 1, 2, 5, 0, 1), cert(1, 2, 1, 3, 0, 1), cert(2, 2, 1, 1, 0, 2),
                                          cert(3, 1, 2, 2, 0, 1)};
  ASSERT_EQ(certs[0].e_star, 2);
  const auto groups = group_island(certs, 1);
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0].members[0].test_index, 0u);
  EXPECT_EQ(groups[1].members[0].test_index, 1u);
  ASSERT_EQ(groups[2].size(), 2u);
  EXPECT_EQ(groups[2].members[0].test_index, 3u);
  EXPECT_EQ(groups[2].members[1].test_index, 2u);
  const auto b = joint_group_bound(groups[2], 1);
  EXPECT_EQ(b.w, 2u);
  EXPECT_EQ(b.mu, Fraction(1, 2));
  EXPECT_EQ(joint_ca(groups, 1, certs.size()), Fraction(1, 2));
  EXPECT_EQ(individual_ca(certs, 1), Fraction(1, 4));
}

TEST(GroupIsland, TrivialCases) {
  EXPECT_TRUE(group_island({}, 3).empty());
  std::vector<IndividualCert> strong;
  for (int l = 1; l <= 3; ++l) strong.push_back(cert(static_cast<std::size_t>(l - 1), l, l == 1 ? 2 : 1, 20, 0, l));
  const auto groups = group_island(strong, 2);
  EXPECT_EQ(groups.size(), 3u);
  EXPECT_EQ(joint_ca(groups, 2, 3), individual_ca(strong, 2));
}

TEST(JointCa, Examples) {
  const Group g{{cert(0, 1, 2, 7, 0, 1), cert(1, 3, 2, 3, 0, 3), cert(2, 2, 3, 1, 0, 2)}};
  EXPECT_EQ(joint_ca(std::vector<Group>{g}, 2), Fraction(1, 3));
  std::mt19937_64 rng(45);
  const auto certs = random_certs(rng, 30, 3);
  std::vector<Group> singles;
  for (const auto& c : certs) singles.push_back(Group{{c}});
  for (std::int64_t e = 0; e < 20; ++e) EXPECT_EQ(joint_ca(singles, e, certs.size()), individual_ca(certs, e));
}

TEST(JointCa, RejectsNonPartition) {
  const auto a = cert(0, 1, 2, 3, 0, 1), b = cert(1, 2, 1, 3, 0, 2);
  EXPECT_THROW_CODE(joint_ca(std::vector<Group>{Group{{a}}, Group{{a, b}}}, 1), ErrorCode::groups_not_partition);
  EXPECT_THROW_CODE(joint_ca(std::vector<Group>{Group{{a}}}, 1, 2), ErrorCode::groups_not_partition);
}

TEST(Curve, JointDominatesAndIsMonotone) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 60; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 9);
    const auto certs = random_certs(rng, 1 + rng() % 60, c);
    const auto grid = e_grid(30, 1);
    for (auto method : {Method::joint_rd, Method::joint_island}) {
      const auto pts = curve_from_certs(certs, c, grid, method, rng(), 3);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        ASSERT_TRUE(pts[i].ca_joint);
        EXPECT_GE(*pts[i].ca_joint, pts[i].ca_individual);
        if (i > 0) {
          EXPECT_LE(pts[i].ca_individual, pts[i - 1].ca_individual);
          EXPECT_LE(*pts[i].ca_joint, *pts[i - 1].ca_joint);
        }
      }
      // island output is a partition at every e
      for (std::int64_t e : {0, 3, 11}) expect_partition(group_island(certs, e), certs.size());
    }
  }
}

TEST(Curve, ZeroIsCleanAccuracy) {
  std::mt19937_64 rng(47);
  const auto certs = random_certs(rng, 50, 5);
  std::int64_t correct = 0;
  for (const auto& c : certs) correct += c.correct;
  const std::int64_t zero[] = {0};
  const auto pts = curve_from_certs(certs, 5, zero, Method::individual, 0);
  EXPECT_EQ(pts[0].ca_individual, Fraction(correct, 50));
  EXPECT_FALSE(pts[0].ca_joint);
}

TEST(Curve, KnnJointRejected) {
  auto c = cert(0, 1, 2, 3, 0, 1);
  c.algo = Algorithm::knn;
  const std::vector<IndividualCert> certs{c};
  const std::int64_t zero[] = {0};
  EXPECT_THROW_CODE(curve_from_certs(certs, 2, zero, Method::joint_island, 0), ErrorCode::knn_not_supported);
}

TEST(Curve, CsvFormat) {
  const std::vector<CurvePoint> pts{{0, Fraction(2, 3), std::nullopt, 3}, {10, Fraction(1, 8), Fraction(1, 2), 8}};
  std::ostringstream os;
  write_curve_csv(os, pts);
  EXPECT_EQ(os.str(), "e,ca_individual,ca_joint,n_test\n0,0.666667,,3\n10,0.125000,0.500000,8\n");
}

TEST(Decimal, RoundsHalfUp) {
  EXPECT_EQ(to_decimal6(Fraction(1, 3)), "0.333333");
  EXPECT_EQ(to_decimal6(Fraction(2, 3)), "0.666667");
  EXPECT_EQ(to_decimal6(Fraction(1, 2000000)), "0.000001");
  EXPECT_EQ(to_decimal6(Fraction(1)), "1.000000");
  EXPECT_EQ(to_decimal6(Fraction(0)), "0.000000");
}

}  // namespace
}  // namespace nncert
