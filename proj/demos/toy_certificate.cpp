// Certifies a handful of 2-D test points against an rNN classifier, then
// lets the brute-force oracle try every poisoning of size <= 1.
#include <iostream>

#include "nncert/certify.hpp"
#include "nncert/oracle.hpp"

int main() {
  using namespace nncert;

  Dataset train(2, 2);
  for (auto [x, y, l] : {std::tuple{1, 1, 1}, {0, 1, 1}, {2, 1, 1}, {1, 0, 1}, {1, 2, 1}, {3, 3, 2}}) {
    const double f[2] = {double(x), double(y)};
    train.push_back(f, LabelId{l});
  }
  TestSet test(2, 2);
  for (auto [x, y, l] : {std::tuple{1, 1, 1}, {3, 2, 1}, {3, 3, 2}, {0, 0, 1}}) {
    const double f[2] = {double(x), double(y)};
    test.push_back(f, LabelId{l});
  }

  const auto clf = Classifier::rnn(1.0);
  const RankedDataset ranked(train);
  const auto certs = individual_certs(tally_all(ranked, test, clf), test);
  for (const auto& c : certs)
    std::cout << "test " << c.test_index << ": predicted " << c.a.value << " (true " << c.y.value
              << "), votes " << c.s_a << " vs " << c.s_b << ", certified up to e = " << c.e_star << '\n';

  const std::int64_t e = 1;
  const auto groups = group_island(certs, e);
  std::cout << "individual CA(" << e << ") >= " << to_decimal6(individual_ca(certs, e)) << '\n';
  std::cout << "joint CA(" << e << ") >= " << to_decimal6(joint_ca(groups, e, test.size())) << " over "
            << groups.size() << " groups\n";

  oracle::AttackSpace space{train, oracle::grid_pool(5, 2), e};
  const auto rep = oracle::verify_joint(space, test, clf, Method::joint_island, e);
  std::cout << "oracle: " << rep.datasets_checked << " poisoned training sets, worst accuracy "
            << rep.worst_correct << "/" << test.size() << ", violations " << rep.violations.size() << '\n';
  return rep.violations.empty() ? 0 : 1;
}
