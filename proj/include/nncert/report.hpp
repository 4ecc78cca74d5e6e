#pragma once

#include <json.hpp>

#include "nncert/oracle.hpp"

namespace nncert::oracle {

inline nlohmann::ordered_json classifier_json(const Classifier& c) {
  nlohmann::ordered_json j;
  j["algo"] = std::string(to_string(c.algo));
  if (c.algo == Algorithm::knn)
    j["k"] = c.k;
  else
    j["r"] = c.r;
  return j;
}

inline nlohmann::ordered_json to_json(const Violation& v) {
  return {{"kind", v.kind},     {"instance_seed", v.instance_seed}, {"budget", v.budget},
          {"index", v.test_index}, {"attack", v.attack},          {"detail", v.detail}};
}

inline nlohmann::ordered_json to_json(const SweepReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["parameters"] = {{"individual_instances", r.individual_instances},
                     {"joint_instances", r.joint_instances},
                     {"grid_side", r.limits.grid_side},
                     {"max_train", r.limits.max_train},
                     {"max_budget", r.limits.max_budget},
                     {"budget_offset", r.budget_offset}};
  j["datasets_enumerated"] = r.datasets_enumerated;
  j["certificates_checked"] = r.certificates_checked;
  j["capped_certificates"] = r.capped_certificates;
  j["joint_improvements"] = r.joint_improvements;
  auto& inst = j["instances"] = nlohmann::ordered_json::array();
  for (const auto& s : r.instances) {
    nlohmann::ordered_json e;
    e["seed"] = s.seed;
    e["kind"] = s.kind;
    e["classifier"] = classifier_json(s.clf);
    e["classes"] = s.classes;
    e["n_train"] = s.n_train;
    e["n_test"] = s.n_test;
    e["e_stars"] = s.e_stars;
    if (s.kind == "joint") {
      e["e"] = s.e;
      e["individual_bound"] = s.individual_bound;
      e["island_bound"] = s.island_bound;
      e["rd_bound"] = s.rd_bound;
    }
    e["datasets_checked"] = s.datasets_checked;
    e["violations"] = s.violations;
    inst.push_back(std::move(e));
  }
  auto& vs = j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : r.violations) vs.push_back(to_json(v));
  return j;
}

}  // namespace nncert::oracle
