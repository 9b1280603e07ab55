#include "cdrive/cwnet/concepts.hpp"

#include <map>
#include <stdexcept>

namespace cdrive::cwnet {

ConceptSchema ConceptSchema::dataset1() {
  ConceptSchema s;
  s.tag = "dataset1";
  s.groups = {{"steering", {"LEFT", "RIGHT", "STRAIGHT"}}, {"speed", {"STOPPED", "SLOW"}}};
  s.binaries = {"ASV", "INTERSECTION", "CLOSE"};
  return s;
}

ConceptSchema ConceptSchema::dataset2() {
  ConceptSchema s;
  s.tag = "dataset2";
  s.binaries = {"SLOW",         "STOPPED",    "FAST",      "STOP_SIGN", "TRAFFIC_LIGHT",
                "INTERSECTION", "PEDESTRIAN", "FOLLOWING", "BIKE",      "PUDO"};
  return s;
}

ConceptSchema ConceptSchema::by_tag(const std::string& tag) {
  if (tag == "dataset1") return dataset1();
  if (tag == "dataset2") return dataset2();
  throw std::invalid_argument("unknown concept schema '" + tag + "'");
}

int ConceptSchema::logit_count() const {
  int n = static_cast<int>(binaries.size());
  for (const auto& g : groups) n += static_cast<int>(g.members.size());
  return n;
}

int ConceptSchema::group_start(int g) const {
  int n = 0;
  for (int i = 0; i < g; ++i) n += static_cast<int>(groups[i].members.size());
  return n;
}

int ConceptSchema::binary_start() const { return group_start(static_cast<int>(groups.size())); }

std::vector<std::string> ConceptSchema::names() const {
  std::vector<std::string> out;
  for (const auto& g : groups) out.insert(out.end(), g.members.begin(), g.members.end());
  out.insert(out.end(), binaries.begin(), binaries.end());
  return out;
}

int ConceptSchema::column_of(const std::string& name) const {
  const auto all = names();
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i] == name) return static_cast<int>(i);
  return -1;
}

std::string concept_description(const std::string& name) {
  static const std::map<std::string, std::string> phrases{
      {"LEFT", "the road ahead turns left"},
      {"RIGHT", "the road ahead turns right"},
      {"STRAIGHT", "the road ahead continues straight"},
      {"STOPPED", "we need to remain stopped"},
      {"SLOW", "we should drive slowly"},
      {"FAST", "the road ahead is clear to drive faster"},
      {"ASV", "we are approaching a stopped vehicle"},
      {"INTERSECTION", "we are in an intersection"},
      {"CLOSE", "we are close to another vehicle"},
      {"STOP_SIGN", "we are close to a stop sign"},
      {"TRAFFIC_LIGHT", "we are close to a traffic light"},
      {"PEDESTRIAN", "we are close to a pedestrian"},
      {"FOLLOWING", "we are following a vehicle"},
      {"BIKE", "we are close to a cyclist"},
      {"PUDO", "we are in a pickup and drop-off zone"},
  };
  const auto it = phrases.find(name);
  return it == phrases.end() ? "the " + name + " concept is active" : it->second;
}

}  // namespace cdrive::cwnet
