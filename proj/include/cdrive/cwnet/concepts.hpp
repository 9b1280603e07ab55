#pragma once

#include <string>
#include <vector>

namespace cdrive::cwnet {

/// Named concepts laid out as logit columns: softmax groups first, in order,
/// then the binary concepts.
struct ConceptSchema {
  struct Group {
    std::string name;
    std::vector<std::string> members;
  };

  std::string tag;  // "dataset1" | "dataset2"
  std::vector<Group> groups;
  std::vector<std::string> binaries;

  static ConceptSchema dataset1();
  static ConceptSchema dataset2();
  /// Throws std::invalid_argument for an unknown tag.
  static ConceptSchema by_tag(const std::string& tag);

  int logit_count() const;
  int group_start(int g) const;
  int binary_start() const;
  /// Every concept name in column order.
  std::vector<std::string> names() const;
  /// Column of a concept name; -1 when absent.
  int column_of(const std::string& name) const;
  bool operator==(const ConceptSchema&) const = default;
};

/// Per-candidate labels: one member index per group, one 0/1 per binary.
struct ConceptLabels {
  int candidates = 0;
  int groups = 0;
  int binaries = 0;
  std::vector<int> group;   // candidates x groups, row-major
  std::vector<int> binary;  // candidates x binaries, row-major

  int group_label(int i, int g) const { return group[i * groups + g]; }
  int binary_label(int i, int b) const { return binary[i * binaries + b]; }
  bool operator==(const ConceptLabels&) const = default;
};

/// Human-readable phrase completing "based on recognizing that ...".
std::string concept_description(const std::string& name);

}  // namespace cdrive::cwnet
