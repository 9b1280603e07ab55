#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdrive/cwnet/concepts.hpp"
#include "cdrive/data/expert.hpp"
#include "cdrive/data/labeler.hpp"
#include "cdrive/data/suite.hpp"
#include "cdrive/trajgen/trajgen.hpp"

namespace cdrive::data {

struct DatasetRecord {
  int index = 0;
  int scenario = 0;   // key into Dataset::scenarios
  double time = 0.0;  // s since scenario start
  world::SceneContext scene;  // ground truth, every category
  trajgen::CandidateSet candidates;
  trajgen::Trajectory expert_future;
  std::map<std::string, cwnet::ConceptLabels> labels;  // by schema tag
  std::optional<int> blackbox_choice;
  bool holdout = false;

  const cwnet::ConceptLabels& labels_for(const std::string& tag) const;
};

struct DatasetHeader {
  int version = 1;
  std::uint64_t seed = 0;
  std::string suite;
  double holdout_fraction = 0.05;
  trajgen::TrajGenParams trajgen;
};

struct Dataset {
  DatasetHeader header;
  std::map<int, world::Scenario> scenarios;
  std::vector<DatasetRecord> records;

  std::vector<const DatasetRecord*> split(bool holdout) const;
};

struct GenerateConfig {
  std::string suite = "full";
  std::uint64_t seed = 0;
  int n_records = 1000;
  double sim_dt = 0.1;
  int record_stride = 1;  // 1 keeps every planning cycle (2 Hz)
  double holdout_fraction = 0.05;
  ExpertConfig expert;
  LabelerConfig labeler;
  trajgen::TrajGenParams trajgen;
};

struct GenerationReport {
  int scenarios_run = 0;
  int scenarios_skipped = 0;
  std::vector<std::string> messages;
};

/// Drives the expert through suite scenarios and snapshots every planning
/// cycle. Scenarios whose expert run collides are skipped and reported.
/// Output depends only on the config (not on the thread count).
Dataset generate_dataset(const GenerateConfig& cfg, GenerationReport* report = nullptr);

/// Expert closed-loop run of one scenario, sampled every `dt` seconds for
/// `duration` seconds. Returns the ego states; throws std::runtime_error
/// when the run collides.
std::vector<world::EgoState> expert_rollout(const world::Scenario& scn, double duration, double dt, double sim_dt,
                                            const ExpertConfig& cfg = {});

/// Seed-stable scenario-level holdout assignment.
bool is_holdout(std::uint64_t seed, int scenario, double fraction);

class DatasetFormatError : public std::runtime_error {
 public:
  DatasetFormatError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// One JSON object per line after a "#cdrive-dataset 1 <header json>" line.
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);

}  // namespace cdrive::data
