#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdrive/cwnet/cwnet.hpp"
#include "cdrive/data/dataset.hpp"
#include "cdrive/harness/sim.hpp"
#include "cdrive/planner/planner.hpp"

namespace cdrive::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text; '#' starts a comment. Later keys override earlier ones.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Overwrite `target` when the key is present. Throw ConfigError on bad values.
  void read(const std::string& key, double& target);
  void read(const std::string& key, int& target);
  void read(const std::string& key, std::uint64_t& target);
  void read(const std::string& key, bool& target);
  void read(const std::string& key, std::string& target);

  /// Keys never read.
  std::vector<std::string> unused() const;

 private:
  const std::string* find(const std::string& key);
  std::map<std::string, std::string> entries_;
  std::set<std::string> used_;
};

/// Every tunable constant of the pipeline.
struct Settings {
  data::GenerateConfig gen;
  planner::ModelDims dims;
  planner::TrainConfig train;
  cwnet::CwTrainConfig cwnet;
  SimConfig sim;
  int eval_scenarios = 24;
  std::uint64_t eval_seed = 9001;
};

/// Applies every known key; throws ConfigError listing unknown keys.
void apply(Config& cfg, Settings& s);
/// The settings as config text (every key, current values).
std::string format_settings(const Settings& s);

}  // namespace cdrive::harness
