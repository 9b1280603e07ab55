#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "cdrive/harness/sim.hpp"

namespace cdrive::harness {

inline constexpr int kWireVersion = 1;

nlohmann::json map_payload(const std::vector<world::MapElement>& map);

nlohmann::json hello_message(const Simulator& sim);

/// Latest tick (if any) plus the current world. The map geometry is included
/// only when `include_map` is set.
nlohmann::json snapshot_message(const Simulator& sim, bool include_map);

nlohmann::json ack_message(std::optional<long> seq, const std::string& kind, int applies_at_tick);
nlohmann::json error_message(std::optional<long> seq, const std::string& message);

/// Per-client map bookkeeping: the map goes out on the first snapshot and
/// whenever its version changes.
class TelemetryStream {
 public:
  nlohmann::json next(const Simulator& sim);

 private:
  int sent_version_ = -1;
};

}  // namespace cdrive::harness
