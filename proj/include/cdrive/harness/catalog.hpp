#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdrive/world/world.hpp"

namespace cdrive::harness {

// Named closed-loop scenarios:
//   empty            straight road, no agents
//   parked_row_pudo  goal inside a pickup/drop-off zone lined with parked cars
//   cone_phantom     a lone cone at the right lane edge
//   cyclist_unseen   a slow cyclist ahead in the ego lane
//   nominal/<i>      i-th procedural scenario of the nominal suite
// Seed 0 gives the canonical layout; other seeds jitter speeds and gaps.
std::vector<std::string> catalog_names();
/// Throws std::invalid_argument for an unknown name.
world::Scenario catalog_scenario(const std::string& name, std::uint64_t seed = 0);

/// `count` nominal scenarios drawn from `seed`.
std::vector<world::Scenario> nominal_suite(int count, std::uint64_t seed);

/// Catalog name, or a scenario file path when `name_or_path` is not in the catalog.
world::Scenario resolve_scenario(const std::string& name_or_path, std::uint64_t seed = 0);

}  // namespace cdrive::harness
