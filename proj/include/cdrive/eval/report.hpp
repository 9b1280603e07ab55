#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cdrive/eval/analysis.hpp"
#include "cdrive/eval/metrics.hpp"

namespace cdrive::eval {

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const ConceptReport& r);
nlohmann::json to_json(const InterceptFit& f);
nlohmann::json to_json(const EffectStats& s);
nlohmann::json to_json(const DistributionReport& r);

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);
std::string format_concept_table(const ConceptReport& r);
std::string format_distribution_table(const DistributionReport& r);

std::vector<double> speed_profile(const harness::DriveLog& log);
/// Chosen-candidate activation per tick; NaN on ticks without activations.
std::vector<double> concept_series(const harness::DriveLog& log, const std::string& name);
/// Trailing mean over `window` samples, skipping NaN.
std::vector<double> rolling_mean(const std::vector<double>& x, int window);

/// time, tick, mode, speed, backstop, then one column per concept.
void write_timeseries_csv(std::ostream& out, const harness::DriveLog& log);

}  // namespace cdrive::eval
