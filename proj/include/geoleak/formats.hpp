#pragma once

#include "geoleak/attribution.hpp"
#include "geoleak/clustering.hpp"
#include "geoleak/poi_metrics.hpp"
#include "geoleak/synthesis.hpp"
#include "geoleak/validation.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace geoleak {

// File formats shared by the CLI subcommands. Writers are deterministic:
// sorted keys, fixed column orders, no timestamps. Readers throw
// std::runtime_error naming the path and line on malformed input.

// agent CSV: header user_id,ts_ms,lat,lon
void write_agent_csv(const std::string& path, const std::vector<LocationSample>& samples);
std::vector<LocationSample> read_agent_csv(const std::string& path);

// observations JSONL, one object per line
nlohmann::json observation_to_json(const GeoObservation& obs);
GeoObservation observation_from_json(const nlohmann::json& j);
void write_observations(const std::string& path, const std::vector<GeoObservation>& obs);
std::vector<GeoObservation> read_observations(const std::string& path);

// POIs as one JSON array
nlohmann::json poi_to_json(const POI& poi);
POI poi_from_json(const nlohmann::json& j);
void write_pois_json(const std::string& path, const std::vector<POI>& pois);
std::vector<POI> read_pois_json(const std::string& path);

nlohmann::json leakage_stats_to_json(const LeakageStats& stats);
void write_stats_csv(const std::string& path, const std::vector<LeakageStats>& stats);

// regression rows CSV: header coverage,leak_rate,relative_stdev,weighted_discovery
void write_regression_rows_csv(const std::string& path,
                               const std::vector<RegressionRow>& rows);
std::vector<RegressionRow> read_regression_rows_csv(const std::string& path);

nlohmann::json regression_fit_to_json(const RegressionFit& fit);

// host table CSV: host,users,leak_events,avg_events_per_user,category,suspicious
void write_hosts_csv(const std::string& path, const std::vector<HostStats>& hosts);

// tf-idf CSV: app_id,host,tf,idf,raw,score
void write_tfidf_csv(const std::string& path, const TfidfMatrix& matrix,
                     const InstallTable& installs, const std::vector<HostStats>& hosts);

// scenario config JSON; unknown keys are config errors
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json scenario_config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario_config(const std::string& path);

void write_ground_truth_json(const std::string& path, const GroundTruth& gt);

} // namespace geoleak
