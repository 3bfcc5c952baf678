#pragma once

#include "geoleak/attribution.hpp"
#include "geoleak/clustering.hpp"
#include "geoleak/extraction.hpp"
#include "geoleak/poi_metrics.hpp"
#include "geoleak/validation.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace geoleak {

struct PipelineConfig {
    ExtractionConfig extraction;
    LabelingConfig labeling;
    ClusterConfig cluster;
    double match_dist_m = 500.0;
    int tfidf_top_k = 3;
    std::string installs_path;   // empty: skip app attribution
    std::string categories_path; // empty: hosts stay unclassified
    std::string geocoder_path;   // empty: no semantic variant
};

// Per-user slice of the full analysis. Traffic clustering runs on every
// in-fence observation regardless of label ("incremental", "dbscan",
// "stdbscan"), plus the confirmed-only variant ("incremental_true") and,
// with a geocoder, highway-filtered variants ("*_semantic").
struct UserAnalysis {
    std::string user_id;
    std::vector<GeoObservation> labeled;
    LeakageStats stats;
    std::vector<POI> benchmark;                       // incremental on agent data
    std::map<std::string, std::vector<POI>> traffic;  // by algorithm
    std::map<std::string, ScoreReport> scores;        // by algorithm
    double total_dwell_ms = 0.0;                      // benchmark dwell sum
    std::map<std::string, double> matched_dwell_ms;   // by algorithm
};

struct PipelineResult {
    FunnelCounts funnel;
    std::vector<UserAnalysis> users;           // sorted by user_id
    std::vector<GeoObservation> observations;  // all users, labeled
    std::vector<LeakageStats> stats;
    std::vector<RegressionRow> rows;           // users with agent data
    std::optional<RegressionFit> fit;
    HostExtraction hosts;
    std::optional<TfidfMatrix> tfidf;
    InstallTable installs;
    nlohmann::json report; // consolidated, stable-ordered
};

/// The full chain: extract, label, stats, cluster, match, attribute,
/// regress. ingest_skipped is carried into the report for visibility.
/// Per-user stages run in parallel under the GEOLEAK_THREADS cap.
PipelineResult run_pipeline(std::vector<PacketRecord> records,
                            std::vector<LocationSample> agent_samples,
                            const PipelineConfig& cfg, std::size_t ingest_skipped = 0);

/// Writes every report artifact into out_dir and returns the written paths.
/// A failure removes whatever was already written before rethrowing, so no
/// partial report survives.
std::vector<std::string> write_report(const PipelineResult& result,
                                      const std::string& out_dir);

} // namespace geoleak
