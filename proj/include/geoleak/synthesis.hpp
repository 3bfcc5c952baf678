#pragma once

#include "geoleak/attribution.hpp"
#include "geoleak/clustering.hpp"
#include "geoleak/extraction.hpp"
#include "geoleak/geo.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace geoleak {

/// Deterministic randomness for scenario generation. All mappings from raw
/// mt19937_64 draws to values are hand-rolled here (53-bit uniform, rejection
/// integers, Knuth poisson), so identical seeds give identical outputs on any
/// conforming platform — std::*_distribution makes no such promise.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double u01(); // uniform [0, 1)
    double uniform_real(double lo, double hi);
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi); // inclusive
    bool bernoulli(double p);
    std::int64_t poisson(double lambda);

private:
    std::mt19937_64 engine_;
};

struct CountRange {
    int min = 1;
    int max = 1;
};

struct AppProfile {
    std::string app_id;
    double install_prob = 1.0;
    std::vector<std::string> hosts;
    double mean_leaks_per_hour = 0.0;
    double burst_on_prob = 1.0;  // P(off -> on) per hour
    double burst_off_prob = 0.0; // P(on -> off) per hour
    // Must contain {LAT} and {LON} exactly once; {HOST} is optional and
    // receives the picked host name.
    std::string payload_template =
        "GET /v1/loc?lat={LAT}&lon={LON} HTTP/1.1\r\nHost: {HOST}\r\n\r\n";
};

struct NoiseProfile {
    // Server-pushed recommendation coordinates: in-fence lat/lon pairs on
    // incoming packets, defeated by the outgoing filter.
    double incoming_coords_per_hour = 0.0;
    // Outgoing floats of the wrong digit width; never scan hits.
    double float_noise_per_hour = 0.0;
    std::string noise_host = "cdn.noise.example";
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    int n_users = 1;
    int days = 1;
    GeoFence fence = default_fence();
    CountRange pois_per_user{3, 5};
    TimestampMs agent_period_ms = 20 * 60 * 1000;
    double agent_availability = 0.7;
    std::vector<AppProfile> apps;
    NoiseProfile noise;
    // Schedule shape: leading anchors take these dwell fractions, every
    // remaining POI splits the rest evenly.
    double anchor_primary = 0.5;
    double anchor_secondary = 0.35;
    double transit_speed_kmh = 40.0;
    TimestampMs start_ts_ms = 1672617600000; // 2023-01-02T00:00:00Z
    Ipv4Cidr device_subnet{Ipv4Addr{0x0A080000u}, 16}; // 10.8.0.0/16
};

/// Throws std::invalid_argument naming the first offending field.
void validate_scenario_config(const ScenarioConfig& cfg);

struct PlantedPoi {
    GeoPoint center;
    double weight = 0.0;            // dwell fraction of the day
    TimestampMs dwell_ms_per_day = 0;
};

struct TrajectoryPoint {
    TimestampMs ts = 0;
    GeoPoint point;
};

struct UserTruth {
    std::vector<PlantedPoi> pois;
    std::vector<TrajectoryPoint> trajectory; // breakpoints, linear between
};

/// Position on a breakpoint trajectory, clamped to its time span.
GeoPoint position_at(const std::vector<TrajectoryPoint>& trajectory, TimestampMs ts);

enum class PacketKind { leak, noise_incoming, noise_float };

// One record per packet-log line, same order.
struct Provenance {
    std::string user_id;
    PacketKind kind = PacketKind::leak;
    std::string app_id; // empty for noise
    std::string host;   // empty for incoming noise
    bool true_location = false;
    GeoPoint planted; // coordinates carried by the payload, if any
};

struct GroundTruth {
    std::map<std::string, UserTruth> users;
    std::vector<Provenance> packets;
    std::map<std::string, std::set<std::string>> host_app; // planted apps per host
    InstallTable installs;
};

struct Scenario {
    GroundTruth truth;
    std::vector<LocationSample> agent_samples; // sorted by (user, ts)
    std::vector<PacketRecord> packets;         // sorted by ts; index == log line
};

/// Deterministically expands a config into trajectories, agent samples, and
/// a leaking packet stream. Draw order is fixed — per user: POI count, POI
/// positions (rejection-sampled ≥ 1 km apart), one install bernoulli per
/// app; then per day: agent keep/drop per tick, per installed app per hour a
/// burst transition plus poisson leak count plus per-leak time/host draws,
/// then per hour the noise counts and their fields.
Scenario generate_scenario(const ScenarioConfig& cfg);

/// Writes agent.csv, packets.jsonl, ground_truth.json, and installs.csv into
/// out_dir (which must exist). Byte-identical for identical scenarios.
void write_scenario(const Scenario& scenario, const std::string& out_dir);

struct ScenarioReport {
    std::int64_t planted_pois = 0;
    std::int64_t recovered_pois = 0;
    double poi_recall = 0.0;
    std::int64_t true_labels = 0;
    std::int64_t true_labels_genuine = 0;
    double label_accuracy = 1.0;
    std::int64_t hosts_checked = 0;
    std::int64_t hosts_correct = 0;
    double attribution_accuracy = 1.0;
};

/// Joins analysis outputs back to the ground truth: fraction of planted POIs
/// matched within match_dist by a discovered POI of the same user, fraction
/// of 'true'-labeled observations whose source packet really carried the
/// user's live position, and fraction of leak hosts whose top tf-idf app is
/// the planted one. Empty denominators are vacuously perfect (1.0), except
/// recall which reports 0. Unknown packet refs or hosts are a fatal join
/// error.
ScenarioReport scenario_report(const GroundTruth& gt,
                               const std::vector<GeoObservation>& observations,
                               const std::vector<POI>& discovered,
                               const TfidfMatrix& matrix, double match_dist_m = 500.0);

} // namespace geoleak
