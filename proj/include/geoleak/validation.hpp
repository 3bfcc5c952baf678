#pragma once

#include "geoleak/extraction.hpp"
#include "geoleak/geo.hpp"

#include <string>
#include <vector>

namespace geoleak {

struct LabelingConfig {
    TimestampMs time_window_ms = 10 * 60 * 1000; // 10 minutes
    double dist_threshold_m = 250.0;
};

enum class LeakageGroup { high, medium, low, no_leakage };

std::string group_name(LeakageGroup g);

struct LeakageStats {
    std::string user_id;
    std::int64_t active_time_hours = 0;
    std::int64_t validated_leaks = 0;
    double leak_interval_hours = 0.0; // +inf when nothing leaked
    LeakageGroup group = LeakageGroup::no_leakage;
    std::int64_t exposed_hours = 0;
    double coverage_rate = 0.0;
    double relative_stdev = 0.0;
};

/// Labels each observation against the agent ground truth: samples within the
/// time window are eligible; no eligible sample -> unknown; otherwise the
/// nearest-in-space eligible sample decides (distance strictly below the
/// threshold -> true, else false). Observations and samples must belong to
/// one user; samples sorted by ts.
std::vector<GeoObservation> label_observations(std::vector<GeoObservation> observations,
                                               const std::vector<LocationSample>& agent_samples,
                                               const LabelingConfig& cfg);

/// Distinct UTC hour buckets holding at least one agent sample.
std::int64_t active_time(const std::vector<LocationSample>& agent_samples);

/// Interval = active hours / validated ('true') leaks, with the group bounds:
/// under 1h high, 1-6h inclusive medium, over 6h low, zero leaks no_leakage.
/// Zero active hours with leaks present is inconsistent input.
std::pair<double, LeakageGroup> leakage_rate(const std::vector<GeoObservation>& labeled,
                                             std::int64_t active_hours);

/// Distinct UTC hour buckets holding at least two 'true' observations.
std::int64_t exposed_hours(const std::vector<GeoObservation>& labeled);

/// exposed / agent hours, clamped into [0,1]; zero agent hours -> 0.
double coverage_rate(std::int64_t exposed, std::int64_t agent_hours);

/// Population standard deviation over mean of a leaks-per-hour series
/// (zeros included); zero mean -> 0.
double leak_relative_stdev(const std::vector<double>& leaks_per_hour);

/// Builds the per-active-hour 'true'-leak series (zero-filled) and folds the
/// measures above into one row.
LeakageStats compute_leakage_stats(const std::string& user_id,
                                   const std::vector<GeoObservation>& labeled,
                                   const std::vector<LocationSample>& agent_samples);

} // namespace geoleak
