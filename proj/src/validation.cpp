#include "geoleak/validation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace geoleak {

std::string group_name(LeakageGroup g) {
    switch (g) {
        case LeakageGroup::high: return "high";
        case LeakageGroup::medium: return "medium";
        case LeakageGroup::low: return "low";
        case LeakageGroup::no_leakage: return "no_leakage";
    }
    return "no_leakage";
}

std::vector<GeoObservation> label_observations(std::vector<GeoObservation> observations,
                                               const std::vector<LocationSample>& agent_samples,
                                               const LabelingConfig& cfg) {
    if (cfg.time_window_ms <= 0 || cfg.dist_threshold_m <= 0)
        throw std::invalid_argument("label_observations: thresholds must be positive");

    for (auto& obs : observations) {
        // Samples are sorted by ts; binary-search the eligible window.
        const TimestampMs lo = obs.ts - cfg.time_window_ms;
        const TimestampMs hi = obs.ts + cfg.time_window_ms;
        auto first = std::lower_bound(agent_samples.begin(), agent_samples.end(), lo,
                                      [](const LocationSample& s, TimestampMs t) {
                                          return s.ts < t;
                                      });
        auto last = std::upper_bound(first, agent_samples.end(), hi,
                                     [](TimestampMs t, const LocationSample& s) {
                                         return t < s.ts;
                                     });
        if (first == last) {
            obs.label = LeakLabel::unknown;
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (auto it = first; it != last; ++it)
            best = std::min(best, haversine_distance(obs.point, it->point));
        obs.label = best < cfg.dist_threshold_m ? LeakLabel::yes : LeakLabel::no;
    }
    return observations;
}

std::int64_t active_time(const std::vector<LocationSample>& agent_samples) {
    std::set<std::int64_t> buckets;
    for (const auto& s : agent_samples) buckets.insert(hour_bucket(s.ts));
    return static_cast<std::int64_t>(buckets.size());
}

std::pair<double, LeakageGroup> leakage_rate(const std::vector<GeoObservation>& labeled,
                                             std::int64_t active_hours) {
    std::int64_t validated = 0;
    for (const auto& o : labeled)
        if (o.label == LeakLabel::yes) ++validated;

    if (validated == 0)
        return {std::numeric_limits<double>::infinity(), LeakageGroup::no_leakage};
    if (active_hours == 0)
        throw std::invalid_argument("leakage_rate: leaks present but zero active hours");
    if (active_hours < 0)
        throw std::invalid_argument("leakage_rate: negative active hours");

    const double interval = static_cast<double>(active_hours) / static_cast<double>(validated);
    LeakageGroup group = interval < 1.0   ? LeakageGroup::high
                         : interval <= 6.0 ? LeakageGroup::medium
                                           : LeakageGroup::low;
    return {interval, group};
}

std::int64_t exposed_hours(const std::vector<GeoObservation>& labeled) {
    std::map<std::int64_t, int> per_hour;
    for (const auto& o : labeled)
        if (o.label == LeakLabel::yes) ++per_hour[hour_bucket(o.ts)];
    std::int64_t exposed = 0;
    for (const auto& [hour, n] : per_hour)
        if (n >= 2) ++exposed;
    return exposed;
}

double coverage_rate(std::int64_t exposed, std::int64_t agent_hours) {
    if (agent_hours <= 0) return 0.0;
    double rate = static_cast<double>(exposed) / static_cast<double>(agent_hours);
    if (rate > 1.0) {
        std::cerr << "[warn] coverage rate " << rate << " clamped to 1\n";
        return 1.0;
    }
    return rate;
}

double leak_relative_stdev(const std::vector<double>& leaks_per_hour) {
    if (leaks_per_hour.empty()) return 0.0;
    const double n = static_cast<double>(leaks_per_hour.size());
    double mean = 0.0;
    for (double v : leaks_per_hour) mean += v;
    mean /= n;
    if (mean == 0.0) return 0.0;
    double var = 0.0;
    for (double v : leaks_per_hour) var += (v - mean) * (v - mean);
    var /= n; // population variance
    return std::sqrt(var) / mean;
}

LeakageStats compute_leakage_stats(const std::string& user_id,
                                   const std::vector<GeoObservation>& labeled,
                                   const std::vector<LocationSample>& agent_samples) {
    LeakageStats stats;
    stats.user_id = user_id;
    stats.active_time_hours = active_time(agent_samples);

    auto [interval, group] = leakage_rate(labeled, stats.active_time_hours);
    stats.leak_interval_hours = interval;
    stats.group = group;
    for (const auto& o : labeled)
        if (o.label == LeakLabel::yes) ++stats.validated_leaks;

    stats.exposed_hours = exposed_hours(labeled);
    stats.coverage_rate = coverage_rate(stats.exposed_hours, stats.active_time_hours);

    // Leaks-per-hour series over the user's active hours, zero-filled.
    std::set<std::int64_t> active;
    for (const auto& s : agent_samples) active.insert(hour_bucket(s.ts));
    std::map<std::int64_t, double> series;
    for (std::int64_t h : active) series[h] = 0.0;
    for (const auto& o : labeled) {
        if (o.label != LeakLabel::yes) continue;
        auto it = series.find(hour_bucket(o.ts));
        if (it != series.end()) it->second += 1.0;
    }
    std::vector<double> values;
    values.reserve(series.size());
    for (const auto& [h, v] : series) values.push_back(v);
    stats.relative_stdev = leak_relative_stdev(values);
    return stats;
}

} // namespace geoleak
