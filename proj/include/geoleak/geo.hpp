#pragma once

#include <cstdint>
#include <string>

namespace geoleak {

using TimestampMs = std::int64_t;

constexpr double kEarthRadiusMeters = 6371000.0;
constexpr TimestampMs kMsPerHour = 3600LL * 1000LL;

// WGS84-style decimal degrees. Doubles keep well beyond the 7 fractional
// digits the coordinate wire format carries.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

bool is_valid_point(const GeoPoint& p);

enum class SampleSource { agent, traffic };

struct LocationSample {
    std::string user_id;
    TimestampMs ts = 0;
    GeoPoint point;
    SampleSource source = SampleSource::agent;
};

struct GeoFence {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;

    bool valid() const;
};

// Default fence: bounding box around Israel, matching the default
// coordinate format (two integer digits). Overridable everywhere.
inline GeoFence default_fence() { return GeoFence{29.45, 33.35, 34.25, 35.90}; }

struct TimeWindow {
    TimestampMs start = 0;
    TimestampMs end = 0;

    TimestampMs duration_ms() const { return end - start; }
};

/// Great-circle distance in meters on a spherical Earth (R = 6,371,000 m).
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Inclusive bounding-box membership test.
bool contains(const GeoFence& fence, const GeoPoint& p);

/// UTC wall-clock hour bucket of a millisecond timestamp.
inline std::int64_t hour_bucket(TimestampMs ts) {
    // Floor division so pre-epoch timestamps bucket consistently.
    std::int64_t h = ts / kMsPerHour;
    if (ts % kMsPerHour < 0) --h;
    return h;
}

} // namespace geoleak
