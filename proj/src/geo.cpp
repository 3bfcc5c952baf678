#include "geoleak/geo.hpp"

#include <algorithm>
#include <cmath>

namespace geoleak {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

bool is_valid_point(const GeoPoint& p) {
    return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

bool GeoFence::valid() const {
    return lat_min < lat_max && lon_min < lon_max &&
           is_valid_point(GeoPoint{lat_min, lon_min}) &&
           is_valid_point(GeoPoint{lat_max, lon_max});
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlam = (b.lon - a.lon) * kDegToRad;

    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

bool contains(const GeoFence& fence, const GeoPoint& p) {
    return p.lat >= fence.lat_min && p.lat <= fence.lat_max &&
           p.lon >= fence.lon_min && p.lon <= fence.lon_max;
}

} // namespace geoleak
