#pragma once

#include "geoleak/geo.hpp"

#include <string>
#include <vector>

namespace geoleak {

inline constexpr const char* kUnknownCategory = "unknown";
inline constexpr const char* kHighwayCategory = "highway";

/// Reverse-geocoding client surface. The stub below backs it with a file; an
/// HTTP-backed client can implement the same interface.
class ReverseGeocoder {
public:
    virtual ~ReverseGeocoder() = default;

    /// Category of the place at p, or "unknown". Must not throw; failures
    /// map to "unknown".
    virtual std::string category(const GeoPoint& p) const = 0;
};

/// File-backed stub: CSV rows lat,lon,radius_m,category. A query resolves to
/// the category of the nearest entry whose radius covers the point.
class FileStubGeocoder : public ReverseGeocoder {
public:
    static FileStubGeocoder from_file(const std::string& path);

    struct Entry {
        GeoPoint point;
        double radius_m = 0.0;
        std::string category;
    };

    explicit FileStubGeocoder(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    std::string category(const GeoPoint& p) const override;

private:
    std::vector<Entry> entries_;
};

/// Geocoder that knows nothing; every lookup is "unknown".
class NullGeocoder : public ReverseGeocoder {
public:
    std::string category(const GeoPoint&) const override { return kUnknownCategory; }
};

} // namespace geoleak
