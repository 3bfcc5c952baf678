#include "geoleak/geocoder.hpp"

#include "geoleak/util.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

namespace geoleak {

FileStubGeocoder FileStubGeocoder::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open geocoder stub: " + path);

    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cols = split(t, ',');
        if (cols.size() != 4) {
            // Tolerate a header row up front.
            if (line_no == 1) continue;
            throw std::runtime_error("geocoder stub: bad row at line " + std::to_string(line_no));
        }
        auto lat = parse_double(trim(cols[0]));
        auto lon = parse_double(trim(cols[1]));
        auto radius = parse_double(trim(cols[2]));
        if (!lat || !lon || !radius) {
            if (line_no == 1) continue; // header
            throw std::runtime_error("geocoder stub: bad row at line " + std::to_string(line_no));
        }
        entries.push_back(Entry{GeoPoint{*lat, *lon}, *radius, trim(cols[3])});
    }
    return FileStubGeocoder(std::move(entries));
}

std::string FileStubGeocoder::category(const GeoPoint& p) const {
    double best = std::numeric_limits<double>::infinity();
    const Entry* hit = nullptr;
    for (const auto& e : entries_) {
        double d = haversine_distance(p, e.point);
        if (d <= e.radius_m && d < best) {
            best = d;
            hit = &e;
        }
    }
    return hit != nullptr ? hit->category : kUnknownCategory;
}

} // namespace geoleak
