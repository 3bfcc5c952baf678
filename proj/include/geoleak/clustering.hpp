#pragma once

#include "geoleak/geo.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace geoleak {

class ReverseGeocoder;

struct StayPoint {
    std::string user_id;
    GeoPoint centroid;
    TimeWindow window;
    std::size_t member_count = 0;
    std::vector<std::size_t> member_refs; // indices into the input samples
};

struct POI {
    int poi_id = 0;
    std::string user_id;
    GeoPoint centroid;
    std::vector<StayPoint> visits;
    TimestampMs dwell_time_ms = 0;
    double weight = 0.0; // set by the scoring side
};

struct ClusterConfig {
    double dist_threshold_m = 500.0;
    TimestampMs time_threshold_ms = 30 * 60 * 1000;
    TimestampMs max_gap_ms = 6 * kMsPerHour;
    double eps_spatial_m = 500.0;
    TimestampMs eps_temporal_ms = 30 * 60 * 1000;
    int min_pts = 5;
    double merge_dist_m = 500.0;
};

/// Single-pass stay-point extraction for sparse streams. A sample joins the
/// open candidate when it is within dist_threshold of the running centroid
/// and within max_gap of the previous sample; otherwise the candidate is
/// emitted as a StayPoint if it spans at least time_threshold (two or more
/// samples), and a fresh candidate starts at the sample.
std::vector<StayPoint> incremental_cluster(const std::vector<LocationSample>& samples,
                                           const ClusterConfig& cfg);

/// Backtracking merge: stay points recurring at one place fold into a single
/// POI. Each stay point joins the earliest existing POI within merge_dist
/// (centroid recomputed as the member-weighted mean), else founds a new one.
std::vector<POI> merge_stays(const std::vector<StayPoint>& staypoints, double merge_dist_m);

/// Density clustering with haversine neighborhoods. A core point has at
/// least min_pts neighbors within eps (itself included); border points go to
/// the cluster whose core reached them first in index order; noise is
/// dropped. Each cluster becomes a POI with a single visit spanning the
/// member timestamps.
std::vector<POI> dbscan_cluster(const std::vector<LocationSample>& samples,
                                double eps_spatial_m, int min_pts);

/// DBSCAN with the neighborhood predicate extended by |dt| <= eps_temporal.
/// Clusters recurring at one place across days are then folded by
/// merge_stays.
std::vector<POI> stdbscan_cluster(const std::vector<LocationSample>& samples,
                                  double eps_spatial_m, TimestampMs eps_temporal_ms,
                                  int min_pts, double merge_dist_m);

/// Drops POIs whose centroid reverse-geocodes to a highway; lookup failures
/// keep the POI.
std::vector<POI> semantic_filter(std::vector<POI> pois, const ReverseGeocoder& geocoder);

} // namespace geoleak
