#include "geoleak/clustering.hpp"

#include "geoleak/geocoder.hpp"
#include "geoleak/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>

namespace geoleak {

namespace {

GeoPoint mean_point(const std::vector<LocationSample>& samples,
                    const std::vector<std::size_t>& refs) {
    double lat = 0.0, lon = 0.0;
    for (std::size_t r : refs) {
        lat += samples[r].point.lat;
        lon += samples[r].point.lon;
    }
    const double n = static_cast<double>(refs.size());
    return GeoPoint{lat / n, lon / n};
}

} // namespace

std::vector<StayPoint> incremental_cluster(const std::vector<LocationSample>& samples,
                                           const ClusterConfig& cfg) {
    if (cfg.dist_threshold_m <= 0 || cfg.time_threshold_ms <= 0 || cfg.max_gap_ms <= 0)
        throw std::invalid_argument("incremental_cluster: thresholds must be positive");

    std::vector<StayPoint> out;
    std::vector<std::size_t> member;
    double sum_lat = 0.0, sum_lon = 0.0;

    auto flush = [&] {
        // A lone sample spans no time, so it can never meet the dwell bound.
        if (member.size() < 2) return;
        const TimestampMs start = samples[member.front()].ts;
        const TimestampMs end = samples[member.back()].ts;
        if (end - start < cfg.time_threshold_ms) return;
        StayPoint sp;
        sp.user_id = samples[member.front()].user_id;
        sp.centroid = GeoPoint{sum_lat / static_cast<double>(member.size()),
                               sum_lon / static_cast<double>(member.size())};
        sp.window = TimeWindow{start, end};
        sp.member_count = member.size();
        sp.member_refs = member;
        out.push_back(std::move(sp));
    };

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!member.empty()) {
            const GeoPoint centroid{sum_lat / static_cast<double>(member.size()),
                                    sum_lon / static_cast<double>(member.size())};
            const TimestampMs gap = s.ts - samples[member.back()].ts;
            if (gap <= cfg.max_gap_ms &&
                haversine_distance(s.point, centroid) <= cfg.dist_threshold_m) {
                member.push_back(i);
                sum_lat += s.point.lat;
                sum_lon += s.point.lon;
                continue;
            }
            flush();
            member.clear();
            sum_lat = sum_lon = 0.0;
        }
        member.push_back(i);
        sum_lat = s.point.lat;
        sum_lon = s.point.lon;
    }
    flush();
    return out;
}

std::vector<POI> merge_stays(const std::vector<StayPoint>& staypoints, double merge_dist_m) {
    std::vector<POI> pois;
    for (const auto& sp : staypoints) {
        POI* target = nullptr;
        for (auto& poi : pois) { // founding order; earliest match wins
            if (haversine_distance(poi.centroid, sp.centroid) <= merge_dist_m) {
                target = &poi;
                break;
            }
        }
        if (target == nullptr) {
            POI poi;
            poi.poi_id = static_cast<int>(pois.size());
            poi.user_id = sp.user_id;
            poi.centroid = sp.centroid;
            poi.visits.push_back(sp);
            poi.dwell_time_ms = sp.window.duration_ms();
            pois.push_back(std::move(poi));
            continue;
        }
        target->visits.push_back(sp);
        target->dwell_time_ms += sp.window.duration_ms();
        double lat = 0.0, lon = 0.0, total = 0.0;
        for (const auto& v : target->visits) {
            const double w = static_cast<double>(v.member_count);
            lat += v.centroid.lat * w;
            lon += v.centroid.lon * w;
            total += w;
        }
        target->centroid = GeoPoint{lat / total, lon / total};
    }
    return pois;
}

namespace {

// Neighborhood provider: a degree grid with cell size ~eps keeps the query
// local; queries return ascending indices so clustering stays deterministic.
class NeighborIndex {
public:
    NeighborIndex(const std::vector<LocationSample>& samples, double eps_m,
                  TimestampMs eps_temporal_ms, bool use_time)
        : samples_(samples), eps_m_(eps_m), eps_t_(eps_temporal_ms), use_time_(use_time) {
        double max_abs_lat = 0.0;
        for (const auto& s : samples) max_abs_lat = std::max(max_abs_lat, std::abs(s.point.lat));
        // Near the poles the longitude cell degenerates; scan linearly there.
        grid_ok_ = !samples.empty() && max_abs_lat < 80.0;
        if (!grid_ok_) return;

        constexpr double kMetersPerDegLat = 111320.0;
        cell_lat_ = eps_m / kMetersPerDegLat;
        const double cos_lat = std::cos(max_abs_lat * 3.14159265358979323846 / 180.0);
        cell_lon_ = eps_m / (kMetersPerDegLat * cos_lat);
        for (std::size_t i = 0; i < samples.size(); ++i)
            grid_[key(samples[i].point)].push_back(i);
    }

    std::vector<std::size_t> neighbors(std::size_t i) const {
        std::vector<std::size_t> out;
        const auto& p = samples_[i].point;
        auto consider = [&](std::size_t j) {
            if (use_time_) {
                const std::uint64_t dt = samples_[i].ts >= samples_[j].ts
                                             ? static_cast<std::uint64_t>(samples_[i].ts - samples_[j].ts)
                                             : static_cast<std::uint64_t>(samples_[j].ts - samples_[i].ts);
                if (dt > static_cast<std::uint64_t>(eps_t_)) return;
            }
            if (haversine_distance(p, samples_[j].point) <= eps_m_) out.push_back(j);
        };
        if (!grid_ok_) {
            for (std::size_t j = 0; j < samples_.size(); ++j) consider(j);
            return out;
        }
        const auto [ci, cj] = cell(p);
        for (std::int64_t di = -1; di <= 1; ++di) {
            for (std::int64_t dj = -1; dj <= 1; ++dj) {
                auto it = grid_.find((ci + di) * 100003 + (cj + dj));
                if (it == grid_.end()) continue;
                for (std::size_t j : it->second) consider(j);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::pair<std::int64_t, std::int64_t> cell(const GeoPoint& p) const {
        return {static_cast<std::int64_t>(std::floor(p.lat / cell_lat_)),
                static_cast<std::int64_t>(std::floor(p.lon / cell_lon_))};
    }
    std::int64_t key(const GeoPoint& p) const {
        auto [i, j] = cell(p);
        return i * 100003 + j;
    }

    const std::vector<LocationSample>& samples_;
    double eps_m_;
    TimestampMs eps_t_;
    bool use_time_;
    bool grid_ok_ = false;
    double cell_lat_ = 1.0;
    double cell_lon_ = 1.0;
    std::map<std::int64_t, std::vector<std::size_t>> grid_;
};

std::vector<int> density_cluster_ids(const std::vector<LocationSample>& samples,
                                     const NeighborIndex& index, int min_pts,
                                     int& cluster_count) {
    const std::size_t n = samples.size();
    std::vector<std::vector<std::size_t>> nbrs(n);
    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        nbrs[i] = index.neighbors(i);
        core[i] = nbrs[i].size() >= static_cast<std::size_t>(min_pts);
    }

    std::vector<int> cluster(n, -1);
    int cid = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || cluster[i] != -1) continue;
        std::deque<std::size_t> queue{i};
        cluster[i] = cid;
        while (!queue.empty()) {
            std::size_t p = queue.front();
            queue.pop_front();
            for (std::size_t q : nbrs[p]) {
                if (cluster[q] != -1) continue;
                cluster[q] = cid;
                if (core[q]) queue.push_back(q);
            }
        }
        ++cid;
    }
    cluster_count = cid;
    return cluster;
}

std::vector<StayPoint> clusters_to_staypoints(const std::vector<LocationSample>& samples,
                                              const std::vector<int>& cluster,
                                              int cluster_count) {
    std::vector<std::vector<std::size_t>> members(cluster_count);
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (cluster[i] >= 0) members[cluster[i]].push_back(i);

    std::vector<StayPoint> out;
    for (auto& refs : members) {
        if (refs.empty()) continue;
        StayPoint sp;
        sp.user_id = samples[refs.front()].user_id;
        sp.centroid = mean_point(samples, refs);
        TimestampMs lo = std::numeric_limits<TimestampMs>::max();
        TimestampMs hi = std::numeric_limits<TimestampMs>::min();
        for (std::size_t r : refs) {
            lo = std::min(lo, samples[r].ts);
            hi = std::max(hi, samples[r].ts);
        }
        sp.window = TimeWindow{lo, hi};
        sp.member_count = refs.size();
        sp.member_refs = std::move(refs);
        out.push_back(std::move(sp));
    }
    return out;
}

std::vector<POI> staypoints_to_pois(std::vector<StayPoint> stays) {
    std::vector<POI> out;
    for (auto& sp : stays) {
        POI poi;
        poi.poi_id = static_cast<int>(out.size());
        poi.user_id = sp.user_id;
        poi.centroid = sp.centroid;
        poi.dwell_time_ms = sp.window.duration_ms();
        poi.visits.push_back(std::move(sp));
        out.push_back(std::move(poi));
    }
    return out;
}

} // namespace

std::vector<POI> dbscan_cluster(const std::vector<LocationSample>& samples,
                                double eps_spatial_m, int min_pts) {
    if (eps_spatial_m <= 0 || min_pts <= 0)
        throw std::invalid_argument("dbscan_cluster: parameters must be positive");
    NeighborIndex index(samples, eps_spatial_m, 0, /*use_time=*/false);
    int cluster_count = 0;
    auto cluster = density_cluster_ids(samples, index, min_pts, cluster_count);
    return staypoints_to_pois(clusters_to_staypoints(samples, cluster, cluster_count));
}

std::vector<POI> stdbscan_cluster(const std::vector<LocationSample>& samples,
                                  double eps_spatial_m, TimestampMs eps_temporal_ms,
                                  int min_pts, double merge_dist_m) {
    if (eps_spatial_m <= 0 || eps_temporal_ms <= 0 || min_pts <= 0 || merge_dist_m <= 0)
        throw std::invalid_argument("stdbscan_cluster: parameters must be positive");
    NeighborIndex index(samples, eps_spatial_m, eps_temporal_ms, /*use_time=*/true);
    int cluster_count = 0;
    auto cluster = density_cluster_ids(samples, index, min_pts, cluster_count);
    auto stays = clusters_to_staypoints(samples, cluster, cluster_count);
    // Recurring clusters at one place (e.g. the same home every night) fold
    // into one POI.
    std::stable_sort(stays.begin(), stays.end(), [](const StayPoint& a, const StayPoint& b) {
        return a.window.start < b.window.start;
    });
    return merge_stays(stays, merge_dist_m);
}

std::vector<POI> semantic_filter(std::vector<POI> pois, const ReverseGeocoder& geocoder) {
    std::erase_if(pois, [&](const POI& poi) {
        std::string category;
        try {
            category = geocoder.category(poi.centroid);
        } catch (const std::exception& e) {
            std::cerr << "[warn] geocoder lookup failed (" << e.what() << "), keeping POI\n";
            return false;
        }
        return to_lower(trim(category)) == kHighwayCategory;
    });
    return pois;
}

} // namespace geoleak
