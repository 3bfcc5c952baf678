#include "geoleak/synthesis.hpp"

#include "geoleak/formats.hpp"
#include "geoleak/packet_log.hpp"
#include "geoleak/poi_metrics.hpp"
#include "geoleak/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace geoleak {

double Rng::u01() {
    // 53 mantissa bits of one raw draw; [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_real(double lo, double hi) { return lo + (hi - lo) * u01(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t range =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1u;
    if (range == 0) return static_cast<std::int64_t>(engine_()); // whole 64-bit span
    const std::uint64_t limit = (std::numeric_limits<std::uint64_t>::max() / range) * range;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
}

bool Rng::bernoulli(double p) { return u01() < p; }

std::int64_t Rng::poisson(double lambda) {
    // Knuth's product method, chunked so exp(-lambda) never underflows.
    std::int64_t total = 0;
    while (lambda > 0.0) {
        const double chunk = std::min(lambda, 30.0);
        const double limit = std::exp(-chunk);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= u01();
        } while (p > limit);
        total += k - 1;
        lambda -= chunk;
    }
    return total;
}

namespace {

constexpr TimestampMs kMsPerDay = 24 * kMsPerHour;
constexpr double kMinPoiSeparationMeters = 1000.0;
constexpr int kPlacementAttempts = 200;
constexpr std::uint32_t kServerBase = 0xCB007100u; // 203.0.113.0

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
}

std::string user_name(int idx) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%03d", idx + 1);
    return buf;
}

Ipv4Addr device_addr(const Ipv4Cidr& subnet, int user_idx) {
    const std::uint32_t host = static_cast<std::uint32_t>(user_idx / 250) * 256u +
                               static_cast<std::uint32_t>(user_idx % 250) + 2u;
    return Ipv4Addr{subnet.network.value | host};
}

void replace_once(std::string& s, const std::string& key, const std::string& value) {
    const auto pos = s.find(key);
    if (pos != std::string::npos) s.replace(pos, key.size(), value);
}

GeoPoint quantized(GeoPoint p) { return GeoPoint{quantize_coord(p.lat), quantize_coord(p.lon)}; }

} // namespace

void validate_scenario_config(const ScenarioConfig& cfg) {
    auto bad = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };
    auto prob = [&](double p, const std::string& name) {
        if (!(p >= 0.0 && p <= 1.0)) bad(name + " must be a probability");
    };
    if (cfg.n_users < 1) bad("n_users must be >= 1");
    if (cfg.days < 1) bad("days must be >= 1");
    if (!cfg.fence.valid()) bad("fence is invalid");
    if (cfg.pois_per_user.min < 1 || cfg.pois_per_user.min > cfg.pois_per_user.max)
        bad("pois_per_user range is empty");
    if (cfg.agent_period_ms <= 0) bad("agent_period_ms must be positive");
    prob(cfg.agent_availability, "agent_availability");
    if (cfg.anchor_primary <= 0.0 || cfg.anchor_secondary <= 0.0 ||
        cfg.anchor_primary + cfg.anchor_secondary > 1.0)
        bad("anchor weights must be positive and sum to at most 1");
    if (cfg.transit_speed_kmh <= 0.0) bad("transit_speed_kmh must be positive");
    if (cfg.device_subnet.prefix_len < 0 || cfg.device_subnet.prefix_len > 30)
        bad("device_subnet prefix is out of range");
    if (!cfg.device_subnet.contains(device_addr(cfg.device_subnet, cfg.n_users - 1)))
        bad("device_subnet too small for n_users");
    if (cfg.device_subnet.contains(Ipv4Addr{kServerBase}))
        bad("device_subnet overlaps the synthetic server range 203.0.113.0");
    for (const auto& app : cfg.apps) {
        if (app.app_id.empty()) bad("app_id must be non-empty");
        if (app.hosts.empty()) bad("app " + app.app_id + " needs at least one host");
        for (const auto& h : app.hosts)
            if (trim(h).empty()) bad("app " + app.app_id + " has an empty host");
        prob(app.install_prob, "install_prob");
        prob(app.burst_on_prob, "burst_on_prob");
        prob(app.burst_off_prob, "burst_off_prob");
        if (app.mean_leaks_per_hour < 0.0) bad("mean_leaks_per_hour must be >= 0");
        if (count_occurrences(app.payload_template, "{LAT}") != 1 ||
            count_occurrences(app.payload_template, "{LON}") != 1)
            bad("payload_template of " + app.app_id +
                " must contain {LAT} and {LON} exactly once");
    }
    if (cfg.noise.incoming_coords_per_hour < 0.0 || cfg.noise.float_noise_per_hour < 0.0)
        bad("noise rates must be >= 0");
    if (trim(cfg.noise.noise_host).empty()) bad("noise_host must be non-empty");
}

GeoPoint position_at(const std::vector<TrajectoryPoint>& trajectory, TimestampMs ts) {
    if (trajectory.empty()) throw std::invalid_argument("position_at: empty trajectory");
    if (ts <= trajectory.front().ts) return trajectory.front().point;
    if (ts >= trajectory.back().ts) return trajectory.back().point;
    const auto it = std::upper_bound(
        trajectory.begin(), trajectory.end(), ts,
        [](TimestampMs t, const TrajectoryPoint& bp) { return t < bp.ts; });
    const TrajectoryPoint& b = *it;
    const TrajectoryPoint& a = *(it - 1);
    if (b.ts == a.ts) return b.point;
    const double f = static_cast<double>(ts - a.ts) / static_cast<double>(b.ts - a.ts);
    return GeoPoint{a.point.lat + f * (b.point.lat - a.point.lat),
                    a.point.lon + f * (b.point.lon - a.point.lon)};
}

namespace {

std::vector<GeoPoint> place_pois(Rng& rng, const GeoFence& fence, int count) {
    std::vector<GeoPoint> pois;
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
            const GeoPoint p = quantized(GeoPoint{rng.uniform_real(fence.lat_min, fence.lat_max),
                                                  rng.uniform_real(fence.lon_min, fence.lon_max)});
            bool apart = true;
            for (const auto& q : pois)
                if (haversine_distance(p, q) < kMinPoiSeparationMeters) {
                    apart = false;
                    break;
                }
            if (apart) {
                pois.push_back(p);
                placed = true;
            }
        }
        if (!placed)
            throw std::invalid_argument(
                "scenario: fence too small to place distinct POIs 1 km apart");
    }
    return pois;
}

std::vector<double> dwell_weights(std::size_t k, double primary, double secondary) {
    std::vector<double> w(k, 0.0);
    if (k == 1) {
        w[0] = 1.0;
    } else if (k == 2) {
        w[0] = primary / (primary + secondary);
        w[1] = secondary / (primary + secondary);
    } else {
        w[0] = primary;
        w[1] = secondary;
        const double rest = (1.0 - primary - secondary) / static_cast<double>(k - 2);
        for (std::size_t i = 2; i < k; ++i) w[i] = rest;
    }
    return w;
}

// Visit order is 0..k-1 with a return leg home; day d repeats the schedule.
UserTruth build_truth(const std::vector<GeoPoint>& pois, const ScenarioConfig& cfg) {
    UserTruth truth;
    const std::size_t k = pois.size();
    const auto weights = dwell_weights(k, cfg.anchor_primary, cfg.anchor_secondary);
    const double speed_ms = cfg.transit_speed_kmh / 3.6; // m/s

    std::vector<TimestampMs> transit(k, 0); // leg i -> (i+1) % k
    TimestampMs transit_total = 0;
    for (std::size_t i = 0; i < k && k > 1; ++i) {
        const double d = haversine_distance(pois[i], pois[(i + 1) % k]);
        transit[i] = static_cast<TimestampMs>(std::llround(d / speed_ms * 1000.0));
        transit_total += transit[i];
    }
    const TimestampMs budget = kMsPerDay - transit_total;
    if (budget < static_cast<TimestampMs>(k) * 60000)
        throw std::invalid_argument("scenario: daily transit time leaves no dwell budget");

    std::vector<TimestampMs> dwell(k, 0);
    TimestampMs assigned = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        dwell[i] = static_cast<TimestampMs>(
            std::llround(static_cast<double>(budget) * weights[i]));
        assigned += dwell[i];
    }
    dwell[k - 1] = budget - assigned; // absorb rounding

    for (std::size_t i = 0; i < k; ++i)
        truth.pois.push_back(PlantedPoi{pois[i], weights[i], dwell[i]});

    auto push = [&truth](TimestampMs ts, const GeoPoint& p) {
        if (!truth.trajectory.empty() && truth.trajectory.back().ts == ts &&
            truth.trajectory.back().point == p)
            return;
        truth.trajectory.push_back(TrajectoryPoint{ts, p});
    };
    for (int day = 0; day < cfg.days; ++day) {
        TimestampMs t = cfg.start_ts_ms + static_cast<TimestampMs>(day) * kMsPerDay;
        const TimestampMs day_end = t + kMsPerDay;
        push(t, pois[0]);
        t += dwell[0];
        push(t, pois[0]);
        for (std::size_t i = 1; i < k; ++i) {
            t += transit[i - 1];
            push(t, pois[i]);
            t += dwell[i];
            push(t, pois[i]);
        }
        push(day_end, pois[0]); // the return leg lands exactly on midnight
    }
    return truth;
}

struct Emitted {
    PacketRecord rec;
    Provenance prov;
};

} // namespace

Scenario generate_scenario(const ScenarioConfig& cfg) {
    validate_scenario_config(cfg);

    Scenario out;
    Rng rng(cfg.seed);

    // Server addresses are fixed by config order, independent of the seed.
    std::map<std::string, Ipv4Addr> servers;
    {
        std::uint32_t next = kServerBase + 1;
        auto assign = [&](const std::string& raw) {
            const std::string host = to_lower(trim(raw));
            if (!servers.count(host)) servers[host] = Ipv4Addr{next++};
        };
        for (const auto& app : cfg.apps)
            for (const auto& h : app.hosts) assign(h);
        assign(cfg.noise.noise_host);
    }
    for (const auto& app : cfg.apps)
        for (const auto& h : app.hosts) out.truth.host_app[to_lower(trim(h))].insert(app.app_id);

    std::vector<Emitted> emitted;
    const std::string noise_host = to_lower(trim(cfg.noise.noise_host));
    Ipv4Addr dev{};

    auto emit = [&](const std::string& uid, TimestampMs ts, Direction dir,
                    const std::string& host, const std::string& payload, Provenance prov) {
        const std::uint16_t ephemeral =
            static_cast<std::uint16_t>(40000 + emitted.size() % 20000);
        PacketRecord rec;
        rec.user_id = uid;
        rec.ts = ts;
        rec.direction = dir;
        rec.transport = Transport::tcp;
        rec.payload.assign(payload.begin(), payload.end());
        const Endpoint device{dev, ephemeral};
        const Endpoint server{servers.at(host), 80};
        rec.src = dir == Direction::outgoing ? device : server;
        rec.dst = dir == Direction::outgoing ? server : device;
        rec.http_host = parse_http_host(rec.payload);
        emitted.push_back(Emitted{std::move(rec), std::move(prov)});
    };

    for (int u = 0; u < cfg.n_users; ++u) {
        const std::string uid = user_name(u);
        dev = device_addr(cfg.device_subnet, u);
        const int n_pois = static_cast<int>(
            rng.uniform_int(cfg.pois_per_user.min, cfg.pois_per_user.max));
        const auto pois = place_pois(rng, cfg.fence, n_pois);
        UserTruth truth = build_truth(pois, cfg);

        std::vector<std::size_t> installed;
        for (std::size_t a = 0; a < cfg.apps.size(); ++a) {
            const bool has = rng.bernoulli(cfg.apps[a].install_prob);
            if (has) {
                installed.push_back(a);
                out.truth.installs[uid].insert(cfg.apps[a].app_id);
            }
        }

        std::vector<bool> burst_on(cfg.apps.size(), false);
        for (int day = 0; day < cfg.days; ++day) {
            const TimestampMs day_start =
                cfg.start_ts_ms + static_cast<TimestampMs>(day) * kMsPerDay;

            for (TimestampMs t = day_start; t < day_start + kMsPerDay;
                 t += cfg.agent_period_ms) {
                const bool keep = rng.bernoulli(cfg.agent_availability);
                if (!keep) continue;
                out.agent_samples.push_back(LocationSample{
                    uid, t, quantized(position_at(truth.trajectory, t)), SampleSource::agent});
            }

            for (const std::size_t a : installed) {
                const AppProfile& app = cfg.apps[a];
                for (int h = 0; h < 24; ++h) {
                    const TimestampMs hour_start = day_start + h * kMsPerHour;
                    const double r = rng.u01();
                    if (burst_on[a]) {
                        if (r < app.burst_off_prob) burst_on[a] = false;
                    } else {
                        if (r < app.burst_on_prob) burst_on[a] = true;
                    }
                    if (!burst_on[a]) continue;
                    const std::int64_t leaks = rng.poisson(app.mean_leaks_per_hour);
                    for (std::int64_t i = 0; i < leaks; ++i) {
                        const TimestampMs ts = hour_start + rng.uniform_int(0, kMsPerHour - 1);
                        const std::size_t host_idx =
                            app.hosts.size() > 1
                                ? static_cast<std::size_t>(rng.uniform_int(
                                      0, static_cast<std::int64_t>(app.hosts.size()) - 1))
                                : 0;
                        const std::string host = to_lower(trim(app.hosts[host_idx]));
                        const GeoPoint pos = quantized(position_at(truth.trajectory, ts));
                        std::string payload = app.payload_template;
                        replace_once(payload, "{LAT}", format_coord(pos.lat));
                        replace_once(payload, "{LON}", format_coord(pos.lon));
                        replace_once(payload, "{HOST}", host);
                        emit(uid, ts, Direction::outgoing, host, payload,
                             Provenance{uid, PacketKind::leak, app.app_id, host, true, pos});
                    }
                }
            }

            for (int h = 0; h < 24; ++h) {
                const TimestampMs hour_start = day_start + h * kMsPerHour;
                const std::int64_t coords = rng.poisson(cfg.noise.incoming_coords_per_hour);
                for (std::int64_t i = 0; i < coords; ++i) {
                    const TimestampMs ts = hour_start + rng.uniform_int(0, kMsPerHour - 1);
                    const GeoPoint p = quantized(
                        GeoPoint{rng.uniform_real(cfg.fence.lat_min, cfg.fence.lat_max),
                                 rng.uniform_real(cfg.fence.lon_min, cfg.fence.lon_max)});
                    const std::string payload =
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\n\r\n"
                        "{\"place\":{\"lat\":" + format_coord(p.lat) +
                        ",\"lon\":" + format_coord(p.lon) + "}}";
                    emit(uid, ts, Direction::incoming, noise_host, payload,
                         Provenance{uid, PacketKind::noise_incoming, "", "", false, p});
                }
                const std::int64_t floats = rng.poisson(cfg.noise.float_noise_per_hour);
                for (std::int64_t i = 0; i < floats; ++i) {
                    const TimestampMs ts = hour_start + rng.uniform_int(0, kMsPerHour - 1);
                    const double v = rng.uniform_real(100.0, 10000.0);
                    char num[32];
                    std::snprintf(num, sizeof num, "%.2f", v);
                    const std::string payload = "GET /metrics?elapsed=" + std::string(num) +
                                                " HTTP/1.1\r\nHost: " + noise_host + "\r\n\r\n";
                    emit(uid, ts, Direction::outgoing, noise_host, payload,
                         Provenance{uid, PacketKind::noise_float, "", noise_host, false,
                                    GeoPoint{}});
                }
            }
        }
        out.truth.users[uid] = std::move(truth);
    }

    std::stable_sort(emitted.begin(), emitted.end(),
                     [](const Emitted& a, const Emitted& b) { return a.rec.ts < b.rec.ts; });
    out.packets.reserve(emitted.size());
    out.truth.packets.reserve(emitted.size());
    for (auto& e : emitted) {
        out.packets.push_back(std::move(e.rec));
        out.truth.packets.push_back(std::move(e.prov));
    }
    return out;
}

void write_scenario(const Scenario& scenario, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::vector<std::string> written;
    auto track = [&written](const fs::path& p) {
        written.push_back(p.string());
        return p.string();
    };
    try {
        write_agent_csv(track(dir / "agent.csv"), scenario.agent_samples);
        write_packet_log(track(dir / "packets.jsonl"), scenario.packets);
        write_ground_truth_json(track(dir / "ground_truth.json"), scenario.truth);

        std::ofstream inst(track(dir / "installs.csv"));
        if (!inst) throw std::runtime_error("cannot write " + (dir / "installs.csv").string());
        inst << "user_id,app_id\n";
        for (const auto& [user, apps] : scenario.truth.installs)
            for (const auto& app : apps) inst << user << ',' << app << '\n';
    } catch (...) {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
}

ScenarioReport scenario_report(const GroundTruth& gt,
                               const std::vector<GeoObservation>& observations,
                               const std::vector<POI>& discovered,
                               const TfidfMatrix& matrix, double match_dist_m) {
    ScenarioReport report;

    std::map<std::string, std::vector<POI>> found_by_user;
    for (const auto& poi : discovered) found_by_user[poi.user_id].push_back(poi);
    for (const auto& [uid, truth] : gt.users) {
        std::vector<POI> planted;
        int id = 0;
        for (const auto& p : truth.pois) {
            POI poi;
            poi.poi_id = id++;
            poi.user_id = uid;
            poi.centroid = p.center;
            planted.push_back(poi);
        }
        const auto match = match_pois(found_by_user[uid], planted, match_dist_m);
        report.planted_pois += static_cast<std::int64_t>(planted.size());
        report.recovered_pois += static_cast<std::int64_t>(match.pairs.size());
    }
    report.poi_recall = report.planted_pois > 0
                            ? static_cast<double>(report.recovered_pois) /
                                  static_cast<double>(report.planted_pois)
                            : 0.0;

    for (const auto& obs : observations) {
        if (obs.label != LeakLabel::yes) continue;
        if (obs.packet_refs.first >= gt.packets.size())
            throw std::runtime_error("scenario_report: packet ref outside ground truth");
        const Provenance& prov = gt.packets[obs.packet_refs.first];
        if (prov.user_id != obs.user_id)
            throw std::runtime_error("scenario_report: user mismatch on packet ref");
        ++report.true_labels;
        if (prov.true_location) ++report.true_labels_genuine;
    }
    report.label_accuracy = report.true_labels > 0
                                ? static_cast<double>(report.true_labels_genuine) /
                                      static_cast<double>(report.true_labels)
                                : 1.0;

    for (std::size_t h = 0; h < matrix.hosts.size(); ++h) {
        const auto planted = gt.host_app.find(matrix.hosts[h]);
        if (planted == gt.host_app.end())
            throw std::runtime_error("scenario_report: host not planted: " + matrix.hosts[h]);
        std::size_t best = 0;
        for (std::size_t a = 1; a < matrix.apps.size(); ++a)
            if (matrix.scores[a][h] > matrix.scores[best][h]) best = a;
        ++report.hosts_checked;
        if (planted->second.count(matrix.apps[best])) ++report.hosts_correct;
    }
    report.attribution_accuracy = report.hosts_checked > 0
                                      ? static_cast<double>(report.hosts_correct) /
                                            static_cast<double>(report.hosts_checked)
                                      : 1.0;
    return report;
}

} // namespace geoleak
