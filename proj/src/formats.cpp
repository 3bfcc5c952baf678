#include "geoleak/formats.hpp"

#include "geoleak/util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace geoleak {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return in;
}

std::string fmt(double v, const char* conv) {
    char buf[64];
    std::snprintf(buf, sizeof buf, conv, v);
    return buf;
}

// Display precision for plot-ready columns; %.17g wherever a file is re-read.
std::string fmt_g(double v) { return fmt(v, "%.9g"); }
std::string fmt_exact(double v) { return fmt(v, "%.17g"); }

[[noreturn]] void bad_line(const std::string& path, std::size_t line_no, const char* what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

json number_or_inf(double v) {
    if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
    return json(v);
}

} // namespace

void write_agent_csv(const std::string& path, const std::vector<LocationSample>& samples) {
    auto out = open_out(path);
    out << "user_id,ts_ms,lat,lon\n";
    for (const auto& s : samples)
        out << s.user_id << ',' << s.ts << ',' << format_coord(s.point.lat) << ','
            << format_coord(s.point.lon) << '\n';
}

std::vector<LocationSample> read_agent_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<LocationSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cols = split(t, ',');
        if (line_no == 1 && cols.size() >= 1 && cols[0] == "user_id") continue;
        if (cols.size() != 4) bad_line(path, line_no, "expected user_id,ts_ms,lat,lon");
        const auto ts = parse_int(trim(cols[1]));
        const auto lat = parse_double(trim(cols[2]));
        const auto lon = parse_double(trim(cols[3]));
        if (trim(cols[0]).empty() || !ts || !lat || !lon)
            bad_line(path, line_no, "malformed agent sample");
        samples.push_back(LocationSample{trim(cols[0]), *ts, GeoPoint{*lat, *lon},
                                         SampleSource::agent});
    }
    return samples;
}

json observation_to_json(const GeoObservation& obs) {
    json j;
    j["user_id"] = obs.user_id;
    j["ts_ms"] = obs.ts;
    j["lat"] = obs.point.lat;
    j["lon"] = obs.point.lon;
    j["direction"] = obs.direction == Direction::outgoing ? "outgoing" : "incoming";
    if (obs.http_host) j["http_host"] = *obs.http_host;
    j["packet_refs"] = {obs.packet_refs.first, obs.packet_refs.second};
    j["label"] = label_name(obs.label);
    return j;
}

GeoObservation observation_from_json(const json& j) {
    GeoObservation obs;
    obs.user_id = j.at("user_id").get<std::string>();
    obs.ts = j.at("ts_ms").get<TimestampMs>();
    obs.point = GeoPoint{j.at("lat").get<double>(), j.at("lon").get<double>()};
    const auto dir = j.at("direction").get<std::string>();
    if (dir != "outgoing" && dir != "incoming")
        throw std::runtime_error("observation: bad direction " + dir);
    obs.direction = dir == "outgoing" ? Direction::outgoing : Direction::incoming;
    if (j.contains("http_host")) obs.http_host = j.at("http_host").get<std::string>();
    const auto& refs = j.at("packet_refs");
    if (!refs.is_array() || refs.size() != 2)
        throw std::runtime_error("observation: packet_refs must be a pair");
    obs.packet_refs = {refs[0].get<std::size_t>(), refs[1].get<std::size_t>()};
    const auto label = j.at("label").get<std::string>();
    if (label == "true")
        obs.label = LeakLabel::yes;
    else if (label == "false")
        obs.label = LeakLabel::no;
    else if (label == "unknown")
        obs.label = LeakLabel::unknown;
    else if (label == "unlabeled")
        obs.label = LeakLabel::unlabeled;
    else
        throw std::runtime_error("observation: bad label " + label);
    return obs;
}

void write_observations(const std::string& path, const std::vector<GeoObservation>& obs) {
    auto out = open_out(path);
    for (const auto& o : obs) out << observation_to_json(o).dump() << '\n';
}

std::vector<GeoObservation> read_observations(const std::string& path) {
    auto in = open_in(path);
    std::vector<GeoObservation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) bad_line(path, line_no, "invalid JSON");
        try {
            out.push_back(observation_from_json(j));
        } catch (const std::exception& e) {
            bad_line(path, line_no, e.what());
        }
    }
    return out;
}

json poi_to_json(const POI& poi) {
    json j;
    j["poi_id"] = poi.poi_id;
    j["user_id"] = poi.user_id;
    j["lat"] = poi.centroid.lat;
    j["lon"] = poi.centroid.lon;
    j["dwell_ms"] = poi.dwell_time_ms;
    j["weight"] = poi.weight;
    json visits = json::array();
    for (const auto& v : poi.visits)
        visits.push_back({{"start", v.window.start}, {"end", v.window.end},
                          {"members", v.member_count}});
    j["visits"] = visits;
    return j;
}

POI poi_from_json(const json& j) {
    POI poi;
    poi.poi_id = j.at("poi_id").get<int>();
    poi.user_id = j.at("user_id").get<std::string>();
    poi.centroid = GeoPoint{j.at("lat").get<double>(), j.at("lon").get<double>()};
    poi.dwell_time_ms = j.at("dwell_ms").get<TimestampMs>();
    poi.weight = j.value("weight", 0.0);
    for (const auto& v : j.at("visits")) {
        StayPoint stay;
        stay.user_id = poi.user_id;
        stay.centroid = poi.centroid;
        stay.window = TimeWindow{v.at("start").get<TimestampMs>(),
                                 v.at("end").get<TimestampMs>()};
        stay.member_count = v.at("members").get<std::size_t>();
        poi.visits.push_back(std::move(stay));
    }
    return poi;
}

void write_pois_json(const std::string& path, const std::vector<POI>& pois) {
    auto out = open_out(path);
    json arr = json::array();
    for (const auto& p : pois) arr.push_back(poi_to_json(p));
    out << arr.dump(2) << '\n';
}

std::vector<POI> read_pois_json(const std::string& path) {
    auto in = open_in(path);
    json arr;
    try {
        arr = json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (!arr.is_array()) throw std::runtime_error(path + ": expected a JSON array");
    std::vector<POI> pois;
    try {
        for (const auto& j : arr) pois.push_back(poi_from_json(j));
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return pois;
}

json leakage_stats_to_json(const LeakageStats& stats) {
    json j;
    j["user_id"] = stats.user_id;
    j["active_time_hours"] = stats.active_time_hours;
    j["validated_leaks"] = stats.validated_leaks;
    j["leak_interval_hours"] = number_or_inf(stats.leak_interval_hours);
    j["group"] = group_name(stats.group);
    j["exposed_hours"] = stats.exposed_hours;
    j["coverage_rate"] = stats.coverage_rate;
    j["relative_stdev"] = stats.relative_stdev;
    return j;
}

void write_stats_csv(const std::string& path, const std::vector<LeakageStats>& stats) {
    auto out = open_out(path);
    out << "user_id,active_time_hours,validated_leaks,leak_interval_hours,group,"
           "exposed_hours,coverage_rate,relative_stdev\n";
    for (const auto& s : stats) {
        out << s.user_id << ',' << s.active_time_hours << ',' << s.validated_leaks << ','
            << (std::isinf(s.leak_interval_hours) ? "inf" : fmt_g(s.leak_interval_hours))
            << ',' << group_name(s.group) << ',' << s.exposed_hours << ','
            << fmt_g(s.coverage_rate) << ',' << fmt_g(s.relative_stdev) << '\n';
    }
}

void write_regression_rows_csv(const std::string& path,
                               const std::vector<RegressionRow>& rows) {
    auto out = open_out(path);
    out << "coverage,leak_rate,relative_stdev,weighted_discovery\n";
    for (const auto& r : rows)
        out << fmt_exact(r.coverage) << ',' << fmt_exact(r.leak_rate) << ','
            << fmt_exact(r.relative_stdev) << ',' << fmt_exact(r.weighted_discovery) << '\n';
}

std::vector<RegressionRow> read_regression_rows_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<RegressionRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cols = split(t, ',');
        if (line_no == 1 && cols.size() >= 1 && cols[0] == "coverage") continue;
        if (cols.size() != 4)
            bad_line(path, line_no, "expected coverage,leak_rate,relative_stdev,weighted_discovery");
        RegressionRow row;
        const auto c = parse_double(trim(cols[0]));
        const auto l = parse_double(trim(cols[1]));
        const auto s = parse_double(trim(cols[2]));
        const auto w = parse_double(trim(cols[3]));
        if (!c || !l || !s || !w) bad_line(path, line_no, "malformed regression row");
        row.coverage = *c;
        row.leak_rate = *l;
        row.relative_stdev = *s;
        row.weighted_discovery = *w;
        rows.push_back(row);
    }
    return rows;
}

json regression_fit_to_json(const RegressionFit& fit) {
    json j;
    j["coefficients"] = fit.coefficients;
    j["std_errors"] = fit.std_errors;
    j["r2"] = fit.r2;
    j["adjusted_r2"] = fit.adjusted_r2;
    j["f_statistic"] = number_or_inf(fit.f_statistic);
    j["residual_std_error"] = fit.residual_std_error;
    j["df"] = fit.df;
    return j;
}

void write_hosts_csv(const std::string& path, const std::vector<HostStats>& hosts) {
    auto out = open_out(path);
    out << "host,users,leak_events,avg_events_per_user,category,suspicious\n";
    for (const auto& h : hosts) {
        out << h.host << ',' << h.users.size() << ',' << h.leak_events << ','
            << fmt_g(h.avg_events_per_user) << ',' << h.category.value_or("") << ',';
        if (h.suspicious) out << (*h.suspicious ? "yes" : "no");
        out << '\n';
    }
}

void write_tfidf_csv(const std::string& path, const TfidfMatrix& matrix,
                     const InstallTable& installs, const std::vector<HostStats>& hosts) {
    std::map<std::string, const HostStats*> lookup;
    for (const auto& h : hosts) lookup[h.host] = &h;
    auto out = open_out(path);
    out << "app_id,host,tf,idf,raw,score\n";
    for (std::size_t a = 0; a < matrix.apps.size(); ++a) {
        const double idf = inverse_document_frequency(matrix.apps[a], installs);
        for (std::size_t h = 0; h < matrix.hosts.size(); ++h) {
            const auto it = lookup.find(matrix.hosts[h]);
            if (it == lookup.end())
                throw std::runtime_error("tf-idf export: host missing from table: " +
                                         matrix.hosts[h]);
            const double tf = term_frequency(matrix.apps[a], it->second->users, installs);
            out << matrix.apps[a] << ',' << matrix.hosts[h] << ',' << fmt_g(tf) << ','
                << fmt_g(idf) << ',' << fmt_g(matrix.raw[a][h]) << ','
                << fmt_g(matrix.scores[a][h]) << '\n';
        }
    }
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::runtime_error(std::string("scenario config: unknown key '") + it.key() +
                                     "' in " + where);
    }
}

GeoFence fence_from_json(const json& j) {
    check_keys(j, {"lat_min", "lat_max", "lon_min", "lon_max"}, "fence");
    GeoFence f;
    f.lat_min = j.at("lat_min").get<double>();
    f.lat_max = j.at("lat_max").get<double>();
    f.lon_min = j.at("lon_min").get<double>();
    f.lon_max = j.at("lon_max").get<double>();
    return f;
}

AppProfile app_from_json(const json& j) {
    check_keys(j,
               {"app_id", "install_prob", "hosts", "mean_leaks_per_hour", "burst_on_prob",
                "burst_off_prob", "payload_template"},
               "apps[]");
    AppProfile app;
    app.app_id = j.at("app_id").get<std::string>();
    app.install_prob = j.value("install_prob", app.install_prob);
    app.hosts = j.at("hosts").get<std::vector<std::string>>();
    app.mean_leaks_per_hour = j.value("mean_leaks_per_hour", app.mean_leaks_per_hour);
    app.burst_on_prob = j.value("burst_on_prob", app.burst_on_prob);
    app.burst_off_prob = j.value("burst_off_prob", app.burst_off_prob);
    app.payload_template = j.value("payload_template", app.payload_template);
    return app;
}

} // namespace

ScenarioConfig scenario_config_from_json(const json& j) {
    check_keys(j,
               {"seed", "n_users", "days", "fence", "pois_per_user", "agent_period_ms",
                "agent_availability", "apps", "noise", "anchor_primary", "anchor_secondary",
                "transit_speed_kmh", "start_ts_ms", "device_subnet"},
               "scenario");
    ScenarioConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_users = j.value("n_users", cfg.n_users);
    cfg.days = j.value("days", cfg.days);
    if (j.contains("fence")) cfg.fence = fence_from_json(j.at("fence"));
    if (j.contains("pois_per_user")) {
        const auto& r = j.at("pois_per_user");
        check_keys(r, {"min", "max"}, "pois_per_user");
        cfg.pois_per_user.min = r.at("min").get<int>();
        cfg.pois_per_user.max = r.at("max").get<int>();
    }
    cfg.agent_period_ms = j.value("agent_period_ms", cfg.agent_period_ms);
    cfg.agent_availability = j.value("agent_availability", cfg.agent_availability);
    if (j.contains("apps"))
        for (const auto& a : j.at("apps")) cfg.apps.push_back(app_from_json(a));
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        check_keys(n, {"incoming_coords_per_hour", "float_noise_per_hour", "noise_host"},
                   "noise");
        cfg.noise.incoming_coords_per_hour =
            n.value("incoming_coords_per_hour", cfg.noise.incoming_coords_per_hour);
        cfg.noise.float_noise_per_hour =
            n.value("float_noise_per_hour", cfg.noise.float_noise_per_hour);
        cfg.noise.noise_host = n.value("noise_host", cfg.noise.noise_host);
    }
    cfg.anchor_primary = j.value("anchor_primary", cfg.anchor_primary);
    cfg.anchor_secondary = j.value("anchor_secondary", cfg.anchor_secondary);
    cfg.transit_speed_kmh = j.value("transit_speed_kmh", cfg.transit_speed_kmh);
    cfg.start_ts_ms = j.value("start_ts_ms", cfg.start_ts_ms);
    if (j.contains("device_subnet")) {
        const auto cidr = parse_cidr(j.at("device_subnet").get<std::string>());
        if (!cidr) throw std::runtime_error("scenario config: bad device_subnet");
        cfg.device_subnet = *cidr;
    }
    return cfg;
}

json scenario_config_to_json(const ScenarioConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["n_users"] = cfg.n_users;
    j["days"] = cfg.days;
    j["fence"] = {{"lat_min", cfg.fence.lat_min},
                  {"lat_max", cfg.fence.lat_max},
                  {"lon_min", cfg.fence.lon_min},
                  {"lon_max", cfg.fence.lon_max}};
    j["pois_per_user"] = {{"min", cfg.pois_per_user.min}, {"max", cfg.pois_per_user.max}};
    j["agent_period_ms"] = cfg.agent_period_ms;
    j["agent_availability"] = cfg.agent_availability;
    json apps = json::array();
    for (const auto& a : cfg.apps)
        apps.push_back({{"app_id", a.app_id},
                        {"install_prob", a.install_prob},
                        {"hosts", a.hosts},
                        {"mean_leaks_per_hour", a.mean_leaks_per_hour},
                        {"burst_on_prob", a.burst_on_prob},
                        {"burst_off_prob", a.burst_off_prob},
                        {"payload_template", a.payload_template}});
    j["apps"] = apps;
    j["noise"] = {{"incoming_coords_per_hour", cfg.noise.incoming_coords_per_hour},
                  {"float_noise_per_hour", cfg.noise.float_noise_per_hour},
                  {"noise_host", cfg.noise.noise_host}};
    j["anchor_primary"] = cfg.anchor_primary;
    j["anchor_secondary"] = cfg.anchor_secondary;
    j["transit_speed_kmh"] = cfg.transit_speed_kmh;
    j["start_ts_ms"] = cfg.start_ts_ms;
    j["device_subnet"] = cfg.device_subnet.to_string();
    return j;
}

ScenarioConfig load_scenario_config(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        j = json::parse(in);
        return scenario_config_from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_ground_truth_json(const std::string& path, const GroundTruth& gt) {
    json j;
    json users = json::object();
    for (const auto& [uid, truth] : gt.users) {
        json pois = json::array();
        for (const auto& p : truth.pois)
            pois.push_back({{"lat", p.center.lat},
                            {"lon", p.center.lon},
                            {"weight", p.weight},
                            {"dwell_ms_per_day", p.dwell_ms_per_day}});
        json traj = json::array();
        for (const auto& bp : truth.trajectory)
            traj.push_back({bp.ts, bp.point.lat, bp.point.lon});
        users[uid] = {{"pois", pois}, {"trajectory", traj}};
    }
    j["users"] = users;
    json packets = json::array();
    for (const auto& p : gt.packets) {
        json row;
        row["user_id"] = p.user_id;
        switch (p.kind) {
        case PacketKind::leak: row["kind"] = "leak"; break;
        case PacketKind::noise_incoming: row["kind"] = "noise_incoming"; break;
        case PacketKind::noise_float: row["kind"] = "noise_float"; break;
        }
        row["app_id"] = p.app_id;
        row["host"] = p.host;
        row["true_location"] = p.true_location;
        if (p.kind != PacketKind::noise_float) {
            row["lat"] = p.planted.lat;
            row["lon"] = p.planted.lon;
        }
        packets.push_back(row);
    }
    j["packets"] = packets;
    json host_app = json::object();
    for (const auto& [host, apps] : gt.host_app) host_app[host] = apps;
    j["host_app"] = host_app;
    json installs = json::object();
    for (const auto& [user, apps] : gt.installs) installs[user] = apps;
    j["installs"] = installs;

    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace geoleak
