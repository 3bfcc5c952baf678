#include "geoleak/pipeline.hpp"

#include "geoleak/formats.hpp"
#include "geoleak/geocoder.hpp"
#include "geoleak/util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <stdexcept>

namespace geoleak {

namespace {

using nlohmann::json;

std::vector<LocationSample> to_traffic_samples(const std::vector<GeoObservation>& obs,
                                               bool true_only) {
    std::vector<LocationSample> out;
    for (const auto& o : obs) {
        if (true_only && o.label != LeakLabel::yes) continue;
        out.push_back(LocationSample{o.user_id, o.ts, o.point, SampleSource::traffic});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LocationSample& a, const LocationSample& b) { return a.ts < b.ts; });
    return out;
}

std::vector<POI> incremental_pois(const std::vector<LocationSample>& samples,
                                  const ClusterConfig& cfg) {
    return merge_stays(incremental_cluster(samples, cfg), cfg.merge_dist_m);
}

json score_to_json(const ScoreReport& s) {
    return json{{"total", s.total},
                {"true_positive", s.true_positive},
                {"precision", s.precision},
                {"recall", s.recall},
                {"weighted_discovery", s.weighted_discovery}};
}

// Micro-average accumulator for Table-2/5-shaped aggregates.
struct ScoreAccum {
    std::int64_t users = 0;
    std::int64_t total = 0;
    std::int64_t tp = 0;
    std::int64_t benchmark = 0;
    double matched_dwell = 0.0;
    double total_dwell = 0.0;

    void add(const UserAnalysis& ua, const std::string& algo) {
        const auto it = ua.scores.find(algo);
        if (it == ua.scores.end()) return;
        ++users;
        total += it->second.total;
        tp += it->second.true_positive;
        benchmark += static_cast<std::int64_t>(ua.benchmark.size());
        matched_dwell += ua.matched_dwell_ms.at(algo);
        total_dwell += ua.total_dwell_ms;
    }

    json to_json() const {
        json j;
        j["users"] = users;
        j["total"] = total;
        j["true_positive"] = tp;
        j["benchmark"] = benchmark;
        j["precision"] = total > 0 ? static_cast<double>(tp) / static_cast<double>(total) : 0.0;
        j["poi_discovery"] =
            benchmark > 0 ? static_cast<double>(tp) / static_cast<double>(benchmark) : 0.0;
        j["weighted_discovery"] = total_dwell > 0.0 ? matched_dwell / total_dwell : 0.0;
        return j;
    }
};

json build_report(const PipelineResult& result, const PipelineConfig& cfg,
                  std::size_t ingest_skipped) {
    json report;

    report["funnel"] = {{"packets", result.funnel.packets},
                        {"packets_outgoing", result.funnel.packets_outgoing},
                        {"candidates", result.funnel.candidates},
                        {"candidates_after_direction", result.funnel.candidates_after_direction},
                        {"observations_paired", result.funnel.observations_paired},
                        {"candidates_unpaired", result.funnel.candidates_unpaired},
                        {"pairs_invalid_domain", result.funnel.pairs_invalid_domain},
                        {"observations_in_fence", result.funnel.observations_in_fence},
                        {"ingest_skipped", ingest_skipped}};

    json labels = {{"true", 0}, {"false", 0}, {"unknown", 0}, {"total", 0}};
    for (const auto& o : result.observations) {
        labels[label_name(o.label)] = labels[label_name(o.label)].get<std::int64_t>() + 1;
        labels["total"] = labels["total"].get<std::int64_t>() + 1;
    }
    report["labels"] = labels;

    std::set<std::string> algos;
    json users = json::object();
    for (const auto& ua : result.users) {
        json u;
        u["stats"] = leakage_stats_to_json(ua.stats);
        u["benchmark_pois"] = ua.benchmark.size();
        json scores = json::object();
        for (const auto& [algo, score] : ua.scores) {
            scores[algo] = score_to_json(score);
            algos.insert(algo);
        }
        u["scores"] = scores;
        users[ua.user_id] = u;
    }
    report["users"] = users;

    json totals = json::object();
    for (const auto& algo : algos) {
        ScoreAccum acc;
        for (const auto& ua : result.users) acc.add(ua, algo);
        totals[algo] = acc.to_json();
    }
    report["scores"] = totals;

    // Discovery by leakage-rate group, incremental-traffic method.
    json groups = json::object();
    for (const auto g :
         {LeakageGroup::high, LeakageGroup::medium, LeakageGroup::low, LeakageGroup::no_leakage}) {
        ScoreAccum acc;
        for (const auto& ua : result.users)
            if (ua.stats.group == g) acc.add(ua, "incremental");
        groups[group_name(g)] = acc.to_json();
    }
    {
        ScoreAccum acc;
        for (const auto& ua : result.users) acc.add(ua, "incremental");
        groups["total"] = acc.to_json();
    }
    report["groups"] = groups;

    json hosts = json::array();
    for (const auto& h : result.hosts.hosts) {
        json row;
        row["host"] = h.host;
        row["users"] = h.users.size();
        row["leak_events"] = h.leak_events;
        row["avg_events_per_user"] = h.avg_events_per_user;
        if (h.category) row["category"] = *h.category;
        if (h.suspicious) row["suspicious"] = *h.suspicious;
        hosts.push_back(row);
    }
    report["hosts"] = hosts;
    report["unattributed_observations"] = result.hosts.unattributed;

    if (result.tfidf) {
        const TfidfMatrix& m = *result.tfidf;
        json top = json::object();
        for (std::size_t h = 0; h < m.hosts.size(); ++h) {
            std::vector<std::size_t> order(m.apps.size());
            for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
            std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                if (m.scores[x][h] != m.scores[y][h]) return m.scores[x][h] > m.scores[y][h];
                return m.apps[x] < m.apps[y];
            });
            json ranked = json::array();
            for (std::size_t r = 0; r < order.size() && r < static_cast<std::size_t>(cfg.tfidf_top_k);
                 ++r)
                ranked.push_back(
                    {{"app", m.apps[order[r]]}, {"score", m.scores[order[r]][h]}});
            top[m.hosts[h]] = ranked;
        }
        report["tfidf_top"] = top;
    }

    report["regression"] = result.fit ? regression_fit_to_json(*result.fit) : json(nullptr);
    report["regression_rows"] = result.rows.size();
    return report;
}

} // namespace

PipelineResult run_pipeline(std::vector<PacketRecord> records,
                            std::vector<LocationSample> agent_samples,
                            const PipelineConfig& cfg, std::size_t ingest_skipped) {
    PipelineResult result;

    FunnelResult funnel = extract_leaks(records, cfg.extraction);
    result.funnel = funnel.counts;

    std::map<std::string, std::vector<GeoObservation>> obs_by_user;
    for (auto& o : funnel.observations) obs_by_user[o.user_id].push_back(std::move(o));
    std::map<std::string, std::vector<LocationSample>> agent_by_user;
    for (auto& s : agent_samples) agent_by_user[s.user_id].push_back(std::move(s));

    std::vector<std::string> user_ids;
    for (const auto& [uid, _] : obs_by_user) user_ids.push_back(uid);
    for (const auto& [uid, _] : agent_by_user)
        if (!obs_by_user.count(uid)) user_ids.push_back(uid);
    std::sort(user_ids.begin(), user_ids.end());
    // Materialize every entry now; the parallel section only reads.
    for (const auto& uid : user_ids) {
        obs_by_user[uid];
        agent_by_user[uid];
    }

    std::unique_ptr<ReverseGeocoder> geocoder;
    if (!cfg.geocoder_path.empty())
        geocoder =
            std::make_unique<FileStubGeocoder>(FileStubGeocoder::from_file(cfg.geocoder_path));

    std::vector<UserAnalysis> analyses(user_ids.size());
    parallel_for(user_ids.size(), [&](std::size_t i) {
        UserAnalysis ua;
        ua.user_id = user_ids[i];

        auto& agent = agent_by_user.find(ua.user_id)->second;
        std::stable_sort(agent.begin(), agent.end(),
                         [](const LocationSample& a, const LocationSample& b) {
                             return a.ts < b.ts;
                         });
        ua.labeled = label_observations(std::move(obs_by_user.find(ua.user_id)->second), agent,
                                        cfg.labeling);
        ua.stats = compute_leakage_stats(ua.user_id, ua.labeled, agent);

        ua.benchmark = incremental_pois(agent, cfg.cluster);
        const auto weights = poi_weights(ua.benchmark);
        for (auto& poi : ua.benchmark) {
            poi.weight = weights.count(poi.poi_id) ? weights.at(poi.poi_id) : 0.0;
            ua.total_dwell_ms += static_cast<double>(poi.dwell_time_ms);
        }

        const auto traffic_all = to_traffic_samples(ua.labeled, false);
        ua.traffic["incremental"] = incremental_pois(traffic_all, cfg.cluster);
        ua.traffic["dbscan"] =
            dbscan_cluster(traffic_all, cfg.cluster.eps_spatial_m, cfg.cluster.min_pts);
        ua.traffic["stdbscan"] =
            stdbscan_cluster(traffic_all, cfg.cluster.eps_spatial_m, cfg.cluster.eps_temporal_ms,
                             cfg.cluster.min_pts, cfg.cluster.merge_dist_m);
        ua.traffic["incremental_true"] =
            incremental_pois(to_traffic_samples(ua.labeled, true), cfg.cluster);
        if (geocoder)
            for (const char* base : {"incremental", "dbscan", "stdbscan"})
                ua.traffic[std::string(base) + "_semantic"] =
                    semantic_filter(ua.traffic[base], *geocoder);

        for (const auto& [algo, pois] : ua.traffic) {
            const auto match = match_pois(pois, ua.benchmark, cfg.match_dist_m);
            ScoreReport score =
                precision_recall(match, static_cast<std::int64_t>(ua.benchmark.size()));
            score.weighted_discovery = weighted_discovery(match, weights);
            ua.scores[algo] = score;
            ua.matched_dwell_ms[algo] = score.weighted_discovery * ua.total_dwell_ms;
        }
        analyses[i] = std::move(ua);
    });

    result.users = std::move(analyses);
    for (auto& ua : result.users) {
        result.observations.insert(result.observations.end(), ua.labeled.begin(),
                                   ua.labeled.end());
        result.stats.push_back(ua.stats);
        if (ua.stats.active_time_hours > 0) {
            RegressionRow row;
            row.coverage = ua.stats.coverage_rate;
            row.leak_rate = static_cast<double>(ua.stats.validated_leaks) /
                            static_cast<double>(ua.stats.active_time_hours);
            row.relative_stdev = ua.stats.relative_stdev;
            row.weighted_discovery = ua.scores.at("incremental").weighted_discovery;
            result.rows.push_back(row);
        } else if (!ua.labeled.empty()) {
            std::cerr << "geoleak: user " << ua.user_id
                      << " has traffic but no agent data; excluded from the regression\n";
        }
    }

    if (result.rows.size() >= 5) {
        try {
            result.fit = fit_exposure_regression(result.rows);
        } catch (const std::exception& e) {
            std::cerr << "geoleak: regression skipped: " << e.what() << '\n';
        }
    } else {
        std::cerr << "geoleak: regression skipped: " << result.rows.size()
                  << " usable rows (need 5)\n";
    }

    result.hosts = extract_hosts(result.observations);
    if (!cfg.categories_path.empty())
        result.hosts.hosts =
            classify_hosts(std::move(result.hosts.hosts), load_category_table(cfg.categories_path));
    if (!cfg.installs_path.empty()) {
        result.installs = load_install_table(cfg.installs_path);
        if (result.installs.empty() || result.hosts.hosts.empty())
            std::cerr << "geoleak: tf-idf skipped: empty install table or no leaking hosts\n";
        else
            result.tfidf = tfidf_matrix(result.installs, result.hosts.hosts);
    }

    result.report = build_report(result, cfg, ingest_skipped);
    return result;
}

std::vector<std::string> write_report(const PipelineResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto track = [&written](const fs::path& p) {
        written.push_back(p.string());
        return p.string();
    };
    try {
        write_observations(track(dir / "observations.jsonl"), result.observations);
        write_stats_csv(track(dir / "stats.csv"), result.stats);

        std::map<std::string, std::vector<POI>> by_algo;
        for (const auto& ua : result.users) {
            by_algo["agent"].insert(by_algo["agent"].end(), ua.benchmark.begin(),
                                    ua.benchmark.end());
            for (const auto& [algo, pois] : ua.traffic)
                by_algo[algo].insert(by_algo[algo].end(), pois.begin(), pois.end());
        }
        for (const auto& [algo, pois] : by_algo)
            write_pois_json(track(dir / ("pois_" + algo + ".json")), pois);

        write_regression_rows_csv(track(dir / "regression_rows.csv"), result.rows);
        write_hosts_csv(track(dir / "hosts.csv"), result.hosts.hosts);
        if (result.tfidf)
            write_tfidf_csv(track(dir / "tfidf.csv"), *result.tfidf, result.installs,
                            result.hosts.hosts);

        std::ofstream out(track(dir / "report.json"));
        if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
        out << result.report.dump(2) << '\n';
    } catch (...) {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
    return written;
}

} // namespace geoleak
