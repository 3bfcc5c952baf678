#include "geoleak/attribution.hpp"
#include "geoleak/clustering.hpp"
#include "geoleak/extraction.hpp"
#include "geoleak/formats.hpp"
#include "geoleak/geocoder.hpp"
#include "geoleak/packet_log.hpp"
#include "geoleak/pcap.hpp"
#include "geoleak/pipeline.hpp"
#include "geoleak/poi_metrics.hpp"
#include "geoleak/synthesis.hpp"
#include "geoleak/util.hpp"
#include "geoleak/validation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

using namespace geoleak;

// Bad flag values exit 1 (usage); data/config problems exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& msg) { throw UsageError(msg); }

GeoFence parse_fence_arg(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 4) fail("--fence expects latmin,latmax,lonmin,lonmax");
    double v[4];
    for (int i = 0; i < 4; ++i) {
        const auto d = parse_double(trim(parts[i]));
        if (!d) fail("--fence: bad number '" + parts[i] + "'");
        v[i] = *d;
    }
    const GeoFence fence{v[0], v[1], v[2], v[3]};
    if (!fence.valid()) fail("--fence bounds are inverted or out of range");
    return fence;
}

DigitRange parse_digits_arg(const std::string& s, const char* flag) {
    const auto parts = split(s, ',');
    auto one = [&](const std::string& p) {
        const auto n = parse_int(trim(p));
        if (!n || *n < 1 || *n > 12) fail(std::string(flag) + ": bad digit count '" + p + "'");
        return static_cast<int>(*n);
    };
    if (parts.size() == 1) {
        const int n = one(parts[0]);
        return DigitRange{n, n};
    }
    if (parts.size() == 2) {
        const DigitRange r{one(parts[0]), one(parts[1])};
        if (r.min > r.max) fail(std::string(flag) + ": min exceeds max");
        return r;
    }
    fail(std::string(flag) + " expects N or MIN,MAX");
}

// Flags shared by every subcommand that ingests a capture.
struct CaptureFlags {
    std::string input;
    std::string format; // "", "pcap", "jsonl"
    std::string subnet;
    std::string fence;
    std::string int_digits;
    std::string frac_digits;
    bool allow_sign = false;
    std::int64_t pair_window_ms = 0;
    bool all_directions = false;

    void add_to(CLI::App* cmd, const char* input_flag) {
        cmd->add_option(input_flag, input, "capture file (.jsonl packet log or .pcap)")
            ->required();
        cmd->add_option("--format", format, "capture format: pcap or jsonl (default: by extension)")
            ->check(CLI::IsMember({"pcap", "jsonl"}));
        cmd->add_option("--subnet", subnet, "device subnet CIDR (default 10.8.0.0/16)");
        cmd->add_option("--fence", fence, "geo-fence latmin,latmax,lonmin,lonmax");
        cmd->add_option("--int-digits", int_digits, "integer digit widths, N or MIN,MAX (default 2)");
        cmd->add_option("--frac-digits", frac_digits,
                        "fraction digit widths, N or MIN,MAX (default 7)");
        cmd->add_flag("--allow-sign", allow_sign, "accept a leading +/- on coordinates");
        cmd->add_option("--pair-window-ms", pair_window_ms,
                        "max gap between paired lat/lon candidates (default 0)");
        cmd->add_flag("--all-directions", all_directions,
                      "keep incoming candidates (disables the outgoing filter)");
    }

    ExtractionConfig to_config() const {
        ExtractionConfig cfg;
        if (!subnet.empty()) {
            const auto cidr = parse_cidr(subnet);
            if (!cidr) fail("--subnet: bad CIDR '" + subnet + "'");
            cfg.device_subnet = *cidr;
        }
        if (!fence.empty()) cfg.fence = parse_fence_arg(fence);
        if (!int_digits.empty()) cfg.int_digits = parse_digits_arg(int_digits, "--int-digits");
        if (!frac_digits.empty()) cfg.frac_digits = parse_digits_arg(frac_digits, "--frac-digits");
        cfg.allow_sign = allow_sign;
        if (pair_window_ms < 0) fail("--pair-window-ms must be >= 0");
        cfg.pair_window_ms = pair_window_ms;
        cfg.outgoing_only = !all_directions;
        return cfg;
    }

    IngestResult ingest(const ExtractionConfig& cfg) const {
        const bool is_pcap =
            format == "pcap" || (format.empty() && std::string_view(input).ends_with(".pcap"));
        return is_pcap ? ingest_pcap(input, cfg) : ingest_packet_log(input, cfg);
    }
};

LabelingConfig labeling_config(double window_min, double dist_m) {
    if (window_min <= 0 || dist_m <= 0) fail("labeling window and distance must be positive");
    return LabelingConfig{static_cast<TimestampMs>(std::llround(window_min * 60000.0)), dist_m};
}

// Per-user labeling over mixed-user files; output sorted by user, then time.
std::vector<GeoObservation> label_all(std::vector<GeoObservation> obs,
                                      std::vector<LocationSample> agent,
                                      const LabelingConfig& cfg) {
    std::map<std::string, std::vector<GeoObservation>> by_user;
    for (auto& o : obs) by_user[o.user_id].push_back(std::move(o));
    std::map<std::string, std::vector<LocationSample>> agent_by_user;
    for (auto& s : agent) agent_by_user[s.user_id].push_back(std::move(s));
    for (auto& [uid, samples] : agent_by_user)
        std::stable_sort(samples.begin(), samples.end(),
                         [](const LocationSample& a, const LocationSample& b) {
                             return a.ts < b.ts;
                         });
    std::vector<GeoObservation> out;
    const std::vector<LocationSample> none;
    for (auto& [uid, group] : by_user) {
        std::stable_sort(group.begin(), group.end(),
                         [](const GeoObservation& a, const GeoObservation& b) {
                             if (a.ts != b.ts) return a.ts < b.ts;
                             return a.packet_refs < b.packet_refs;
                         });
        const auto it = agent_by_user.find(uid);
        auto labeled =
            label_observations(std::move(group), it == agent_by_user.end() ? none : it->second, cfg);
        out.insert(out.end(), std::make_move_iterator(labeled.begin()),
                   std::make_move_iterator(labeled.end()));
    }
    return out;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---- subcommand runners ----

struct ExtractArgs {
    CaptureFlags capture;
    std::string out;
};

int run_extract(const ExtractArgs& a) {
    const auto cfg = a.capture.to_config();
    const auto ingest = a.capture.ingest(cfg);
    const auto funnel = extract_leaks(ingest.records, cfg);
    write_observations(a.out, funnel.observations);
    const auto& c = funnel.counts;
    std::cerr << "geoleak: funnel packets=" << c.packets << " outgoing=" << c.packets_outgoing
              << " candidates=" << c.candidates
              << " after_direction=" << c.candidates_after_direction
              << " paired=" << c.observations_paired << " unpaired=" << c.candidates_unpaired
              << " invalid_domain=" << c.pairs_invalid_domain
              << " in_fence=" << c.observations_in_fence << " skipped_records=" << ingest.skipped
              << '\n';
    return 0;
}

struct LabelArgs {
    std::string obs, agent, out;
    double window_min = 10.0;
    double dist_m = 250.0;
};

int run_label(const LabelArgs& a) {
    auto labeled = label_all(read_observations(a.obs), read_agent_csv(a.agent),
                             labeling_config(a.window_min, a.dist_m));
    write_observations(a.out, labeled);
    std::map<std::string, std::int64_t> counts;
    for (const auto& o : labeled) ++counts[label_name(o.label)];
    std::cerr << "geoleak: labeled " << labeled.size() << " observations";
    for (const auto& [name, n] : counts) std::cerr << ' ' << name << '=' << n;
    std::cerr << '\n';
    return 0;
}

struct StatsArgs {
    std::string obs, agent, out;
    double window_min = 10.0;
    double dist_m = 250.0;
};

int run_stats(const StatsArgs& a) {
    auto obs = read_observations(a.obs);
    auto agent = read_agent_csv(a.agent);
    const bool needs_labels = std::any_of(obs.begin(), obs.end(), [](const GeoObservation& o) {
        return o.label == LeakLabel::unlabeled;
    });
    if (needs_labels)
        obs = label_all(std::move(obs), agent, labeling_config(a.window_min, a.dist_m));

    std::map<std::string, std::vector<GeoObservation>> by_user;
    for (auto& o : obs) by_user[o.user_id].push_back(std::move(o));
    std::map<std::string, std::vector<LocationSample>> agent_by_user;
    for (auto& s : agent) agent_by_user[s.user_id].push_back(std::move(s));
    for (const auto& [uid, _] : by_user) agent_by_user[uid];

    std::vector<LeakageStats> rows;
    const std::vector<GeoObservation> no_obs;
    for (const auto& [uid, samples] : agent_by_user) {
        const auto it = by_user.find(uid);
        rows.push_back(compute_leakage_stats(uid, it == by_user.end() ? no_obs : it->second,
                                             samples));
    }
    write_stats_csv(a.out, rows);
    std::cerr << "geoleak: wrote stats for " << rows.size() << " users\n";
    return 0;
}

struct ClusterArgs {
    std::string samples, algo = "incremental", semantic, out;
    double dist_m = 500.0;
    double time_min = 30.0;
    double max_gap_h = 6.0;
    double eps_temporal_min = -1.0;
    int min_pts = 5;
};

int run_cluster(const ClusterArgs& a) {
    std::vector<LocationSample> samples;
    if (std::string_view(a.samples).ends_with(".csv")) {
        samples = read_agent_csv(a.samples);
    } else {
        for (const auto& o : read_observations(a.samples))
            samples.push_back(LocationSample{o.user_id, o.ts, o.point, SampleSource::traffic});
    }

    ClusterConfig cfg;
    cfg.dist_threshold_m = cfg.eps_spatial_m = cfg.merge_dist_m = a.dist_m;
    cfg.time_threshold_ms = static_cast<TimestampMs>(std::llround(a.time_min * 60000.0));
    cfg.eps_temporal_ms = a.eps_temporal_min >= 0
                              ? static_cast<TimestampMs>(std::llround(a.eps_temporal_min * 60000.0))
                              : cfg.time_threshold_ms;
    cfg.max_gap_ms = static_cast<TimestampMs>(std::llround(a.max_gap_h * 3600000.0));
    cfg.min_pts = a.min_pts;
    if (cfg.dist_threshold_m <= 0 || cfg.time_threshold_ms <= 0 || cfg.min_pts < 1)
        fail("cluster thresholds must be positive");

    std::map<std::string, std::vector<LocationSample>> by_user;
    for (auto& s : samples) by_user[s.user_id].push_back(std::move(s));

    std::unique_ptr<ReverseGeocoder> geocoder;
    if (!a.semantic.empty())
        geocoder = std::make_unique<FileStubGeocoder>(FileStubGeocoder::from_file(a.semantic));

    std::vector<POI> all;
    for (auto& [uid, group] : by_user) {
        std::stable_sort(group.begin(), group.end(),
                         [](const LocationSample& x, const LocationSample& y) {
                             return x.ts < y.ts;
                         });
        std::vector<POI> pois;
        if (a.algo == "incremental")
            pois = merge_stays(incremental_cluster(group, cfg), cfg.merge_dist_m);
        else if (a.algo == "dbscan")
            pois = dbscan_cluster(group, cfg.eps_spatial_m, cfg.min_pts);
        else
            pois = stdbscan_cluster(group, cfg.eps_spatial_m, cfg.eps_temporal_ms, cfg.min_pts,
                                    cfg.merge_dist_m);
        if (geocoder) pois = semantic_filter(std::move(pois), *geocoder);
        all.insert(all.end(), std::make_move_iterator(pois.begin()),
                   std::make_move_iterator(pois.end()));
    }
    write_pois_json(a.out, all);
    std::cerr << "geoleak: " << a.algo << " found " << all.size() << " POIs across "
              << by_user.size() << " users\n";
    return 0;
}

struct MatchArgs {
    std::string traffic, agent, out;
    double match_dist_m = 500.0;
};

int run_match(const MatchArgs& a) {
    if (a.match_dist_m <= 0) fail("--match-dist-m must be positive");
    std::map<std::string, std::vector<POI>> traffic, agent;
    for (auto& p : read_pois_json(a.traffic)) traffic[p.user_id].push_back(std::move(p));
    for (auto& p : read_pois_json(a.agent)) agent[p.user_id].push_back(std::move(p));

    std::vector<std::string> users;
    for (const auto& [uid, _] : traffic) users.push_back(uid);
    for (const auto& [uid, _] : agent)
        if (!traffic.count(uid)) users.push_back(uid);
    std::sort(users.begin(), users.end());

    nlohmann::json per_user = nlohmann::json::object();
    std::int64_t sum_total = 0, sum_tp = 0, sum_benchmark = 0;
    double sum_matched_dwell = 0.0, sum_dwell = 0.0;
    for (const auto& uid : users) {
        const auto& t = traffic[uid];
        const auto& g = agent[uid];
        const auto match = match_pois(t, g, a.match_dist_m);
        ScoreReport score = precision_recall(match, static_cast<std::int64_t>(g.size()));
        double dwell = 0.0;
        if (!g.empty()) {
            const auto weights = poi_weights(g);
            score.weighted_discovery = weighted_discovery(match, weights);
            for (const auto& poi : g) dwell += static_cast<double>(poi.dwell_time_ms);
        }
        sum_total += score.total;
        sum_tp += score.true_positive;
        sum_benchmark += static_cast<std::int64_t>(g.size());
        sum_matched_dwell += score.weighted_discovery * dwell;
        sum_dwell += dwell;
        per_user[uid] = {{"total", score.total},
                         {"true_positive", score.true_positive},
                         {"precision", score.precision},
                         {"recall", score.recall},
                         {"weighted_discovery", score.weighted_discovery},
                         {"benchmark", g.size()}};
    }
    nlohmann::json report;
    report["users"] = per_user;
    report["total"] = {
        {"total", sum_total},
        {"true_positive", sum_tp},
        {"benchmark", sum_benchmark},
        {"precision",
         sum_total > 0 ? static_cast<double>(sum_tp) / static_cast<double>(sum_total) : 0.0},
        {"recall", sum_benchmark > 0
                       ? static_cast<double>(sum_tp) / static_cast<double>(sum_benchmark)
                       : 0.0},
        {"weighted_discovery", sum_dwell > 0.0 ? sum_matched_dwell / sum_dwell : 0.0}};
    write_json_file(a.out, report);
    std::cerr << "geoleak: matched " << sum_tp << "/" << sum_total << " traffic POIs against "
              << sum_benchmark << " benchmark POIs\n";
    return 0;
}

struct AttributeArgs {
    std::string obs, installs, categories, out, hosts_out;
};

int run_attribute(const AttributeArgs& a) {
    const auto obs = read_observations(a.obs);
    auto hosts = extract_hosts(obs);
    if (!a.categories.empty())
        hosts.hosts = classify_hosts(std::move(hosts.hosts), load_category_table(a.categories));
    const auto installs = load_install_table(a.installs);
    const auto matrix = tfidf_matrix(installs, hosts.hosts);
    write_tfidf_csv(a.out, matrix, installs, hosts.hosts);
    if (!a.hosts_out.empty()) write_hosts_csv(a.hosts_out, hosts.hosts);
    std::cerr << "geoleak: " << hosts.hosts.size() << " hosts, " << matrix.apps.size()
              << " apps, " << hosts.unattributed << " observations without a host\n";
    return 0;
}

struct RegressArgs {
    std::string stats, out;
};

int run_regress(const RegressArgs& a) {
    const auto rows = read_regression_rows_csv(a.stats);
    const auto fit = fit_exposure_regression(rows);
    write_json_file(a.out, regression_fit_to_json(fit));
    std::cerr << "geoleak: fit " << rows.size() << " rows, r2=" << fit.r2 << '\n';
    return 0;
}

struct SimulateArgs {
    std::string config, seed, out_dir;
};

int run_simulate(const SimulateArgs& a) {
    ScenarioConfig cfg = load_scenario_config(a.config);
    if (!a.seed.empty()) {
        try {
            cfg.seed = std::stoull(a.seed);
        } catch (const std::exception&) {
            fail("--seed: bad integer '" + a.seed + "'");
        }
    }
    const auto scenario = generate_scenario(cfg);
    std::filesystem::create_directories(a.out_dir);
    write_scenario(scenario, a.out_dir);
    std::cerr << "geoleak: simulated " << cfg.n_users << " users over " << cfg.days
              << " days: " << scenario.agent_samples.size() << " agent samples, "
              << scenario.packets.size() << " packets\n";
    return 0;
}

struct ReportArgs {
    CaptureFlags capture;
    std::string agent, installs, categories, geocoder, out_dir;
    double window_min = 10.0;
    double label_dist_m = 250.0;
    double cluster_dist_m = 500.0;
    double cluster_time_min = 30.0;
    double max_gap_h = 6.0;
    int min_pts = 5;
    double match_dist_m = 500.0;
    int top_k = 3;
};

int run_report(const ReportArgs& a) {
    PipelineConfig cfg;
    cfg.extraction = a.capture.to_config();
    cfg.labeling = labeling_config(a.window_min, a.label_dist_m);
    cfg.cluster.dist_threshold_m = cfg.cluster.eps_spatial_m = cfg.cluster.merge_dist_m =
        a.cluster_dist_m;
    cfg.cluster.time_threshold_ms =
        static_cast<TimestampMs>(std::llround(a.cluster_time_min * 60000.0));
    cfg.cluster.eps_temporal_ms = cfg.cluster.time_threshold_ms;
    cfg.cluster.max_gap_ms = static_cast<TimestampMs>(std::llround(a.max_gap_h * 3600000.0));
    cfg.cluster.min_pts = a.min_pts;
    cfg.match_dist_m = a.match_dist_m;
    cfg.tfidf_top_k = a.top_k;
    cfg.installs_path = a.installs;
    cfg.categories_path = a.categories;
    cfg.geocoder_path = a.geocoder;
    if (a.cluster_dist_m <= 0 || a.match_dist_m <= 0 || a.min_pts < 1 || a.top_k < 1)
        fail("report thresholds must be positive");

    auto ingest = a.capture.ingest(cfg.extraction);
    auto agent = read_agent_csv(a.agent);
    auto result = run_pipeline(std::move(ingest.records), std::move(agent), cfg, ingest.skipped);
    const auto written = write_report(result, a.out_dir);
    std::cerr << "geoleak: report written: " << written.size() << " files in " << a.out_dir
              << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"batch analysis of plaintext location leaks in mobile network captures"};
    app.require_subcommand(1);
    std::function<int()> action;

    auto extract_args = std::make_shared<ExtractArgs>();
    auto* extract = app.add_subcommand("extract", "scan a capture for leaked coordinate pairs");
    extract_args->capture.add_to(extract, "--input");
    extract->add_option("--out", extract_args->out, "observations JSONL")->required();
    extract->callback([&action, extract_args] {
        action = [extract_args] { return run_extract(*extract_args); };
    });

    auto label_args = std::make_shared<LabelArgs>();
    auto* label = app.add_subcommand("label", "validate observations against agent traces");
    label->add_option("--obs", label_args->obs, "observations JSONL")->required();
    label->add_option("--agent", label_args->agent, "agent samples CSV")->required();
    label->add_option("--window-min", label_args->window_min, "agent window, minutes (10)");
    label->add_option("--dist-m", label_args->dist_m, "truth distance, meters (250)");
    label->add_option("--out", label_args->out, "labeled observations JSONL")->required();
    label->callback(
        [&action, label_args] { action = [label_args] { return run_label(*label_args); }; });

    auto stats_args = std::make_shared<StatsArgs>();
    auto* stats = app.add_subcommand("stats", "per-user leakage statistics");
    stats->add_option("--obs", stats_args->obs, "observations JSONL (labeled or not)")->required();
    stats->add_option("--agent", stats_args->agent, "agent samples CSV")->required();
    stats->add_option("--window-min", stats_args->window_min, "agent window, minutes (10)");
    stats->add_option("--dist-m", stats_args->dist_m, "truth distance, meters (250)");
    stats->add_option("--out", stats_args->out, "stats CSV")->required();
    stats->callback(
        [&action, stats_args] { action = [stats_args] { return run_stats(*stats_args); }; });

    auto cluster_args = std::make_shared<ClusterArgs>();
    auto* cluster = app.add_subcommand("cluster", "infer POIs from location samples");
    cluster->add_option("--samples", cluster_args->samples,
                        "observations JSONL or agent CSV")->required();
    cluster->add_option("--algo", cluster_args->algo, "incremental|dbscan|stdbscan")
        ->check(CLI::IsMember({"incremental", "dbscan", "stdbscan"}));
    cluster->add_option("--dist-m", cluster_args->dist_m, "distance threshold / eps, meters (500)");
    cluster->add_option("--time-min", cluster_args->time_min, "stay duration, minutes (30)");
    cluster->add_option("--max-gap-h", cluster_args->max_gap_h, "max intra-stay gap, hours (6)");
    cluster->add_option("--eps-temporal-min", cluster_args->eps_temporal_min,
                        "st-dbscan temporal eps, minutes (defaults to --time-min)");
    cluster->add_option("--min-pts", cluster_args->min_pts, "density threshold (5)");
    cluster->add_option("--semantic", cluster_args->semantic, "geocoder stub CSV; drops highways");
    cluster->add_option("--out", cluster_args->out, "POIs JSON")->required();
    cluster->callback([&action, cluster_args] {
        action = [cluster_args] { return run_cluster(*cluster_args); };
    });

    auto match_args = std::make_shared<MatchArgs>();
    auto* match = app.add_subcommand("match", "score traffic POIs against the agent benchmark");
    match->add_option("--traffic", match_args->traffic, "traffic POIs JSON")->required();
    match->add_option("--agent", match_args->agent, "benchmark POIs JSON")->required();
    match->add_option("--match-dist-m", match_args->match_dist_m, "match distance, meters (500)");
    match->add_option("--out", match_args->out, "score report JSON")->required();
    match->callback(
        [&action, match_args] { action = [match_args] { return run_match(*match_args); }; });

    auto attr_args = std::make_shared<AttributeArgs>();
    auto* attribute = app.add_subcommand("attribute", "link leak hosts to installed apps");
    attribute->add_option("--obs", attr_args->obs, "observations JSONL")->required();
    attribute->add_option("--installs", attr_args->installs, "install table CSV")->required();
    attribute->add_option("--categories", attr_args->categories, "host category CSV");
    attribute->add_option("--out", attr_args->out, "tf-idf matrix CSV")->required();
    attribute->add_option("--hosts-out", attr_args->hosts_out, "also write the host table CSV");
    attribute->callback(
        [&action, attr_args] { action = [attr_args] { return run_attribute(*attr_args); }; });

    auto regress_args = std::make_shared<RegressArgs>();
    auto* regress = app.add_subcommand("regress", "fit the exposure regression");
    regress->add_option("--stats", regress_args->stats, "regression rows CSV")->required();
    regress->add_option("--out", regress_args->out, "fit JSON")->required();
    regress->callback([&action, regress_args] {
        action = [regress_args] { return run_regress(*regress_args); };
    });

    auto sim_args = std::make_shared<SimulateArgs>();
    auto* simulate = app.add_subcommand("simulate", "generate a deterministic synthetic scenario");
    simulate->add_option("--config", sim_args->config, "scenario config JSON")->required();
    simulate->add_option("--seed", sim_args->seed, "seed override");
    simulate->add_option("--out-dir", sim_args->out_dir, "output directory")->required();
    simulate->callback(
        [&action, sim_args] { action = [sim_args] { return run_simulate(*sim_args); }; });

    auto report_args = std::make_shared<ReportArgs>();
    auto* report = app.add_subcommand("report", "full pipeline with one consolidated report");
    report_args->capture.add_to(report, "--packets");
    report->add_option("--agent", report_args->agent, "agent samples CSV")->required();
    report->add_option("--installs", report_args->installs, "install table CSV");
    report->add_option("--categories", report_args->categories, "host category CSV");
    report->add_option("--geocoder", report_args->geocoder, "geocoder stub CSV");
    report->add_option("--window-min", report_args->window_min, "agent window, minutes (10)");
    report->add_option("--label-dist-m", report_args->label_dist_m, "truth distance, meters (250)");
    report->add_option("--cluster-dist-m", report_args->cluster_dist_m,
                       "cluster distance / eps, meters (500)");
    report->add_option("--cluster-time-min", report_args->cluster_time_min,
                       "stay duration, minutes (30)");
    report->add_option("--max-gap-h", report_args->max_gap_h, "max intra-stay gap, hours (6)");
    report->add_option("--min-pts", report_args->min_pts, "density threshold (5)");
    report->add_option("--match-dist-m", report_args->match_dist_m, "match distance, meters (500)");
    report->add_option("--top-k", report_args->top_k, "tf-idf apps reported per host (3)");
    report->add_option("--out-dir", report_args->out_dir, "output directory")->required();
    report->callback(
        [&action, report_args] { action = [report_args] { return run_report(*report_args); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return action ? action() : 1;
    } catch (const UsageError& e) {
        std::cerr << "geoleak: error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "geoleak: error: " << e.what() << '\n';
        return 2;
    }
}
