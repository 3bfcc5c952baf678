#pragma once

#include "geoleak/extraction.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace geoleak {

struct HostStats {
    std::string host;
    std::set<std::string> users;
    std::int64_t leak_events = 0;
    double avg_events_per_user = 0.0;
    std::optional<std::string> category;
    std::optional<bool> suspicious;
};

struct HostExtraction {
    std::vector<HostStats> hosts; // sorted by host name
    std::int64_t unattributed = 0; // observations without a host
};

// user -> apps holding both location and network permissions.
using InstallTable = std::map<std::string, std::set<std::string>>;

struct CategoryRule {
    std::string host_suffix; // lowercased
    std::string category;
    bool suspicious = false;
};

struct CategoryTable {
    std::vector<CategoryRule> rules;
};

/// Loads CSV rows host_suffix,category,suspicious(yes/no). Malformed rows are
/// a fatal config error.
CategoryTable load_category_table(const std::string& path);

/// Loads CSV rows user_id,app_id (header optional).
InstallTable load_install_table(const std::string& path);

/// Groups observations by HTTP host (lowercased, port already stripped at
/// ingest); host-less observations are only counted.
HostExtraction extract_hosts(const std::vector<GeoObservation>& observations);

/// Longest matching host suffix decides category and suspicious flag;
/// unmatched hosts become "unclassified" with the flag unset. Suffixes match
/// on domain-label boundaries.
std::vector<HostStats> classify_hosts(std::vector<HostStats> stats, const CategoryTable& table);

/// Of the users leaking to the host, the fraction that have the app installed.
double term_frequency(const std::string& app, const std::set<std::string>& host_users,
                      const InstallTable& installs);

/// -log10 of the app's install fraction over all users in the table.
double inverse_document_frequency(const std::string& app, const InstallTable& installs);

enum class NormalizationScope { global, per_host };

struct TfidfMatrix {
    std::vector<std::string> apps;  // sorted
    std::vector<std::string> hosts; // sorted
    // scores[a][h] aligned with apps x hosts
    std::vector<std::vector<double>> raw;
    std::vector<std::vector<double>> scores; // min-max normalized

    double raw_at(const std::string& app, const std::string& host) const;
    double score_at(const std::string& app, const std::string& host) const;
};

/// Capped-IDF tf-idf per (app, host): TF * max(1, IDF), then min-max
/// normalized (over the whole matrix by default).
TfidfMatrix tfidf_matrix(const InstallTable& installs,
                         const std::vector<HostStats>& host_table,
                         NormalizationScope scope = NormalizationScope::global);

} // namespace geoleak
