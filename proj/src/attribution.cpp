#include "geoleak/attribution.hpp"

#include "geoleak/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace geoleak {

CategoryTable load_category_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open category file: " + path);
    CategoryTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cols = split(t, ',');
        if (cols.size() != 3)
            throw std::runtime_error("category file: bad row at line " + std::to_string(line_no));
        std::string flag = to_lower(trim(cols[2]));
        if (line_no == 1 && flag != "yes" && flag != "no") continue; // header
        if (flag != "yes" && flag != "no")
            throw std::runtime_error("category file: suspicious must be yes/no at line " +
                                     std::to_string(line_no));
        table.rules.push_back(
            CategoryRule{to_lower(trim(cols[0])), trim(cols[1]), flag == "yes"});
    }
    return table;
}

InstallTable load_install_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open install table: " + path);
    InstallTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cols = split(t, ',');
        if (cols.size() != 2)
            throw std::runtime_error("install table: bad row at line " + std::to_string(line_no));
        std::string user = trim(cols[0]);
        std::string app = trim(cols[1]);
        if (line_no == 1 && (user == "user_id" || app == "app_id")) continue;
        if (user.empty() || app.empty())
            throw std::runtime_error("install table: empty field at line " +
                                     std::to_string(line_no));
        table[user].insert(app);
    }
    return table;
}

HostExtraction extract_hosts(const std::vector<GeoObservation>& observations) {
    std::map<std::string, HostStats> by_host;
    HostExtraction result;
    for (const auto& obs : observations) {
        if (!obs.http_host || obs.http_host->empty()) {
            ++result.unattributed;
            continue;
        }
        auto& stats = by_host[*obs.http_host];
        stats.host = *obs.http_host;
        stats.users.insert(obs.user_id);
        ++stats.leak_events;
    }
    for (auto& [host, stats] : by_host) {
        stats.avg_events_per_user = static_cast<double>(stats.leak_events) /
                                    static_cast<double>(stats.users.size());
        result.hosts.push_back(std::move(stats));
    }
    return result;
}

namespace {

bool suffix_matches(const std::string& host, const std::string& suffix) {
    if (host == suffix) return true;
    return host.size() > suffix.size() &&
           host.compare(host.size() - suffix.size(), suffix.size(), suffix) == 0 &&
           host[host.size() - suffix.size() - 1] == '.';
}

} // namespace

std::vector<HostStats> classify_hosts(std::vector<HostStats> stats, const CategoryTable& table) {
    for (auto& hs : stats) {
        const CategoryRule* best = nullptr;
        for (const auto& rule : table.rules) {
            if (!suffix_matches(hs.host, rule.host_suffix)) continue;
            if (best == nullptr || rule.host_suffix.size() > best->host_suffix.size())
                best = &rule;
        }
        if (best != nullptr) {
            hs.category = best->category;
            hs.suspicious = best->suspicious;
        } else {
            hs.category = "unclassified";
            hs.suspicious.reset();
        }
    }
    return stats;
}

double term_frequency(const std::string& app, const std::set<std::string>& host_users,
                      const InstallTable& installs) {
    if (host_users.empty())
        throw std::invalid_argument("term_frequency: host has no leaking users");
    std::size_t with_app = 0;
    for (const auto& user : host_users) {
        auto it = installs.find(user);
        if (it != installs.end() && it->second.count(app)) ++with_app;
    }
    return static_cast<double>(with_app) / static_cast<double>(host_users.size());
}

double inverse_document_frequency(const std::string& app, const InstallTable& installs) {
    if (installs.empty())
        throw std::invalid_argument("inverse_document_frequency: empty install table");
    std::size_t with_app = 0;
    for (const auto& [user, apps] : installs)
        if (apps.count(app)) ++with_app;
    if (with_app == 0)
        throw std::invalid_argument("inverse_document_frequency: app installed nowhere: " + app);
    // +0.0 so a universal app reports 0, not -0 (log10(1) negated).
    return -std::log10(static_cast<double>(with_app) / static_cast<double>(installs.size())) + 0.0;
}

double TfidfMatrix::raw_at(const std::string& app, const std::string& host) const {
    auto ai = std::lower_bound(apps.begin(), apps.end(), app);
    auto hi = std::lower_bound(hosts.begin(), hosts.end(), host);
    if (ai == apps.end() || *ai != app || hi == hosts.end() || *hi != host)
        throw std::out_of_range("tf-idf matrix: no such cell");
    return raw[static_cast<std::size_t>(ai - apps.begin())]
              [static_cast<std::size_t>(hi - hosts.begin())];
}

double TfidfMatrix::score_at(const std::string& app, const std::string& host) const {
    auto ai = std::lower_bound(apps.begin(), apps.end(), app);
    auto hi = std::lower_bound(hosts.begin(), hosts.end(), host);
    if (ai == apps.end() || *ai != app || hi == hosts.end() || *hi != host)
        throw std::out_of_range("tf-idf matrix: no such cell");
    return scores[static_cast<std::size_t>(ai - apps.begin())]
                 [static_cast<std::size_t>(hi - hosts.begin())];
}

TfidfMatrix tfidf_matrix(const InstallTable& installs,
                         const std::vector<HostStats>& host_table,
                         NormalizationScope scope) {
    if (installs.empty() || host_table.empty())
        throw std::invalid_argument("tfidf_matrix: empty installs or host table");

    TfidfMatrix m;
    std::set<std::string> app_set;
    for (const auto& [user, apps] : installs) app_set.insert(apps.begin(), apps.end());
    m.apps.assign(app_set.begin(), app_set.end());
    for (const auto& hs : host_table) m.hosts.push_back(hs.host);
    std::sort(m.hosts.begin(), m.hosts.end());

    std::map<std::string, const HostStats*> host_lookup;
    for (const auto& hs : host_table) host_lookup[hs.host] = &hs;

    m.raw.assign(m.apps.size(), std::vector<double>(m.hosts.size(), 0.0));
    for (std::size_t a = 0; a < m.apps.size(); ++a) {
        const double idf = inverse_document_frequency(m.apps[a], installs);
        const double capped_idf = std::max(1.0, idf);
        for (std::size_t h = 0; h < m.hosts.size(); ++h) {
            const double tf = term_frequency(m.apps[a], host_lookup[m.hosts[h]]->users, installs);
            m.raw[a][h] = tf * capped_idf;
        }
    }

    m.scores.assign(m.apps.size(), std::vector<double>(m.hosts.size(), 0.0));
    auto normalize = [&](std::size_t h_begin, std::size_t h_end) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < m.apps.size(); ++a)
            for (std::size_t h = h_begin; h < h_end; ++h) {
                lo = std::min(lo, m.raw[a][h]);
                hi = std::max(hi, m.raw[a][h]);
            }
        for (std::size_t a = 0; a < m.apps.size(); ++a)
            for (std::size_t h = h_begin; h < h_end; ++h)
                m.scores[a][h] = hi > lo ? (m.raw[a][h] - lo) / (hi - lo) : 0.0;
    };
    if (scope == NormalizationScope::global) {
        normalize(0, m.hosts.size());
    } else {
        for (std::size_t h = 0; h < m.hosts.size(); ++h) normalize(h, h + 1);
    }
    return m;
}

} // namespace geoleak
