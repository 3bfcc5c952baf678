#include "geoleak/extraction.hpp"

#include "geoleak/util.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace geoleak {

namespace {

bool is_ascii_digit(std::uint8_t b) { return b >= '0' && b <= '9'; }

bool digit_or_dot(std::uint8_t b) { return is_ascii_digit(b) || b == '.'; }

} // namespace

std::string label_name(LeakLabel l) {
    switch (l) {
        case LeakLabel::unlabeled: return "unlabeled";
        case LeakLabel::yes: return "true";
        case LeakLabel::no: return "false";
        case LeakLabel::unknown: return "unknown";
    }
    return "unlabeled";
}

std::vector<CoordinateCandidate> scan_payload(const std::vector<std::uint8_t>& payload,
                                              const ExtractionConfig& cfg) {
    if (cfg.int_digits.min < 1 || cfg.int_digits.max < cfg.int_digits.min ||
        cfg.frac_digits.min < 1 || cfg.frac_digits.max < cfg.frac_digits.min)
        throw std::invalid_argument("scan_payload: empty digit range");

    std::vector<CoordinateCandidate> out;
    const std::size_t n = payload.size();
    std::size_t i = 0;
    while (i < n) {
        const std::uint8_t b = payload[i];
        std::size_t tok_start = i;
        std::size_t num_start = i;
        if (cfg.allow_sign && (b == '+' || b == '-') && i + 1 < n &&
            is_ascii_digit(payload[i + 1])) {
            if (i > 0 && digit_or_dot(payload[i - 1])) {
                // Sign glued to a longer number; the digit after it may still
                // open an unsigned token.
                ++i;
                continue;
            }
            num_start = i + 1;
        } else if (is_ascii_digit(b)) {
            if (i > 0 && digit_or_dot(payload[i - 1])) {
                // Mid-number start; skip the whole run.
                while (i < n && is_ascii_digit(payload[i])) ++i;
                continue;
            }
        } else {
            ++i;
            continue;
        }

        std::size_t j = num_start;
        while (j < n && is_ascii_digit(payload[j])) ++j;
        const int int_run = static_cast<int>(j - num_start);
        if (j >= n || payload[j] != '.') {
            i = j;
            continue;
        }
        const std::size_t frac_start = j + 1;
        std::size_t k = frac_start;
        while (k < n && is_ascii_digit(payload[k])) ++k;
        const int frac_run = static_cast<int>(k - frac_start);

        const bool right_ok = k >= n || payload[k] != '.';
        if (frac_run > 0 && right_ok && cfg.int_digits.accepts(int_run) &&
            cfg.frac_digits.accepts(frac_run)) {
            CoordinateCandidate c;
            c.raw_text.assign(payload.begin() + static_cast<std::ptrdiff_t>(tok_start),
                              payload.begin() + static_cast<std::ptrdiff_t>(k));
            c.value = std::strtod(c.raw_text.c_str(), nullptr);
            c.byte_offset = tok_start;
            out.push_back(std::move(c));
        }
        i = k;
    }
    return out;
}

std::vector<PacketRecord> filter_outgoing(std::vector<PacketRecord> records) {
    std::erase_if(records,
                  [](const PacketRecord& r) { return r.direction != Direction::outgoing; });
    return records;
}

namespace {

struct PairingStats {
    std::size_t paired = 0;
    std::size_t unpaired = 0;
    std::size_t invalid_domain = 0;
};

std::vector<GeoObservation> pair_user_candidates(const std::vector<CoordinateCandidate>& cands,
                                                 const std::vector<PacketRecord>& records,
                                                 const ExtractionConfig& cfg,
                                                 PairingStats& stats) {
    std::vector<GeoObservation> out;
    std::size_t i = 0;
    while (i + 1 < cands.size()) {
        const auto& a = cands[i];
        const auto& b = cands[i + 1];
        if (b.ts - a.ts > cfg.pair_window_ms) {
            ++stats.unpaired;
            ++i;
            continue;
        }
        GeoPoint p{a.value, b.value};
        if (!is_valid_point(p)) {
            ++stats.invalid_domain;
            i += 2;
            continue;
        }
        const PacketRecord& first = records[a.packet_ref];
        const PacketRecord& second = records[b.packet_ref];
        GeoObservation obs;
        obs.user_id = first.user_id;
        obs.ts = a.ts;
        obs.point = p;
        obs.direction = first.direction;
        obs.http_host = first.http_host ? first.http_host : second.http_host;
        obs.packet_refs = {a.packet_ref, b.packet_ref};
        out.push_back(std::move(obs));
        ++stats.paired;
        i += 2;
    }
    if (i < cands.size()) ++stats.unpaired;
    return out;
}

} // namespace

std::vector<GeoObservation> pair_coordinates(const std::vector<CoordinateCandidate>& candidates,
                                             const std::vector<PacketRecord>& records,
                                             const ExtractionConfig& cfg) {
    PairingStats stats;
    return pair_user_candidates(candidates, records, cfg, stats);
}

std::vector<GeoObservation> geofence_filter(std::vector<GeoObservation> observations,
                                            const GeoFence& fence) {
    std::erase_if(observations,
                  [&](const GeoObservation& o) { return !contains(fence, o.point); });
    return observations;
}

FunnelResult extract_leaks(const std::vector<PacketRecord>& records,
                           const ExtractionConfig& cfg) {
    FunnelResult result;
    result.counts.packets = records.size();
    for (const auto& r : records)
        if (r.direction == Direction::outgoing) ++result.counts.packets_outgoing;

    // Scan every packet so candidate packet_refs index the original stream;
    // the outgoing filter is applied to the candidates instead of the records.
    std::vector<CoordinateCandidate> all;
    for (std::size_t idx = 0; idx < records.size(); ++idx) {
        auto cands = scan_payload(records[idx].payload, cfg);
        for (auto& c : cands) {
            c.ts = records[idx].ts;
            c.packet_ref = idx;
        }
        all.insert(all.end(), std::make_move_iterator(cands.begin()),
                   std::make_move_iterator(cands.end()));
    }
    result.counts.candidates = all.size();

    if (cfg.outgoing_only) {
        std::erase_if(all, [&](const CoordinateCandidate& c) {
            return records[c.packet_ref].direction != Direction::outgoing;
        });
    }
    result.counts.candidates_after_direction = all.size();

    // Pairing is per user, across packets, in capture-time order.
    std::map<std::string, std::vector<CoordinateCandidate>> by_user;
    for (auto& c : all) by_user[records[c.packet_ref].user_id].push_back(std::move(c));

    PairingStats stats;
    for (auto& [user, cands] : by_user) {
        std::stable_sort(cands.begin(), cands.end(),
                         [](const CoordinateCandidate& a, const CoordinateCandidate& b) {
                             return std::tie(a.ts, a.packet_ref, a.byte_offset) <
                                    std::tie(b.ts, b.packet_ref, b.byte_offset);
                         });
        auto obs = pair_user_candidates(cands, records, cfg, stats);
        result.paired.insert(result.paired.end(), std::make_move_iterator(obs.begin()),
                             std::make_move_iterator(obs.end()));
    }
    result.counts.observations_paired = stats.paired;
    result.counts.candidates_unpaired = stats.unpaired;
    result.counts.pairs_invalid_domain = stats.invalid_domain;

    result.observations = geofence_filter(result.paired, cfg.fence);
    result.counts.observations_in_fence = result.observations.size();
    return result;
}

std::optional<std::string> parse_http_host(const std::vector<std::uint8_t>& payload) {
    // Request line: METHOD SP target SP HTTP/1.x
    std::string_view text(reinterpret_cast<const char*>(payload.data()), payload.size());
    std::size_t line_end = text.find('\n');
    if (line_end == std::string_view::npos) return std::nullopt;
    std::string_view request_line = text.substr(0, line_end);
    if (!request_line.empty() && request_line.back() == '\r') request_line.remove_suffix(1);

    std::size_t sp1 = request_line.find(' ');
    std::size_t sp2 = request_line.rfind(' ');
    if (sp1 == std::string_view::npos || sp2 == sp1) return std::nullopt;
    std::string_view method = request_line.substr(0, sp1);
    std::string_view version = request_line.substr(sp2 + 1);
    if (method.empty() || !version.starts_with("HTTP/1.")) return std::nullopt;
    for (char c : method)
        if (c < 'A' || c > 'Z') return std::nullopt;

    std::size_t pos = line_end + 1;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) break; // end of headers
        std::size_t colon = line.find(':');
        if (colon != std::string_view::npos) {
            std::string name = to_lower(trim(line.substr(0, colon)));
            if (name == "host") {
                std::string host = to_lower(trim(line.substr(colon + 1)));
                std::size_t port = host.rfind(':');
                if (port != std::string::npos && port + 1 < host.size()) {
                    bool digits = true;
                    for (std::size_t i = port + 1; i < host.size(); ++i)
                        if (!is_ascii_digit(static_cast<std::uint8_t>(host[i]))) digits = false;
                    if (digits) host.resize(port);
                }
                if (host.empty()) return std::nullopt;
                return host;
            }
        }
        pos = eol + 1;
    }
    return std::nullopt;
}

} // namespace geoleak
