#pragma once

#include "geoleak/geo.hpp"
#include "geoleak/net.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geoleak {

enum class Direction { outgoing, incoming };
enum class Transport { tcp, udp, other };

struct PacketRecord {
    std::string user_id;
    TimestampMs ts = 0;
    Direction direction = Direction::outgoing;
    Endpoint src;
    Endpoint dst;
    Transport transport = Transport::other;
    std::optional<std::string> http_host;
    std::vector<std::uint8_t> payload;
};

// One regex hit inside a packet payload.
struct CoordinateCandidate {
    std::string raw_text;
    double value = 0.0;
    TimestampMs ts = 0;
    std::size_t packet_ref = 0; // index into the record stream
    std::size_t byte_offset = 0;
};

enum class LeakLabel { unlabeled, yes, no, unknown };

std::string label_name(LeakLabel l);

struct GeoObservation {
    std::string user_id;
    TimestampMs ts = 0;
    GeoPoint point;
    Direction direction = Direction::outgoing;
    std::optional<std::string> http_host;
    std::pair<std::size_t, std::size_t> packet_refs{0, 0};
    LeakLabel label = LeakLabel::unlabeled;
};

struct DigitRange {
    int min = 0;
    int max = 0;

    bool accepts(int n) const { return n >= min && n <= max; }
};

struct ExtractionConfig {
    Ipv4Cidr device_subnet{Ipv4Addr{0x0A080000u}, 16}; // 10.8.0.0/16
    GeoFence fence = default_fence();
    // Coordinate token shape. Default is the strict two-integer,
    // seven-fraction decimal-degree form; widen via config for other regions.
    DigitRange int_digits{2, 2};
    DigitRange frac_digits{7, 7};
    bool allow_sign = false;
    TimestampMs pair_window_ms = 0;
    bool outgoing_only = true;
};

/// Scans a payload for coordinate-shaped decimal tokens. A token matches only
/// when the full maximal digit runs fit the configured widths and the bytes
/// adjacent to the match are neither digits nor '.', so values embedded in
/// longer numbers never produce a hit. Non-ASCII bytes act as delimiters.
/// ts/packet_ref on the results are left for the caller to fill.
std::vector<CoordinateCandidate> scan_payload(const std::vector<std::uint8_t>& payload,
                                              const ExtractionConfig& cfg);

std::vector<PacketRecord> filter_outgoing(std::vector<PacketRecord> records);

/// Greedy left-to-right pairing of consecutive candidates within the pair
/// window: first of a pair is latitude, second longitude. A candidate joins
/// at most one observation; leftovers are dropped and counted by the funnel.
/// Candidates must belong to one user and be sorted by (ts, packet_ref,
/// byte_offset). Pairs whose values are outside the global lat/lon domain are
/// discarded here so every emitted observation carries a valid GeoPoint.
std::vector<GeoObservation> pair_coordinates(const std::vector<CoordinateCandidate>& candidates,
                                             const std::vector<PacketRecord>& records,
                                             const ExtractionConfig& cfg);

std::vector<GeoObservation> geofence_filter(std::vector<GeoObservation> observations,
                                            const GeoFence& fence);

// Per-stage funnel counts, in filter order.
struct FunnelCounts {
    std::size_t packets = 0;
    std::size_t packets_outgoing = 0;
    std::size_t candidates = 0;
    std::size_t candidates_after_direction = 0;
    std::size_t observations_paired = 0;
    std::size_t candidates_unpaired = 0;
    std::size_t pairs_invalid_domain = 0;
    std::size_t observations_in_fence = 0;
};

struct FunnelResult {
    std::vector<GeoObservation> paired;       // after pairing, before the fence
    std::vector<GeoObservation> observations; // final, inside the fence
    FunnelCounts counts;
};

/// Full filter funnel over a record stream: payload scan, optional outgoing
/// filter, per-user pairing, geo-fence. Pairing runs per user across packets,
/// so coordinate pairs split by IP fragmentation still join.
FunnelResult extract_leaks(const std::vector<PacketRecord>& records,
                           const ExtractionConfig& cfg);

/// Recognizes an HTTP/1.x request payload and returns its Host header
/// (lowercased, port stripped).
std::optional<std::string> parse_http_host(const std::vector<std::uint8_t>& payload);

} // namespace geoleak
