#pragma once

#include "geoleak/extraction.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace geoleak {

struct IngestResult {
    std::vector<PacketRecord> records;
    std::size_t skipped = 0; // malformed lines / undecodable packets
};

/// Reads a JSON Lines packet log (one object per packet). Malformed lines are
/// warned about and skipped; an unreadable file throws.
IngestResult ingest_packet_log(const std::string& path, const ExtractionConfig& cfg);

IngestResult ingest_packet_log(std::istream& in, const ExtractionConfig& cfg);

/// Serializes one record as a packet-log line (no trailing newline).
std::string packet_log_line(const PacketRecord& rec);

void write_packet_log(const std::string& path, const std::vector<PacketRecord>& records);

} // namespace geoleak
