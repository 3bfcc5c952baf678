#pragma once

#include "geoleak/packet_log.hpp"

#include <string>

namespace geoleak {

/// Reads a libpcap-format capture (magic 0xa1b2c3d4 / 0xd4c3b2a1, either
/// byte order), Ethernet link type, IPv4 only. Emits one PacketRecord per
/// TCP/UDP packet that carries payload bytes; frames of other shapes are
/// counted as skipped. No TCP stream reassembly is performed.
///
/// The user id is the device-side address: whichever endpoint falls inside
/// the configured device subnet (the capture LAN hands every device its own
/// address), falling back to the source address.
IngestResult ingest_pcap(const std::string& path, const ExtractionConfig& cfg);

} // namespace geoleak
