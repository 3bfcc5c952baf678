#include "geoleak/packet_log.hpp"

#include "geoleak/util.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace geoleak {

namespace {

bool parse_line(const std::string& line, const ExtractionConfig& cfg, PacketRecord& rec) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return false;

    if (!j.contains("user_id") || !j["user_id"].is_string()) return false;
    if (!j.contains("ts_ms") || !j["ts_ms"].is_number_integer()) return false;
    if (!j.contains("src") || !j["src"].is_string()) return false;
    if (!j.contains("dst") || !j["dst"].is_string()) return false;
    if (!j.contains("payload_b64") || !j["payload_b64"].is_string()) return false;

    auto src = parse_endpoint(j["src"].get<std::string>());
    auto dst = parse_endpoint(j["dst"].get<std::string>());
    if (!src || !dst) return false;
    auto payload = base64_decode(j["payload_b64"].get<std::string>());
    if (!payload) return false;

    rec.user_id = j["user_id"].get<std::string>();
    rec.ts = j["ts_ms"].get<std::int64_t>();
    rec.src = *src;
    rec.dst = *dst;
    rec.payload = std::move(*payload);

    std::string transport =
        j.contains("transport") && j["transport"].is_string() ? j["transport"].get<std::string>() : "";
    if (transport == "tcp")
        rec.transport = Transport::tcp;
    else if (transport == "udp")
        rec.transport = Transport::udp;
    else
        rec.transport = Transport::other;

    rec.direction = cfg.device_subnet.contains(rec.src.addr) ? Direction::outgoing
                                                             : Direction::incoming;
    rec.http_host = parse_http_host(rec.payload);
    return true;
}

} // namespace

IngestResult ingest_packet_log(std::istream& in, const ExtractionConfig& cfg) {
    IngestResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        PacketRecord rec;
        if (parse_line(line, cfg, rec)) {
            result.records.push_back(std::move(rec));
        } else {
            std::cerr << "[warn] packet log: skipping malformed line " << line_no << "\n";
            ++result.skipped;
        }
    }
    return result;
}

IngestResult ingest_packet_log(const std::string& path, const ExtractionConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open packet log: " + path);
    return ingest_packet_log(in, cfg);
}

std::string packet_log_line(const PacketRecord& rec) {
    nlohmann::json j;
    j["user_id"] = rec.user_id;
    j["ts_ms"] = rec.ts;
    j["src"] = rec.src.to_string();
    j["dst"] = rec.dst.to_string();
    j["transport"] = rec.transport == Transport::tcp   ? "tcp"
                     : rec.transport == Transport::udp ? "udp"
                                                       : "other";
    j["payload_b64"] = base64_encode(rec.payload);
    return j.dump();
}

void write_packet_log(const std::string& path, const std::vector<PacketRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write packet log: " + path);
    for (const auto& r : records) out << packet_log_line(r) << "\n";
}

} // namespace geoleak
