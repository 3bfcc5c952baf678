#include "geoleak/pcap.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <vector>

namespace geoleak {

namespace {

constexpr std::uint32_t kMagicNative = 0xa1b2c3d4u;
constexpr std::uint32_t kMagicSwapped = 0xd4c3b2a1u;
constexpr std::uint32_t kLinkEthernet = 1;

std::uint32_t swap32(std::uint32_t v) {
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}

std::uint16_t read_be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

std::uint32_t read_u32(const std::uint8_t* p, bool swap) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return swap ? swap32(v) : v;
}

// Decodes Ethernet/IPv4/TCP|UDP. Returns false when the frame is not one we
// track (non-IPv4, no transport payload, header truncated by the snap length).
bool decode_frame(const std::uint8_t* data, std::size_t len, const ExtractionConfig& cfg,
                  PacketRecord& rec) {
    constexpr std::size_t kEthHeader = 14;
    if (len < kEthHeader) return false;
    const std::uint16_t ethertype = read_be16(data + 12);
    if (ethertype != 0x0800) return false;

    const std::uint8_t* ip = data + kEthHeader;
    std::size_t ip_avail = len - kEthHeader;
    if (ip_avail < 20) return false;
    if ((ip[0] >> 4) != 4) return false;
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    if (ihl < 20 || ip_avail < ihl) return false;
    const std::uint16_t total_len = read_be16(ip + 2);
    if (total_len < ihl) return false;
    const std::uint8_t proto = ip[9];
    const std::uint32_t src_ip = read_be32(ip + 12);
    const std::uint32_t dst_ip = read_be32(ip + 16);

    const std::uint8_t* l4 = ip + ihl;
    std::size_t l4_avail = std::min<std::size_t>(ip_avail, total_len) - ihl;

    std::size_t header_len = 0;
    if (proto == 6) { // TCP
        if (l4_avail < 20) return false;
        header_len = static_cast<std::size_t>(l4[12] >> 4) * 4;
        if (header_len < 20 || l4_avail < header_len) return false;
        rec.transport = Transport::tcp;
    } else if (proto == 17) { // UDP
        if (l4_avail < 8) return false;
        header_len = 8;
        rec.transport = Transport::udp;
    } else {
        return false;
    }

    const std::size_t payload_len = l4_avail - header_len;
    if (payload_len == 0) return false;

    rec.src = Endpoint{Ipv4Addr{src_ip}, read_be16(l4)};
    rec.dst = Endpoint{Ipv4Addr{dst_ip}, read_be16(l4 + 2)};
    rec.payload.assign(l4 + header_len, l4 + header_len + payload_len);
    rec.direction = cfg.device_subnet.contains(rec.src.addr) ? Direction::outgoing
                                                             : Direction::incoming;
    if (cfg.device_subnet.contains(rec.src.addr))
        rec.user_id = rec.src.addr.to_string();
    else if (cfg.device_subnet.contains(rec.dst.addr))
        rec.user_id = rec.dst.addr.to_string();
    else
        rec.user_id = rec.src.addr.to_string();
    rec.http_host = parse_http_host(rec.payload);
    return true;
}

} // namespace

IngestResult ingest_pcap(const std::string& path, const ExtractionConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open capture: " + path);

    std::uint8_t header[24];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (in.gcount() != sizeof(header))
        throw std::runtime_error("corrupt capture (short global header): " + path);

    std::uint32_t magic = read_u32(header, false);
    bool swap = false;
    if (magic == kMagicSwapped)
        swap = true;
    else if (magic != kMagicNative)
        throw std::runtime_error("corrupt capture (bad magic): " + path);

    const std::uint32_t linktype = read_u32(header + 20, swap);
    if (linktype != kLinkEthernet)
        throw std::runtime_error("unsupported capture link type " + std::to_string(linktype) +
                                 ": " + path);

    IngestResult result;
    std::vector<std::uint8_t> frame;
    while (true) {
        std::uint8_t ph[16];
        in.read(reinterpret_cast<char*>(ph), sizeof(ph));
        const auto got = in.gcount();
        if (got == 0) break; // clean EOF
        if (got != sizeof(ph)) {
            std::cerr << "[warn] capture ends mid packet header, stopping\n";
            break;
        }
        const std::uint32_t ts_sec = read_u32(ph, swap);
        const std::uint32_t ts_usec = read_u32(ph + 4, swap);
        const std::uint32_t incl_len = read_u32(ph + 8, swap);
        if (incl_len > (1u << 26)) {
            std::cerr << "[warn] implausible packet length, stopping\n";
            break;
        }
        frame.resize(incl_len);
        in.read(reinterpret_cast<char*>(frame.data()), incl_len);
        if (in.gcount() != static_cast<std::streamsize>(incl_len)) {
            std::cerr << "[warn] truncated trailing packet, stopping\n";
            break;
        }

        PacketRecord rec;
        rec.ts = static_cast<TimestampMs>(ts_sec) * 1000 + ts_usec / 1000;
        if (decode_frame(frame.data(), frame.size(), cfg, rec))
            result.records.push_back(std::move(rec));
        else
            ++result.skipped;
    }
    return result;
}

} // namespace geoleak
