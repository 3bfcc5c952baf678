#include "geoleak/net.hpp"

#include "geoleak/util.hpp"

#include <cstdio>

namespace geoleak {

std::string Ipv4Addr::to_string() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (value >> 24) & 0xff,
                  (value >> 16) & 0xff, (value >> 8) & 0xff, value & 0xff);
    return buf;
}

std::optional<Ipv4Addr> parse_ipv4(std::string_view s) {
    auto parts = split(s, '.');
    if (parts.size() != 4) return std::nullopt;
    std::uint32_t v = 0;
    for (const auto& p : parts) {
        auto octet = parse_int(p);
        if (!octet || *octet < 0 || *octet > 255 || p.empty() || p.size() > 3)
            return std::nullopt;
        v = (v << 8) | static_cast<std::uint32_t>(*octet);
    }
    return Ipv4Addr{v};
}

bool Ipv4Cidr::contains(Ipv4Addr addr) const {
    if (prefix_len == 0) return true;
    std::uint32_t mask = prefix_len >= 32 ? 0xffffffffu
                                          : ~((1u << (32 - prefix_len)) - 1u);
    return (addr.value & mask) == (network.value & mask);
}

std::string Ipv4Cidr::to_string() const {
    return network.to_string() + "/" + std::to_string(prefix_len);
}

std::optional<Ipv4Cidr> parse_cidr(std::string_view s) {
    size_t slash = s.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto addr = parse_ipv4(s.substr(0, slash));
    auto len = parse_int(s.substr(slash + 1));
    if (!addr || !len || *len < 0 || *len > 32) return std::nullopt;
    return Ipv4Cidr{*addr, static_cast<int>(*len)};
}

std::string Endpoint::to_string() const {
    return addr.to_string() + ":" + std::to_string(port);
}

std::optional<Endpoint> parse_endpoint(std::string_view s) {
    size_t colon = s.rfind(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto addr = parse_ipv4(s.substr(0, colon));
    auto port = parse_int(s.substr(colon + 1));
    if (!addr || !port || *port < 0 || *port > 65535) return std::nullopt;
    return Endpoint{*addr, static_cast<std::uint16_t>(*port)};
}

} // namespace geoleak
