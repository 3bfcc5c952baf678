#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace geoleak {

// IPv4 plumbing for direction assignment. IPv6 is a config hook only.
struct Ipv4Addr {
    std::uint32_t value = 0; // host byte order

    std::string to_string() const;
    bool operator==(const Ipv4Addr&) const = default;
};

std::optional<Ipv4Addr> parse_ipv4(std::string_view s);

struct Ipv4Cidr {
    Ipv4Addr network;
    int prefix_len = 0;

    bool contains(Ipv4Addr addr) const;
    std::string to_string() const;
};

std::optional<Ipv4Cidr> parse_cidr(std::string_view s);

struct Endpoint {
    Ipv4Addr addr;
    std::uint16_t port = 0;

    std::string to_string() const;
};

/// Parses "a.b.c.d:port".
std::optional<Endpoint> parse_endpoint(std::string_view s);

} // namespace geoleak
