#include "geoleak/extraction.hpp"

#include "geoleak/util.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <string>
#include <vector>

using namespace geoleak;

namespace {

std::vector<std::uint8_t> bytes(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

struct RefHit {
    std::size_t offset;
    std::string raw;
    bool operator==(const RefHit&) const = default;
};

// Independent scanner reference: a hit is a maximal run of [0-9.] bytes whose
// whole shape is digits '.' digits with both widths accepted, plus an
// optional sign that is not glued to a preceding number. Maximal runs encode
// the neighbor rule by construction.
std::vector<RefHit> reference_scan(const std::vector<std::uint8_t>& payload,
                                   const ExtractionConfig& cfg) {
    auto digit = [](std::uint8_t b) { return b >= '0' && b <= '9'; };
    auto digit_or_dot = [&](std::uint8_t b) { return digit(b) || b == '.'; };

    std::vector<RefHit> out;
    const std::size_t n = payload.size();
    std::size_t i = 0;
    while (i < n) {
        if (!digit_or_dot(payload[i])) {
            ++i;
            continue;
        }
        const std::size_t s = i;
        while (i < n && digit_or_dot(payload[i])) ++i;

        // Shape: int digits, one dot, fraction digits, nothing else.
        std::size_t p = s;
        while (p < i && digit(payload[p])) ++p;
        const int int_run = static_cast<int>(p - s);
        if (int_run == 0 || p >= i || payload[p] != '.') continue;
        std::size_t f = p + 1;
        while (f < i && digit(payload[f])) ++f;
        const int frac_run = static_cast<int>(f - p - 1);
        if (f != i || frac_run == 0) continue;
        if (!cfg.int_digits.accepts(int_run) || !cfg.frac_digits.accepts(frac_run)) continue;

        std::size_t tok = s;
        if (cfg.allow_sign && s > 0 && (payload[s - 1] == '+' || payload[s - 1] == '-') &&
            (s == 1 || !digit_or_dot(payload[s - 2])))
            tok = s - 1;
        out.push_back({tok, std::string(payload.begin() + static_cast<std::ptrdiff_t>(tok),
                                        payload.begin() + static_cast<std::ptrdiff_t>(i))});
    }
    return out;
}

std::vector<RefHit> as_hits(const std::vector<CoordinateCandidate>& cands) {
    std::vector<RefHit> out;
    for (const auto& c : cands) out.push_back({c.byte_offset, c.raw_text});
    return out;
}

std::string random_filler(testutil::TestRng& rng) {
    switch (rng.below(10)) {
        case 0: return "lat";
        case 1: return "4071";                 // integer, no dot
        case 2: return "123.45";               // wrong widths both sides
        case 3: return "1.123456789";          // fraction too long
        case 4: return "311.1234567";          // integer part too long
        case 5: return "31.2530410.5";         // double dot
        case 6: return std::string(1, static_cast<char>(rng.range(0x80, 0xff))); // non-ASCII
        case 7: return rng.chance(0.5) ? "-" : "+";
        case 8: return "..";
        default: {
            std::string s;
            for (int k = 0; k < 3; ++k) s += static_cast<char>('a' + rng.below(26));
            return s;
        }
    }
}

std::string random_coordinate(testutil::TestRng& rng) {
    return format_coord(quantize_coord(rng.real(10.0, 89.0)));
}

PacketRecord packet(const std::string& user, TimestampMs ts, Direction dir,
                    const std::string& payload) {
    PacketRecord r;
    r.user_id = user;
    r.ts = ts;
    r.direction = dir;
    r.payload = bytes(payload);
    return r;
}

} // namespace

TEST_CASE("scanner agrees with the maximal-run reference on random payloads") {
    ExtractionConfig strict;
    ExtractionConfig wide;
    wide.int_digits = {1, 3};
    wide.frac_digits = {5, 8};
    wide.allow_sign = true;
    ExtractionConfig signed_strict;
    signed_strict.allow_sign = true;

    testutil::TestRng rng(2024);
    for (int it = 0; it < 2000; ++it) {
        std::string payload;
        const int tokens = static_cast<int>(rng.below(12));
        for (int t = 0; t < tokens; ++t) {
            payload += rng.chance(0.3) ? random_coordinate(rng) : random_filler(rng);
            if (rng.chance(0.7)) payload += static_cast<char>(" ,;:\"{}"[rng.below(7)]);
        }
        const auto data = bytes(payload);
        for (const ExtractionConfig* cfg : {&strict, &wide, &signed_strict}) {
            const auto got = as_hits(scan_payload(data, *cfg));
            const auto want = reference_scan(data, *cfg);
            REQUIRE_MESSAGE(got == want, "payload: " << payload);
        }
    }
}

TEST_CASE("scanner hand cases") {
    ExtractionConfig cfg;
    auto hits = [&](const std::string& s) { return as_hits(scan_payload(bytes(s), cfg)); };

    CHECK(hits("31.2530410") == std::vector<RefHit>{{0, "31.2530410"}});
    CHECK(hits("lat=31.2530410&lon=34.7719120") ==
          std::vector<RefHit>{{4, "31.2530410"}, {19, "34.7719120"}});
    CHECK(hits("131.2530410").empty());       // three integer digits
    CHECK(hits("31.25304105").empty());       // eight fraction digits
    CHECK(hits("31.253041").empty());         // six fraction digits
    CHECK(hits("31.2530410.5").empty());      // dot on the right
    CHECK(hits("5.31.2530410").empty());      // dot on the left
    CHECK(hits("031.2530410").empty());       // glued leading digit
    CHECK(hits("31,2530410").empty());        // comma is not a decimal point
    CHECK(hits("x31.2530410,") == std::vector<RefHit>{{1, "31.2530410"}});
    CHECK(hits("\xc3\xa9") == std::vector<RefHit>{}); // non-ASCII only
    CHECK(hits("\xc3\xa9" "31.2530410") == std::vector<RefHit>{{2, "31.2530410"}});
    CHECK(hits("-31.2530410") == std::vector<RefHit>{{1, "31.2530410"}}); // sign off: unsigned hit

    cfg.allow_sign = true;
    CHECK(hits("-31.2530410") == std::vector<RefHit>{{0, "-31.2530410"}});
    CHECK(hits("x+31.2530410") == std::vector<RefHit>{{1, "+31.2530410"}});
    CHECK(hits("1-31.2530410") == std::vector<RefHit>{{2, "31.2530410"}}); // sign glued to a number
    const auto cands = scan_payload(bytes("-31.2530410"), cfg);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].value == doctest::Approx(-31.2530410).epsilon(1e-12));
}

TEST_CASE("scanner values equal strtod of the raw text") {
    ExtractionConfig cfg;
    cfg.int_digits = {1, 3};
    cfg.frac_digits = {1, 8};
    cfg.allow_sign = true;
    testutil::TestRng rng(55);
    for (int it = 0; it < 300; ++it) {
        const std::string payload = " " + random_coordinate(rng) + " ";
        for (const auto& c : scan_payload(bytes(payload), cfg))
            CHECK(c.value == std::strtod(c.raw_text.c_str(), nullptr));
    }
}

TEST_CASE("scanner rejects empty digit ranges") {
    ExtractionConfig cfg;
    cfg.int_digits = {0, 0};
    CHECK_THROWS_AS(scan_payload(bytes("31.2530410"), cfg), std::invalid_argument);
}

TEST_CASE("pairing is greedy with a window restart") {
    ExtractionConfig cfg; // pair_window_ms = 0
    auto cand = [](double v, TimestampMs ts, std::size_t ref) {
        CoordinateCandidate c;
        c.raw_text = std::to_string(v);
        c.value = v;
        c.ts = ts;
        c.packet_ref = ref;
        return c;
    };
    std::vector<PacketRecord> records{packet("u1", 0, Direction::outgoing, ""),
                                      packet("u1", 5, Direction::outgoing, "")};

    SUBCASE("same-timestamp candidates pair in order") {
        const auto obs = pair_coordinates({cand(31.5, 0, 0), cand(35.0, 0, 0)}, records, cfg);
        REQUIRE(obs.size() == 1);
        CHECK(obs[0].point == GeoPoint{31.5, 35.0});
        CHECK(obs[0].packet_refs == std::pair<std::size_t, std::size_t>{0, 0});
    }
    SUBCASE("a gap beyond the window drops the older candidate") {
        const auto obs = pair_coordinates(
            {cand(31.5, 0, 0), cand(35.0, 5, 1), cand(34.9, 5, 1)}, records, cfg);
        REQUIRE(obs.size() == 1); // 31.5 dropped, the two ts=5 values pair
        CHECK(obs[0].point == GeoPoint{35.0, 34.9});
    }
    SUBCASE("an out-of-domain pair is consumed, not re-paired") {
        const auto obs = pair_coordinates(
            {cand(95.0, 0, 0), cand(31.5, 0, 0), cand(35.0, 0, 0)}, records, cfg);
        // (95.0, 31.5) is invalid and burns both; 35.0 is left unpaired.
        CHECK(obs.empty());
    }
    SUBCASE("a widened window pairs across packets") {
        ExtractionConfig wide = cfg;
        wide.pair_window_ms = 10;
        const auto obs = pair_coordinates({cand(31.5, 0, 0), cand(35.0, 5, 1)}, records, wide);
        REQUIRE(obs.size() == 1);
        CHECK(obs[0].packet_refs == std::pair<std::size_t, std::size_t>{0, 1});
    }
}

TEST_CASE("extract_leaks runs the full funnel") {
    ExtractionConfig cfg;
    std::vector<PacketRecord> records{
        // one clean outgoing leak (in fence)
        packet("u1", 1000, Direction::outgoing, "lat=31.2530410&lon=34.7719120"),
        // incoming recommendation pair, removed by the direction filter
        packet("u1", 2000, Direction::incoming, "{\"lat\":31.5000000,\"lon\":35.0000000}"),
        // outgoing but out of fence
        packet("u1", 3000, Direction::outgoing, "40.7127280 74.0060152"),
        // fragmented pair across two packets at one timestamp
        packet("u2", 4000, Direction::outgoing, "y=32.0853000"),
        packet("u2", 4000, Direction::outgoing, "x=34.7818000"),
    };

    const auto result = extract_leaks(records, cfg);
    CHECK(result.counts.packets == 5);
    CHECK(result.counts.packets_outgoing == 4);
    CHECK(result.counts.candidates == 8);
    CHECK(result.counts.candidates_after_direction == 6);
    CHECK(result.counts.observations_paired == 3);
    CHECK(result.counts.candidates_unpaired == 0);
    CHECK(result.counts.pairs_invalid_domain == 0);
    CHECK(result.counts.observations_in_fence == 2);

    REQUIRE(result.observations.size() == 2);
    CHECK(result.observations[0].user_id == "u1");
    CHECK(result.observations[0].point == GeoPoint{31.2530410, 34.7719120});
    CHECK(result.observations[1].user_id == "u2");
    CHECK(result.observations[1].packet_refs == std::pair<std::size_t, std::size_t>{3, 4});

    ExtractionConfig all = cfg;
    all.outgoing_only = false;
    const auto unfiltered = extract_leaks(records, all);
    CHECK(unfiltered.counts.candidates_after_direction == 8);
    CHECK(unfiltered.counts.observations_in_fence == 3); // the incoming pair survives
}

TEST_CASE("http host parsing") {
    auto host = [](const std::string& s) { return parse_http_host(bytes(s)); };
    CHECK(host("GET /v1 HTTP/1.1\r\nHost: Api.Example.COM\r\n\r\n") == "api.example.com");
    CHECK(host("POST / HTTP/1.0\r\nhost: example.com:8080\r\n\r\n") == "example.com");
    CHECK(host("GET / HTTP/1.1\r\nX-Host: a\r\nHost: b.example\r\n\r\n") == "b.example");
    CHECK_FALSE(host("GET / HTTP/1.1\r\n\r\n").has_value());
    CHECK_FALSE(host("HTTP/1.1 200 OK\r\nHost: x\r\n\r\n").has_value()); // response
    CHECK_FALSE(host("{\"lat\":31.5}").has_value());
    CHECK_FALSE(host("GET / HTTP/2\r\nHost: x\r\n\r\n").has_value());
    // headers after the blank line are body, not headers
    CHECK_FALSE(host("GET / HTTP/1.1\r\n\r\nHost: x\r\n").has_value());
}

TEST_CASE("label names") {
    CHECK(label_name(LeakLabel::yes) == "true");
    CHECK(label_name(LeakLabel::no) == "false");
    CHECK(label_name(LeakLabel::unknown) == "unknown");
    CHECK(label_name(LeakLabel::unlabeled) == "unlabeled");
}
