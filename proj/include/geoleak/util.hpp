#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geoleak {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Plain comma split, no quoting. All file schemas in this project are
// comma-free per field.
std::vector<std::string> split(std::string_view s, char sep);

std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<double> parse_double(std::string_view s);

std::string base64_encode(const std::vector<std::uint8_t>& data);
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view s);

/// Round to the coordinate wire precision (7 fractional digits).
double quantize_coord(double v);

/// Fixed 7-fractional-digit rendering, e.g. 31.2530410.
std::string format_coord(double v);

/// Worker cap from GEOLEAK_THREADS; defaults to hardware concurrency.
unsigned worker_threads();

/// Runs fn(i) for i in [0, n) on up to worker_threads() threads. Each index
/// writes only its own slot, so results stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace geoleak
