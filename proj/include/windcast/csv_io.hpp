#pragma once

#include "windcast/timeseries.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace windcast::io {

/// Parses ISO-8601 date-times with an optional fixed UTC offset
/// ("2014-10-18T23:50:00Z", "2014-10-19T01:50+02:00", "2014-10-18 23:50:00").
/// Timestamps without an offset are taken as UTC. Throws DataError.
[[nodiscard]] std::int64_t parse_timestamp(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
[[nodiscard]] std::string format_timestamp(std::int64_t unix_seconds);

inline constexpr std::string_view kObservationHeader = "timestamp,direction_deg,speed_ms,pressure_hpa";
inline constexpr std::string_view kStateHeader = "timestamp,p,p_s,p_c,w,w_s,w_c";

/// Reads the observation CSV. Empty fields become missing cells.
[[nodiscard]] ObservationFrame read_observations(const std::filesystem::path& path);
void write_observations(const std::filesystem::path& path, const ObservationFrame& frame);

/// Six-column state CSV, used for synthetic data whose components are not
/// constrained to an exact Cartesian decomposition.
[[nodiscard]] StateMatrix read_states(const std::filesystem::path& path);
void write_states(const std::filesystem::path& path, const StateMatrix& states);

/// True when the file's header line is the state header.
[[nodiscard]] bool is_state_file(const std::filesystem::path& path);

/// Shortest representation that parses back to the identical double.
[[nodiscard]] std::string format_double(double value);

}  // namespace windcast::io
