#include "windcast/csv_io.hpp"

#include "windcast/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace windcast::io {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
    if (pos + count > text.size()) {
        throw DataError("truncated timestamp '" + std::string(text) + "'");
    }
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = text[pos + i];
        if (c < '0' || c > '9') {
            throw DataError("malformed timestamp '" + std::string(text) + "'");
        }
        value = value * 10 + (c - '0');
    }
    pos += count;
    return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    }
    ++pos;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_field(std::string_view field, std::size_t line_no) {
    field = trim(field);
    if (field.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw DataError("unparseable number '" + std::string(field) + "' on line " +
                        std::to_string(line_no));
    }
    return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open data file '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    return out;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
    text = trim(text);
    std::size_t pos = 0;
    const int year = read_digits(text, pos, 4);
    expect(text, pos, '-');
    const int month = read_digits(text, pos, 2);
    expect(text, pos, '-');
    const int day = read_digits(text, pos, 2);
    if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) {
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    }
    ++pos;
    const int hour = read_digits(text, pos, 2);
    expect(text, pos, ':');
    const int minute = read_digits(text, pos, 2);
    int second = 0;
    if (pos < text.size() && text[pos] == ':') {
        ++pos;
        second = read_digits(text, pos, 2);
    }
    std::int64_t offset = 0;
    if (pos < text.size()) {
        const char sign = text[pos];
        if (sign == 'Z') {
            ++pos;
        } else if (sign == '+' || sign == '-') {
            ++pos;
            const int oh = read_digits(text, pos, 2);
            if (pos < text.size() && text[pos] == ':') {
                ++pos;
            }
            const int om = read_digits(text, pos, 2);
            offset = (sign == '+' ? 1 : -1) * (oh * 3600 + om * 60);
        }
    }
    if (pos != text.size() || month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
        minute > 59 || second > 60) {
        throw DataError("malformed timestamp '" + std::string(text) + "'");
    }
    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

std::string format_timestamp(std::int64_t unix_seconds) {
    std::int64_t days = unix_seconds / 86400;
    std::int64_t rem = unix_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y = 0;
    unsigned m = 0;
    unsigned d = 0;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

ObservationFrame read_observations(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kObservationHeader) {
        throw DataError("'" + path.string() + "' does not start with the header '" +
                        std::string(kObservationHeader) + "'");
    }
    ObservationFrame frame;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw DataError("expected 4 fields on line " + std::to_string(line_no));
        }
        frame.timestamps.push_back(parse_timestamp(fields[0]));
        frame.direction.push_back(parse_field(fields[1], line_no));
        frame.speed.push_back(parse_field(fields[2], line_no));
        frame.pressure.push_back(parse_field(fields[3], line_no));
    }
    frame.refresh_missing_mask();
    frame.validate();
    return frame;
}

void write_observations(const std::filesystem::path& path, const ObservationFrame& frame) {
    std::ofstream out = open_output(path);
    out << kObservationHeader << '\n';
    for (std::size_t i = 0; i < frame.size(); ++i) {
        out << format_timestamp(frame.timestamps[i]) << ',' << format_double(frame.direction[i]) << ','
            << format_double(frame.speed[i]) << ',' << format_double(frame.pressure[i]) << '\n';
    }
}

StateMatrix read_states(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kStateHeader) {
        throw DataError("'" + path.string() + "' does not start with the header '" +
                        std::string(kStateHeader) + "'");
    }
    std::vector<std::int64_t> stamps;
    std::vector<double> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 1 + kStateDim) {
            throw DataError("expected 7 fields on line " + std::to_string(line_no));
        }
        stamps.push_back(parse_timestamp(fields[0]));
        for (int m = 0; m < kStateDim; ++m) {
            const double v = parse_field(fields[static_cast<std::size_t>(m) + 1], line_no);
            if (!std::isfinite(v)) {
                throw DataError("state files may not contain missing cells (line " +
                                std::to_string(line_no) + ")");
            }
            cells.push_back(v);
        }
    }
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        if (stamps[i] - stamps[i - 1] != kStepSeconds) {
            throw DataError("state timestamps must be at 10-minute spacing");
        }
    }
    StateMatrix states;
    const auto n = static_cast<Eigen::Index>(stamps.size());
    states.values.resize(n, kStateDim);
    states.direction_undefined.assign(stamps.size(), 0);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int m = 0; m < kStateDim; ++m) {
            states.values(t, m) = cells[static_cast<std::size_t>(t * kStateDim + m)];
        }
        states.direction_undefined[static_cast<std::size_t>(t)] =
            states.values(t, kWs) == 0.0 && states.values(t, kWc) == 0.0;
    }
    states.first_step = n > 0 ? step_index(stamps.front()) : 0;
    return states;
}

void write_states(const std::filesystem::path& path, const StateMatrix& states) {
    std::ofstream out = open_output(path);
    out << kStateHeader << '\n';
    for (Eigen::Index t = 0; t < states.rows(); ++t) {
        out << format_timestamp(states.step(t) * kStepSeconds);
        for (int m = 0; m < kStateDim; ++m) {
            out << ',' << format_double(states.values(t, m));
        }
        out << '\n';
    }
}

bool is_state_file(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    std::getline(in, line);
    return trim(line) == kStateHeader;
}

}  // namespace windcast::io
