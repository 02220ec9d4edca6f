#include "windcast/timeseries.hpp"

#include "windcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace windcast {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool is_missing(double v) { return std::isnan(v); }

// Indices of observed cells must bracket every missing cell.
void require_interior_gaps(const std::vector<double>& channel, const char* name) {
    if (channel.empty()) {
        return;
    }
    if (is_missing(channel.front()) || is_missing(channel.back())) {
        throw UnfillableGapError(std::string("leading or trailing missing values in channel '") +
                                 name + "' cannot be interpolated");
    }
}

template <typename Fill>
void for_each_gap(const std::vector<double>& channel, Fill&& fill) {
    std::size_t i = 0;
    const std::size_t n = channel.size();
    while (i < n) {
        if (!is_missing(channel[i])) {
            ++i;
            continue;
        }
        const std::size_t left = i - 1;  // guaranteed observed by require_interior_gaps
        std::size_t right = i;
        while (is_missing(channel[right])) {
            ++right;
        }
        fill(left, right);
        i = right;
    }
}

void interpolate_linear(std::vector<double>& channel) {
    const std::vector<double> source = channel;
    for_each_gap(source, [&](std::size_t left, std::size_t right) {
        const double span = static_cast<double>(right - left);
        for (std::size_t k = left + 1; k < right; ++k) {
            const double w = static_cast<double>(k - left) / span;
            channel[k] = (1.0 - w) * source[left] + w * source[right];
        }
    });
}

void interpolate_direction(std::vector<double>& channel) {
    const std::vector<double> source = channel;
    for_each_gap(source, [&](std::size_t left, std::size_t right) {
        const double s0 = std::sin(source[left] * kDegToRad);
        const double c0 = std::cos(source[left] * kDegToRad);
        const double s1 = std::sin(source[right] * kDegToRad);
        const double c1 = std::cos(source[right] * kDegToRad);
        const double span = static_cast<double>(right - left);
        for (std::size_t k = left + 1; k < right; ++k) {
            const double w = static_cast<double>(k - left) / span;
            channel[k] = direction_from_components((1.0 - w) * s0 + w * s1, (1.0 - w) * c0 + w * c1);
        }
    });
}

}  // namespace

std::int64_t step_index(std::int64_t unix_seconds) {
    std::int64_t q = unix_seconds / kStepSeconds;
    if (unix_seconds % kStepSeconds != 0 && unix_seconds < 0) {
        --q;
    }
    return q;
}

void ObservationFrame::validate() const {
    const std::size_t n = timestamps.size();
    if (direction.size() != n || speed.size() != n || pressure.size() != n) {
        throw DataError("observation channels have mismatched lengths");
    }
    if (!missing_mask.empty() && missing_mask.size() != n) {
        throw DataError("missing mask length does not match the frame");
    }
    for (std::size_t i = 1; i < n; ++i) {
        const std::int64_t gap = timestamps[i] - timestamps[i - 1];
        if (gap != kStepSeconds) {
            throw DataError("timestamps must be strictly increasing at 10-minute spacing (row " +
                            std::to_string(i) + ")");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_missing(direction[i]) && !(direction[i] >= 0.0 && direction[i] <= 360.0)) {
            throw DataError("direction outside [0, 360] at row " + std::to_string(i));
        }
        if (!is_missing(speed[i]) && !(speed[i] >= 0.0 && std::isfinite(speed[i]))) {
            throw DataError("negative or non-finite speed at row " + std::to_string(i));
        }
        if (!is_missing(pressure[i]) && !(pressure[i] > 0.0 && std::isfinite(pressure[i]))) {
            throw DataError("non-positive pressure at row " + std::to_string(i));
        }
    }
}

void ObservationFrame::refresh_missing_mask() {
    missing_mask.assign(size(), 0);
    for (std::size_t i = 0; i < size(); ++i) {
        std::uint8_t m = 0;
        if (is_missing(direction[i])) m |= kMissingDirection;
        if (is_missing(speed[i])) m |= kMissingSpeed;
        if (is_missing(pressure[i])) m |= kMissingPressure;
        missing_mask[i] = m;
    }
}

std::size_t ObservationFrame::missing_cells() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        count += is_missing(direction[i]) + is_missing(speed[i]) + is_missing(pressure[i]);
    }
    return count;
}

StateMatrix StateMatrix::slice(Eigen::Index begin, Eigen::Index end) const {
    StateMatrix out;
    out.values = values.middleRows(begin, end - begin);
    out.first_step = first_step + begin;
    if (!direction_undefined.empty()) {
        out.direction_undefined.assign(direction_undefined.begin() + begin,
                                       direction_undefined.begin() + end);
    }
    return out;
}

ObservationFrame interpolate_gaps(const ObservationFrame& frame, double max_gap_fraction) {
    frame.validate();
    const std::size_t missing = frame.missing_cells();
    if (missing == 0) {
        return frame;
    }
    const double fraction = static_cast<double>(missing) / (3.0 * static_cast<double>(frame.size()));
    if (fraction > max_gap_fraction) {
        throw DataQualityError("missing fraction " + std::to_string(fraction) +
                               " exceeds the configured cap " + std::to_string(max_gap_fraction));
    }
    require_interior_gaps(frame.direction, "direction");
    require_interior_gaps(frame.speed, "speed");
    require_interior_gaps(frame.pressure, "pressure");

    ObservationFrame out = frame;
    out.refresh_missing_mask();
    interpolate_direction(out.direction);
    interpolate_linear(out.speed);
    interpolate_linear(out.pressure);
    out.interpolated_fraction = fraction;
    return out;
}

StateMatrix decompose(const ObservationFrame& frame) {
    frame.validate();
    if (frame.missing_cells() != 0) {
        throw DataError("decompose requires a gap-free frame; interpolate first");
    }
    const auto n = static_cast<Eigen::Index>(frame.size());
    StateMatrix states;
    states.values.resize(n, kStateDim);
    states.direction_undefined.assign(frame.size(), 0);
    states.first_step = n > 0 ? step_index(frame.timestamps.front()) : 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double d = frame.direction[t] * kDegToRad;
        const double s = std::sin(d);
        const double c = std::cos(d);
        const double p = frame.pressure[t];
        const double w = frame.speed[t];
        states.values.row(t) << p, p * s, p * c, w, w * s, w * c;
        states.direction_undefined[t] = (w == 0.0);
    }
    return states;
}

double direction_from_components(double sin_part, double cos_part) {
    double deg = std::atan2(sin_part, cos_part) / kDegToRad;
    if (deg < 0.0) {
        deg += 360.0;
    }
    if (deg >= 360.0) {
        deg -= 360.0;
    }
    return deg;
}

Reprojected reproject(const Eigen::Ref<const Eigen::RowVectorXd>& state) {
    const double ws = state(kWs);
    const double wc = state(kWc);
    Reprojected r{};
    r.speed = std::hypot(ws, wc);
    r.pressure = state(kP);
    r.direction_defined = r.speed > 0.0;
    r.direction_deg = r.direction_defined ? direction_from_components(ws, wc) : 0.0;
    return r;
}

double quantile_sorted(std::span<const double> sorted, double alpha) {
    if (sorted.empty()) {
        throw DataError("quantile of an empty sample");
    }
    const double h = static_cast<double>(sorted.size() - 1) * alpha;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ThresholdSet empirical_thresholds(const StateMatrix& states, const std::vector<double>& alphas) {
    if (alphas.empty()) {
        throw ConfigError("threshold percentile list is empty");
    }
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) {
            throw ConfigError("threshold percentile levels must lie in (0, 1)");
        }
        if (i > 0 && !(alphas[i] > alphas[i - 1])) {
            throw ConfigError("threshold percentile levels must be strictly increasing");
        }
    }
    if (states.rows() == 0) {
        throw InsufficientDataError("cannot compute thresholds on an empty state matrix");
    }
    ThresholdSet set;
    set.alphas = alphas;
    set.values.resize(kStateDim, static_cast<Eigen::Index>(alphas.size()));
    std::vector<double> column(static_cast<std::size_t>(states.rows()));
    for (int m = 0; m < kStateDim; ++m) {
        for (Eigen::Index t = 0; t < states.rows(); ++t) {
            column[static_cast<std::size_t>(t)] = states.values(t, m);
        }
        std::sort(column.begin(), column.end());
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            set.values(m, static_cast<Eigen::Index>(a)) = quantile_sorted(column, alphas[a]);
        }
    }
    return set;
}

std::vector<double> default_alphas() {
    return {0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5,
            0.6,  0.7,  0.8,  0.9,  0.95, 0.96, 0.97, 0.98, 0.99};
}

}  // namespace windcast
