#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace windcast {

/// Observation spacing in seconds.
inline constexpr std::int64_t kStepSeconds = 600;

/// Dimension of the dependent state vector.
inline constexpr int kStateDim = 6;

/// Positions of the state components, in the order (p, p_s, p_c, w, w_s, w_c).
enum Component : int { kP = 0, kPs = 1, kPc = 2, kW = 3, kWs = 4, kWc = 5 };

inline constexpr std::array<std::string_view, kStateDim> kComponentNames = {
    "p", "p_s", "p_c", "w", "w_s", "w_c"};

/// Cell flags in ObservationFrame::missing_mask.
enum MissingBit : std::uint8_t {
    kMissingDirection = 1,
    kMissingSpeed = 2,
    kMissingPressure = 4,
};

/// Ten-minute observations. Missing cells hold NaN until interpolated; the
/// mask keeps recording which cells were originally missing.
struct ObservationFrame {
    std::vector<std::int64_t> timestamps;  // Unix seconds, UTC
    std::vector<double> direction;         // degrees
    std::vector<double> speed;             // m/s
    std::vector<double> pressure;          // hPa
    std::vector<std::uint8_t> missing_mask;
    double interpolated_fraction = 0.0;

    [[nodiscard]] std::size_t size() const { return timestamps.size(); }

    /// Checks channel lengths, fixed spacing, and value ranges of observed
    /// cells. Throws DataError.
    void validate() const;

    /// Rebuilds missing_mask from NaN cells.
    void refresh_missing_mask();

    [[nodiscard]] std::size_t missing_cells() const;
};

/// T x 6 history of the dependent vector, anchored on an absolute time index
/// (ten-minute steps since 1970-01-01T00:00Z) so periodic regressors can be
/// evaluated at any row.
struct StateMatrix {
    Eigen::MatrixXd values;
    std::int64_t first_step = 0;
    std::vector<std::uint8_t> direction_undefined;

    [[nodiscard]] Eigen::Index rows() const { return values.rows(); }
    [[nodiscard]] std::int64_t step(Eigen::Index row) const { return first_step + row; }

    /// Rows [begin, end).
    [[nodiscard]] StateMatrix slice(Eigen::Index begin, Eigen::Index end) const;
};

/// Empirical percentiles c_alpha per state component.
struct ThresholdSet {
    std::vector<double> alphas;
    Eigen::MatrixXd values;  // kStateDim x alphas.size()

    [[nodiscard]] double value(int component, std::size_t alpha_index) const {
        return values(component, static_cast<Eigen::Index>(alpha_index));
    }
};

[[nodiscard]] std::int64_t step_index(std::int64_t unix_seconds);

/// Fills interior gaps by linear interpolation. Direction goes through its
/// unit-vector components and is re-projected, so gaps across north do not
/// swing through south.
[[nodiscard]] ObservationFrame interpolate_gaps(const ObservationFrame& frame,
                                                double max_gap_fraction = 0.05);

/// Cartesian decomposition: row t = (P, P sin D, P cos D, W, W sin D, W cos D).
[[nodiscard]] StateMatrix decompose(const ObservationFrame& frame);

/// Inverse of decompose on a single state: returns {direction_deg, speed,
/// pressure} using the magnitude route for speed.
struct Reprojected {
    double direction_deg;
    double speed;
    double pressure;
    bool direction_defined;
};
[[nodiscard]] Reprojected reproject(const Eigen::Ref<const Eigen::RowVectorXd>& state);

/// Direction in [0, 360) from the (sin, cos) pair.
[[nodiscard]] double direction_from_components(double sin_part, double cos_part);

/// Linear interpolation between order statistics (type 7): for sorted data
/// x_0..x_{n-1}, h = (n-1) alpha, value = x_floor(h) + frac(h) (x_ceil - x_floor).
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double alpha);

[[nodiscard]] ThresholdSet empirical_thresholds(const StateMatrix& states,
                                                const std::vector<double>& alphas);

/// Default percentile levels: 0.01..0.05, the deciles 0.1..0.9, 0.95, 0.96..0.99.
[[nodiscard]] std::vector<double> default_alphas();

}  // namespace windcast
