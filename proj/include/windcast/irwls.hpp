#pragma once

#include "windcast/basis.hpp"
#include "windcast/design.hpp"
#include "windcast/lasso.hpp"
#include "windcast/model.hpp"
#include "windcast/timeseries.hpp"

#include <array>
#include <vector>

namespace windcast::irwls {

/// Grid points past the best AIC after which a path is cut short.
inline constexpr int kAicPatience = 10;

struct IrwlsOptions {
    double tolerance = 1e-3;
    int max_iterations = 20;
    /// Keep each equation's grid position chosen in the first iteration.
    bool freeze_lambda = false;
    /// sigma is clamped below at this fraction of the response's sample std.
    double sigma_floor_factor = 1e-6;
    lasso::LassoOptions mean_lasso;
    lasso::LassoOptions variance_lasso;
    unsigned threads = 0;
    bool keep_history = false;

    /// Defaults: the standard-deviation fit runs without centering so the
    /// constant column is an ordinary nonnegative (unpenalized) coefficient;
    /// both paths stop kAicPatience grid points past the best AIC.
    [[nodiscard]] static IrwlsOptions defaults();
};

/// Iteratively re-weighted LASSO: mean LASSO per equation with weights
/// sigma^-2, nonnegative LASSO of |residual| on the shock design, repeated
/// until the RMS change of sigma drops below the tolerance.
[[nodiscard]] FittedModel fit(const StateMatrix& states, const design::LagConfig& lags,
                              const basis::BasisConfig& basis, const design::MaskMatrix& mask,
                              const IrwlsOptions& options = IrwlsOptions::defaults());

struct AcfSummary {
    std::vector<double> values;  // lags 1..max_lag
    double band = 0.0;           // 1.96 / sqrt(n)
    double fraction_outside = 0.0;
};

struct EquationDiagnostics {
    AcfSummary residual;  // standardized residuals
    AcfSummary absolute;  // their absolute values
};

struct DiagnosticsReport {
    std::array<EquationDiagnostics, kStateDim> equations;
    std::vector<double> pressure_speed_ccf;  // lags -ccf_lag..ccf_lag
    int ccf_lag = 0;
    Eigen::Index n = 0;
};

[[nodiscard]] AcfSummary summarize_acf(std::span<const double> x, int max_lag);

[[nodiscard]] DiagnosticsReport residual_diagnostics(const FittedModel& model, int max_lag = 200);

}  // namespace windcast::irwls
