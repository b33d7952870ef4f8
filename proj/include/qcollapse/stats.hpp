#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qcollapse/record.hpp"

namespace qcollapse {

/// Normalized probabilities over a uniform integer grid.
class DistributionSnapshot {
public:
    /// Validates sum p = 1 within 1e-12, p >= 0, uniform `step`.
    DistributionSnapshot(std::vector<int> z, std::vector<double> p, int step);

    std::span<const int> z() const noexcept { return z_; }
    std::span<const double> p() const noexcept { return p_; }
    int step() const noexcept { return step_; }

    /// Distribution of |z| on {min|z|, .., max|z|} with the same step.
    DistributionSnapshot folded() const;
    /// Probability at grid point z; 0 off the grid range.
    double at(int z) const noexcept;
    bool on_grid(int z) const noexcept;

private:
    std::vector<int> z_;
    std::vector<double> p_;
    int step_;
};

struct Moments {
    double mean_z = 0.0;
    double var_z = 0.0;
    double mean_abs_z = 0.0;
    double var_abs_z = 0.0;
};

Moments moments(std::span<const int> z, std::span<const double> p);
Moments moments(const DistributionSnapshot& d);

/// Z^2 [p(z0 - Z) + p(z0 + Z)], the variance when only z0 and its two
/// neighbours carry weight. Neighbours beyond the grid count as 0; an
/// off-grid z0 throws DomainError.
double three_point_variance(const DistributionSnapshot& d, int z0, int step);

/// sqrt(m / tau), the centre of the collapsed distribution.
double peak_estimate(long m, double tau);

/// sqrt(2 ln 2 / tau), the continuous-regime FWHM.
double fwhm_estimate(double tau);

/// Full width at half maximum of the highest peak with linear interpolation
/// between grid points. Empty when the width is not above 3 Z, where the
/// notion stops being meaningful on the discrete grid.
std::optional<double> measured_fwhm(const DistributionSnapshot& d);

/// Least-squares line y = slope x + intercept over a tau window.
struct RegimeFit {
    double tau_lo = 0.0;
    double tau_hi = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct RegimeFits {
    /// ln(width) against ln(tau): slope -1/2 in the square-root regime;
    /// exp(intercept) is the constant width * sqrt(tau).
    RegimeFit sqrt_regime;
    /// ln(variance) against tau: slope is the exponential shrinking rate.
    RegimeFit exponential_regime;
};

/// Width and variance refer to |z| (var_abs_z), the per-peak width that
/// stays meaningful for the symmetric two-peak states of the minimum
/// geometry. sigma0 is the initial standard deviation of z.
///
/// Windows: square-root regime where Z < width < sigma0 / 3, exponential
/// regime where variance < Z^2 / 4. Throws DomainError when the record never
/// drops below Z^2 / 10 or a window is empty.
RegimeFits fit_regimes(const TrajectoryRecord& record);

/// Widest window, measured as tau_hi / tau_lo, in which width * sqrt(tau)
/// fits inside a band [(1 - tolerance) c, (1 + tolerance) c] for some c, among samples recorded after
/// the width first drops below sigma0 / 3.
struct SqrtLawWindow {
    double tau_lo = 0.0;
    double tau_hi = 0.0;
    double mean_scaled_width = 0.0;
    double decades() const;
};
std::optional<SqrtLawWindow> sqrt_law_window(const TrajectoryRecord& record, double tolerance);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Pearson goodness-of-fit of observed counts against expected probabilities.
/// Bins with expected count below 5 are pooled into their neighbour first.
ChiSquareResult chi_square_test(std::span<const std::size_t> observed, std::span<const double> expected_p);

}  // namespace qcollapse
