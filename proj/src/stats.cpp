#include "qcollapse/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qcollapse/error.hpp"

namespace qcollapse {

DistributionSnapshot::DistributionSnapshot(std::vector<int> z, std::vector<double> p, int step)
    : z_(std::move(z)), p_(std::move(p)), step_(step)
{
    if (z_.empty() || z_.size() != p_.size()) throw ConfigError("snapshot needs matching non-empty z and p");
    if (step_ < 1) throw ConfigError("snapshot step must be positive");
    for (std::size_t i = 1; i < z_.size(); ++i)
        if (z_[i] - z_[i - 1] != step_) throw ConfigError("snapshot grid is not uniform");
    double total = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0)) throw ConfigError("snapshot has a negative probability");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("snapshot is not normalized");
}

DistributionSnapshot DistributionSnapshot::folded() const
{
    int lo = std::abs(z_.front());
    int hi = lo;
    for (int z : z_) {
        lo = std::min(lo, std::abs(z));
        hi = std::max(hi, std::abs(z));
    }
    std::vector<int> grid;
    for (int z = lo; z <= hi; z += step_) grid.push_back(z);
    std::vector<double> p(grid.size(), 0.0);
    for (std::size_t i = 0; i < z_.size(); ++i) {
        const int a = std::abs(z_[i]);
        if ((a - lo) % step_ != 0) throw DomainError("grid cannot be folded onto |z| with the same step");
        p[static_cast<std::size_t>((a - lo) / step_)] += p_[i];
    }
    // Re-normalize against accumulated rounding so the invariant holds exactly.
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
    return DistributionSnapshot(std::move(grid), std::move(p), step_);
}

bool DistributionSnapshot::on_grid(int z) const noexcept
{
    return z >= z_.front() && z <= z_.back() && (z - z_.front()) % step_ == 0;
}

double DistributionSnapshot::at(int z) const noexcept
{
    if (!on_grid(z)) return 0.0;
    return p_[static_cast<std::size_t>((z - z_.front()) / step_)];
}

Moments moments(std::span<const int> z, std::span<const double> p)
{
    Moments out;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out.mean_z += p[i] * z[i];
        out.mean_abs_z += p[i] * std::abs(z[i]);
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double d = z[i] - out.mean_z;
        const double da = std::abs(z[i]) - out.mean_abs_z;
        out.var_z += p[i] * d * d;
        out.var_abs_z += p[i] * da * da;
    }
    return out;
}

Moments moments(const DistributionSnapshot& d)
{
    return moments(d.z(), d.p());
}

double three_point_variance(const DistributionSnapshot& d, int z0, int step)
{
    if (!d.on_grid(z0)) throw DomainError("three-point variance: z0=" + std::to_string(z0) + " is off the grid");
    const double z2 = static_cast<double>(step) * step;
    return z2 * (d.at(z0 - step) + d.at(z0 + step));
}

double peak_estimate(long m, double tau)
{
    if (!(tau > 0.0)) throw DomainError("peak estimate needs tau > 0");
    return std::sqrt(static_cast<double>(m) / tau);
}

double fwhm_estimate(double tau)
{
    if (!(tau > 0.0)) throw DomainError("FWHM estimate needs tau > 0");
    return std::sqrt(2.0 * std::numbers::ln2 / tau);
}

std::optional<double> measured_fwhm(const DistributionSnapshot& d)
{
    const auto p = d.p();
    const auto z = d.z();
    const auto peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const double half = 0.5 * p[peak];
    // Interpolated position where p crosses `half` between grid points a and b.
    auto crossing = [&](std::size_t a, std::size_t b) {
        const double frac = (p[a] - half) / (p[a] - p[b]);
        return z[a] + frac * (z[b] - z[a]);
    };
    std::size_t left = peak;
    while (left > 0 && p[left - 1] >= half) --left;
    std::size_t right = peak;
    while (right + 1 < p.size() && p[right + 1] >= half) ++right;
    if (left == 0 || right + 1 == p.size()) return std::nullopt;
    const double width = crossing(right, right + 1) - crossing(left, left - 1);
    if (width <= 3.0 * d.step()) return std::nullopt;
    return width;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2 || x.size() != y.size()) throw DomainError("line fit needs at least two points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("line fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return f;
}

namespace {

RegimeFit fit_window(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& tau,
                     const char* name)
{
    if (x.size() < 2) throw DomainError(std::string("trajectory did not reach regime: ") + name);
    const LineFit f = fit_line(x, y);
    RegimeFit out;
    out.tau_lo = tau.front();
    out.tau_hi = tau.back();
    out.slope = f.slope;
    out.intercept = f.intercept;
    out.r2 = f.r2;
    out.points = x.size();
    return out;
}

}  // namespace

RegimeFits fit_regimes(const TrajectoryRecord& record)
{
    if (record.samples.empty()) throw DomainError("empty trajectory record");
    const double z = record.step;
    const double sigma0 = std::sqrt(record.samples.front().var_z);
    if (!(record.samples.back().var_abs_z < z * z / 10.0))
        throw DomainError("trajectory did not reach regime: final variance not below Z^2/10");

    std::vector<double> sx, sy, st, ex, ey;
    for (const auto& s : record.samples) {
        if (s.tau <= 0.0) continue;
        const double width = std::sqrt(s.var_abs_z);
        if (width > z && width < sigma0 / 3.0) {
            sx.push_back(std::log(s.tau));
            sy.push_back(std::log(width));
            st.push_back(s.tau);
        }
        if (s.var_abs_z < z * z / 4.0 && s.var_abs_z > 0.0) {
            ex.push_back(s.tau);
            ey.push_back(std::log(s.var_abs_z));
        }
    }
    RegimeFits fits;
    fits.sqrt_regime = fit_window(sx, sy, st, "square-root");
    fits.exponential_regime = fit_window(ex, ey, ex, "exponential");
    return fits;
}

double SqrtLawWindow::decades() const
{
    return std::log10(tau_hi / tau_lo);
}

std::optional<SqrtLawWindow> sqrt_law_window(const TrajectoryRecord& record, double tolerance)
{
    const auto& samples = record.samples;
    if (samples.empty()) return std::nullopt;
    const double sigma0 = std::sqrt(samples.front().var_z);
    std::size_t first = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].tau > 0.0 && std::sqrt(samples[i].var_abs_z) < sigma0 / 3.0) {
            first = i;
            break;
        }
    }
    std::optional<SqrtLawWindow> best;
    for (std::size_t i = first; i < samples.size(); ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        double sum = 0.0;
        for (std::size_t j = i; j < samples.size(); ++j) {
            const double v = std::sqrt(samples[j].var_abs_z * samples[j].tau);
            if (!(v > 0.0)) break;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
            const double mean = sum / static_cast<double>(j - i + 1);
            // Some constant c with every value in [(1 - tol) c, (1 + tol) c].
            if (hi * (1.0 - tolerance) > lo * (1.0 + tolerance)) break;
            if (j > i && (!best || samples[j].tau / samples[i].tau > best->tau_hi / best->tau_lo))
                best = SqrtLawWindow{samples[i].tau, samples[j].tau, mean};
        }
    }
    return best;
}

ChiSquareResult chi_square_test(std::span<const std::size_t> observed, std::span<const double> expected_p)
{
    if (observed.size() != expected_p.size() || observed.empty())
        throw DomainError("chi-square: observed and expected differ in length");
    double n = 0.0;
    for (auto o : observed) n += static_cast<double>(o);
    if (n <= 0.0) throw DomainError("chi-square: no observations");

    // Pool from the low-probability end so every bin expects at least 5 counts.
    std::vector<double> obs;
    std::vector<double> exp;
    double acc_o = 0.0;
    double acc_e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        acc_o += static_cast<double>(observed[i]);
        acc_e += expected_p[i] * n;
        if (acc_e >= 5.0) {
            obs.push_back(acc_o);
            exp.push_back(acc_e);
            acc_o = acc_e = 0.0;
        }
    }
    if (acc_e > 0.0 || acc_o > 0.0) {
        if (exp.empty()) {
            obs.push_back(acc_o);
            exp.push_back(acc_e);
        } else {
            obs.back() += acc_o;
            exp.back() += acc_e;
        }
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (exp[i] <= 0.0) {
            if (obs[i] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
            continue;
        }
        r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    }
    r.dof = static_cast<int>(obs.size()) - 1;
    if (r.dof < 1) {
        r.p_value = 1.0;
        return r;
    }
    r.p_value = std::isfinite(r.statistic) ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 0.0;
    return r;
}

}  // namespace qcollapse
