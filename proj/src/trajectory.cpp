#include "qcollapse/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "engine_driver.hpp"
#include "qcollapse/error.hpp"

namespace qcollapse {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v)
{
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (double x : v) s += std::exp(x - top);
    return top + std::log(s);
}

// Index of the largest finite log-weight, optionally skipping z = 0.
std::optional<std::size_t> reference_index(const ReducedState& s, bool skip_zero)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < s.z.size(); ++i) {
        if (!std::isfinite(s.log_w[i]) || (skip_zero && s.z[i] == 0)) continue;
        if (!best || s.log_w[i] > s.log_w[*best]) best = i;
    }
    return best;
}

// log_w(z) = ln p0(z) + 2m ln|z| - z^2 tau minus the same at z_ref, with
// ln|z / z_ref| taken through log1p and z^2 - z_ref^2 formed in integers.
void rebuild(ReducedState& s, std::size_t ref)
{
    const long long zr = s.z[ref];
    const double abs_zr = std::abs(static_cast<double>(zr));
    const double lp_ref = s.log_p0[ref];
    for (std::size_t i = 0; i < s.z.size(); ++i) {
        const long long zi = s.z[i];
        if (!std::isfinite(s.log_p0[i]) || (s.m > 0 && zi == 0)) {
            s.log_w[i] = neg_inf;
            continue;
        }
        double v = s.log_p0[i] - lp_ref - static_cast<double>((zi - zr) * (zi + zr)) * s.tau;
        if (s.m > 0) {
            const double ratio = std::log1p((std::abs(static_cast<double>(zi)) - abs_zr) / abs_zr);
            v += 2.0 * static_cast<double>(s.m) * ratio;
        }
        s.log_w[i] = v;
    }
}

class ReducedModel {
public:
    explicit ReducedModel(ReducedState s) : state_(std::move(s)) {}

    void advance_to(double tau)
    {
        if (!(tau > state_.tau)) return;
        const auto ref = reference_index(state_, state_.m > 0);
        if (!ref) throw DomainError("reduced state has no finite log-weight");
        state_.tau = tau;
        rebuild(state_, *ref);
    }
    void jump() { state_ = apply_count(std::move(state_)); }
    std::optional<double> waiting_time(UniformStream& rng) const { return sample_next_jump(state_, rng); }
    double rate() const { return detection_rate(state_); }
    std::vector<double> distribution() const { return probabilities(state_); }
    long count() const { return state_.m; }

private:
    ReducedState state_;
};

}  // namespace

ReducedState make_reduced_state(const InitialDistribution& init)
{
    ReducedState s;
    s.z.assign(init.z().begin(), init.z().end());
    s.log_p0.assign(init.log_p().begin(), init.log_p().end());
    s.log_w = s.log_p0;
    s.step = init.step();
    return s;
}

std::vector<double> probabilities(const ReducedState& s)
{
    const double top = *std::max_element(s.log_w.begin(), s.log_w.end());
    if (!std::isfinite(top)) throw DomainError("reduced state has no finite log-weight");
    std::vector<double> p(s.log_w.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(s.log_w[i] - top);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

ReducedState advance_no_count(ReducedState s, double dtau)
{
    if (!(dtau > 0.0)) throw ConfigError("advance_no_count needs dtau > 0");
    const auto ref = reference_index(s, s.m > 0);
    if (!ref) throw DomainError("reduced state has no finite log-weight");
    s.tau += dtau;
    rebuild(s, *ref);
    return s;
}

ReducedState apply_count(ReducedState s)
{
    const auto ref = reference_index(s, true);
    if (!ref) throw DomainError("dark state cannot produce a photocount");
    ++s.m;
    rebuild(s, *ref);
    return s;
}

double detection_rate(const ReducedState& s)
{
    const std::vector<double> p = probabilities(s);
    double rate = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) rate += p[i] * static_cast<double>(s.z[i]) * s.z[i];
    return rate;
}

std::optional<double> solve_waiting_time(std::span<const double> log_w, std::span<const double> rates, double r)
{
    if (log_w.size() != rates.size() || log_w.empty()) throw ConfigError("waiting time: mismatched inputs");
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("waiting time: uniform draw must lie in (0, 1)");
    const double log_total = log_sum_exp(log_w);
    if (!std::isfinite(log_total)) throw DomainError("waiting time: no finite weight");
    const double target = std::log(r);

    // Mass that never decays bounds the survival probability from below.
    double dark = neg_inf;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i] < 0.0) throw ConfigError("waiting time: negative rate");
        if (rates[i] == 0.0 && std::isfinite(log_w[i])) dark = std::max(dark, log_w[i]);
    }
    if (std::isfinite(dark)) {
        std::vector<double> dark_w;
        for (std::size_t i = 0; i < rates.size(); ++i)
            if (rates[i] == 0.0) dark_w.push_back(log_w[i]);
        if (log_sum_exp(dark_w) - log_total >= target) return std::nullopt;
    }

    // g(x) = ln S(x) - ln r is convex and decreasing, so Newton steps from
    // x = 0 increase monotonically towards the root without overshooting.
    std::vector<double> shifted(log_w.size());
    auto evaluate = [&](double x, double& slope) {
        for (std::size_t i = 0; i < log_w.size(); ++i) shifted[i] = log_w[i] - rates[i] * x;
        const double lse = log_sum_exp(shifted);
        slope = 0.0;
        for (std::size_t i = 0; i < log_w.size(); ++i)
            if (std::isfinite(shifted[i])) slope -= rates[i] * std::exp(shifted[i] - lse);
        return lse - log_total - target;
    };
    double x = 0.0;
    for (int iter = 0; iter < 500; ++iter) {
        double slope = 0.0;
        const double g = evaluate(x, slope);
        if (g <= 0.0 || slope >= 0.0) break;
        const double step = -g / slope;
        const double next = x + step;
        if (next == x || step <= 1e-15 * next) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

std::optional<double> sample_next_jump(const ReducedState& s, UniformStream& rng)
{
    std::vector<double> rates(s.z.size());
    std::transform(s.z.begin(), s.z.end(), rates.begin(),
                   [](int z) { return static_cast<double>(z) * z; });
    return solve_waiting_time(s.log_w, rates, rng.next());
}

std::vector<double> closed_form_distribution(const InitialDistribution& init, long m, double tau)
{
    std::vector<double> log_w(init.size());
    for (std::size_t i = 0; i < init.size(); ++i) {
        const double z = init.z()[i];
        const double lp = init.log_p()[i];
        if (!std::isfinite(lp) || (m > 0 && z == 0.0)) {
            log_w[i] = neg_inf;
            continue;
        }
        log_w[i] = lp - z * z * tau + (m > 0 ? 2.0 * m * std::log(std::abs(z)) : 0.0);
    }
    ReducedState s;
    s.z.assign(init.z().begin(), init.z().end());
    s.log_w = std::move(log_w);
    return probabilities(s);
}

TrajectoryRecord run_trajectory(const InitialDistribution& init, const TrajectoryOptions& options)
{
    TrajectoryRecord rec;
    rec.seed = options.seed;
    rec.step = init.step();
    rec.z_grid.assign(init.z().begin(), init.z().end());
    ReducedModel model(make_reduced_state(init));
    detail::drive_trajectory(model, options, rec);
    return rec;
}

}  // namespace qcollapse
