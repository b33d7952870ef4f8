#include <algorithm>
#include <cmath>
#include <limits>

#include "engine_driver.hpp"
#include "qcollapse/error.hpp"
#include "qcollapse/trajectory.hpp"

namespace qcollapse {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// Full superposition over the Fock basis. Time is kept in physical units
/// internally; the driver speaks tau = tau_per_time * t.
class FullModel {
public:
    FullModel(const FullEngineSetup& setup, double tau_horizon)
        : setup_(setup),
          modes_(ModeProfile::for_geometry(setup.geometry, setup.lattice.sites())),
          basis_(enumerate_configurations(setup.lattice)),
          initial_(initial_amplitudes(setup.initial, setup.lattice, basis_)),
          grid_(geometry_grid(setup.geometry, setup.lattice)),
          tau_per_time_(setup.params.tau_per_time()),
          horizon_(tau_horizon)
    {
        if (!(tau_per_time_ > 0.0)) throw ConfigError("full engine needs kappa > 0 and C != 0");
        const int k = setup.lattice.illuminated();
        for (const auto& q : basis_) {
            const Complex d10 = coupling_coefficient(q, modes_, 1, 0, k);
            const Complex d11 = coupling_coefficient(q, modes_, 1, 1, k);
            const Complex alpha = steady_amplitude(setup.params, d10, d11);
            // 2 Re Phi_q per unit time of the steady solution: norm decay rate of component q.
            steady_rates_.push_back(-2.0 * phase_exponent_steady(setup.params, d10, alpha, 1.0).real());
        }
        refresh();
    }

    void advance_to(double tau)
    {
        tau_ = tau;
        refresh();
    }

    void jump()
    {
        jump_times_.push_back(time());
        refresh();
    }

    std::optional<double> waiting_time(UniformStream& rng) const
    {
        const double r = rng.next();
        if (setup_.regime == Regime::steady) {
            std::vector<double> log_p(basis_.size());
            std::vector<double> rates(basis_.size());
            for (std::size_t i = 0; i < basis_.size(); ++i) {
                const double p = state_.probability(i);
                log_p[i] = p > 0.0 ? std::log(p) : neg_inf;
                rates[i] = steady_rates_[i] / tau_per_time_;
            }
            return solve_waiting_time(log_p, rates, r);
        }
        return transient_waiting_time(r);
    }

    double rate() const
    {
        // -d ln N / dtau at the current time.
        if (setup_.regime == Regime::steady) {
            double total = 0.0;
            for (std::size_t i = 0; i < basis_.size(); ++i) total += state_.probability(i) * steady_rates_[i];
            return total / tau_per_time_;
        }
        const double h = 1e-7;
        return -2.0 * (log_norm_at(tau_ + h) - state_.log_norm) / h;
    }

    std::vector<double> distribution() const
    {
        std::vector<double> p(basis_.size());
        for (std::size_t i = 0; i < basis_.size(); ++i) p[i] = state_.probability(i);
        return illuminated_marginal(basis_, p, modes_, setup_.lattice.illuminated(), grid_);
    }

    long count() const { return static_cast<long>(jump_times_.size()); }
    const std::vector<int>& grid() const { return grid_; }

private:
    double time() const { return tau_ / tau_per_time_; }

    ConditionalState state_at(double tau) const
    {
        return conditional_state(basis_, initial_, modes_, setup_.lattice.illuminated(), setup_.params, jump_times_,
                                 tau / tau_per_time_, setup_.regime);
    }

    double log_norm_at(double tau) const { return state_at(tau).log_norm; }

    void refresh() { state_ = state_at(tau_); }

    // Bisection on ln N(t) - ln N(t_now) = ln r; ln N is non-increasing between counts.
    std::optional<double> transient_waiting_time(double r) const
    {
        const double target = std::log(r);
        const double base = state_.log_norm;
        auto g = [&](double dtau) { return 2.0 * (log_norm_at(tau_ + dtau) - base) - target; };
        const double limit = horizon_ - tau_;
        if (limit <= 0.0 || g(limit) > 0.0) return std::nullopt;
        double lo = 0.0;
        double hi = limit;
        while (hi - lo > 1e-15 * hi) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (g(mid) > 0.0 ? lo : hi) = mid;
        }
        return hi;
    }

    FullEngineSetup setup_;
    ModeProfile modes_;
    std::vector<FockConfiguration> basis_;
    std::vector<Complex> initial_;
    std::vector<int> grid_;
    std::vector<double> steady_rates_;
    double tau_per_time_;
    double horizon_;
    double tau_ = 0.0;
    std::vector<double> jump_times_;
    ConditionalState state_;
};

}  // namespace

InitialDistribution full_engine_marginal(const FullEngineSetup& setup)
{
    const ModeProfile modes = ModeProfile::for_geometry(setup.geometry, setup.lattice.sites());
    const auto basis = enumerate_configurations(setup.lattice);
    const auto c0 = initial_amplitudes(setup.initial, setup.lattice, basis);
    std::vector<double> p(c0.size());
    std::transform(c0.begin(), c0.end(), p.begin(), [](Complex c) { return std::norm(c); });
    auto grid = geometry_grid(setup.geometry, setup.lattice);
    auto marginal = illuminated_marginal(basis, p, modes, setup.lattice.illuminated(), grid);
    return InitialDistribution(std::move(grid), std::move(marginal), grid_step(setup.geometry));
}

TrajectoryRecord run_full_oracle(const FullEngineSetup& setup, const TrajectoryOptions& options)
{
    setup.params.validate();
    if (setup.geometry == Geometry::minimum && setup.lattice.illuminated() != setup.lattice.sites())
        throw ConfigError("diffraction minimum requires K = M");
    if (options.jumps == JumpMode::fixed_step && setup.regime == Regime::transient)
        throw ConfigError("fixed-step jumps are only available for the steady regime");
    FullModel model(setup, options.tau_max);
    TrajectoryRecord rec;
    rec.seed = options.seed;
    rec.step = grid_step(setup.geometry);
    rec.z_grid = model.grid();
    detail::drive_trajectory(model, options, rec);
    return rec;
}

}  // namespace qcollapse
