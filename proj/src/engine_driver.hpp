#pragma once

// Shared checkpoint/jump loop for the reduced and configuration-space engines.

#include <cmath>
#include <limits>
#include <optional>

#include "qcollapse/error.hpp"
#include "qcollapse/stats.hpp"
#include "qcollapse/trajectory.hpp"

namespace qcollapse::detail {

inline std::size_t checkpoint_count(double tau_max, double interval)
{
    if (!(tau_max >= 0.0) || !std::isfinite(tau_max)) throw ConfigError("tau_max must be finite and >= 0");
    if (!(interval > 0.0) || !std::isfinite(interval)) throw ConfigError("record_interval must be > 0");
    return static_cast<std::size_t>(std::floor(tau_max / interval * (1.0 + 1e-12))) + 1;
}

/// Model requirements:
///   void advance_to(double tau);                   no-count evolution up to absolute tau
///   void jump();                                   apply one count at the current time
///   std::optional<double> waiting_time(UniformStream&);  scaled delay to the next count
///   double rate() const;                           current counts per unit tau
///   std::vector<double> distribution() const;      normalized marginal over the grid
///   long count() const;
template <class Model>
void drive_trajectory(Model& model, const TrajectoryOptions& opt, TrajectoryRecord& rec)
{
    const std::size_t n_checkpoints = checkpoint_count(opt.tau_max, opt.record_interval);
    constexpr double never = std::numeric_limits<double>::infinity();
    UniformStream rng(opt.seed);

    double now = 0.0;
    auto schedule = [&]() {
        if (opt.jumps != JumpMode::sampled) return never;
        const std::optional<double> delay = model.waiting_time(rng);
        return delay ? now + *delay : never;
    };
    double next_jump = schedule();
    bool jumped = false;

    auto count_at = [&]() {
        model.jump();
        rec.jumps.push_back(now);
        jumped = true;
    };

    rec.samples.reserve(n_checkpoints);
    for (std::size_t k = 0; k < n_checkpoints; ++k) {
        const double checkpoint = static_cast<double>(k) * opt.record_interval;
        if (opt.jumps == JumpMode::sampled) {
            while (next_jump <= checkpoint) {
                if (next_jump > now) model.advance_to(next_jump);
                now = next_jump;
                count_at();
                next_jump = schedule();
            }
        } else if (opt.jumps == JumpMode::fixed_step) {
            while (now < checkpoint) {
                const double rate = model.rate();
                const double remaining = checkpoint - now;
                const double dtau = rate > 0.0 ? std::min(0.01 / rate, remaining) : remaining;
                const double u = rng.next();
                now = dtau == remaining ? checkpoint : now + dtau;
                model.advance_to(now);
                if (u < rate * dtau) count_at();
            }
        }
        if (checkpoint > now) model.advance_to(checkpoint);
        now = checkpoint;

        std::vector<double> p = model.distribution();
        const Moments mo = moments(rec.z_grid, p);
        rec.samples.push_back(TrajectorySample{checkpoint, model.count(), mo.mean_z, mo.mean_abs_z, mo.var_z,
                                               mo.var_abs_z, jumped});
        jumped = false;
        if (opt.keep_distributions) rec.distributions.push_back(std::move(p));
    }
}

}  // namespace qcollapse::detail
