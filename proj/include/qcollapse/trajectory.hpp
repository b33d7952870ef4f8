#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qcollapse/dynamics.hpp"
#include "qcollapse/lattice.hpp"
#include "qcollapse/record.hpp"
#include "qcollapse/rng.hpp"

namespace qcollapse {

/// Conditional atom-number distribution p(z) ~ z^{2m} exp(-z^2 tau) p0(z),
/// held as unnormalized log-weights so that exp(-z^2 tau) never underflows.
/// log_w is rebuilt from (log_p0, m, tau) relative to the current peak after
/// every update, so rounding does not accumulate with the number of counts.
struct ReducedState {
    std::vector<int> z;
    std::vector<double> log_p0;
    std::vector<double> log_w;  ///< -inf marks an eliminated component
    int step = 1;
    long m = 0;
    double tau = 0.0;
};

ReducedState make_reduced_state(const InitialDistribution& init);

/// Normalized p(z) (max-shifted exponentials).
std::vector<double> probabilities(const ReducedState& s);

/// No-count evolution: log_w(z) -= z^2 dtau, up to a z-independent shift.
ReducedState advance_no_count(ReducedState s, double dtau);

/// Photocount: log_w(z) += 2 ln|z| up to a shift; z = 0 is eliminated.
/// Throws DomainError("dark state cannot produce a photocount") when only z = 0 carries weight.
ReducedState apply_count(ReducedState s);

/// <z^2>: counts per unit tau.
double detection_rate(const ReducedState& s);

/// Smallest x >= 0 with sum_i w_i exp(-rate_i x) = r sum_i w_i, for
/// log-weights `log_w`. Empty when the weight with zero rate is already >= r
/// (the survival probability never falls to r).
std::optional<double> solve_waiting_time(std::span<const double> log_w, std::span<const double> rates,
                                         double r);

/// Draws one uniform r and returns the scaled waiting time to the next count.
std::optional<double> sample_next_jump(const ReducedState& s, UniformStream& rng);

/// p(z, m, tau) evaluated directly from p0.
std::vector<double> closed_form_distribution(const InitialDistribution& init, long m, double tau);

enum class JumpMode {
    sampled,     ///< exact waiting-time sampling, one uniform per count
    suppressed,  ///< no-count record (post-selected trajectory without jumps)
    fixed_step   ///< Bernoulli trials with rate * dtau <= 0.01; cross-check only
};

struct TrajectoryOptions {
    double tau_max = 1.0;
    double record_interval = 0.01;
    std::uint64_t seed = 0;
    JumpMode jumps = JumpMode::sampled;
    bool keep_distributions = false;
};

/// Reduced engine: records moments at tau = k * record_interval, k = 0, 1, ..
/// up to tau_max. Deterministic for a given seed.
TrajectoryRecord run_trajectory(const InitialDistribution& init, const TrajectoryOptions& options);

/// Configuration-space engine over the full Fock basis.
struct FullEngineSetup {
    LatticeConfig lattice;
    Geometry geometry;
    AmplitudePreset initial = AmplitudePreset::superfluid;
    CavityParams params;
    Regime regime = Regime::steady;
};

/// Evolves the per-configuration superposition with the closed-form
/// amplitudes and phases, drawing counts from the configuration-space
/// survival law with the same draw sequence as run_trajectory, and records
/// the marginal over z = D10. Times are reported as tau = 2|C|^2 kappa t.
TrajectoryRecord run_full_oracle(const FullEngineSetup& setup, const TrajectoryOptions& options);

/// Marginal initial distribution implied by the full engine's amplitudes.
InitialDistribution full_engine_marginal(const FullEngineSetup& setup);

struct EnsembleOptions {
    double tau_max = 1.0;
    double record_interval = 0.01;
    std::size_t n_traj = 1;
    std::uint64_t base_seed = 0;
    unsigned workers = 1;  ///< 0 selects hardware concurrency
};

struct EnsembleSummary {
    std::vector<int> z_grid;
    int step = 1;
    std::vector<double> taus;
    /// [checkpoint][z]: mean over trajectories of the conditional p(z).
    std::vector<std::vector<double>> mean_distribution;
    /// [checkpoint][z]: standard error of that mean.
    std::vector<std::vector<double>> standard_error;
    /// [checkpoint]: mean over trajectories of the conditional moments (m unused).
    std::vector<TrajectorySample> mean_sample;
    std::vector<double> mean_count;
    /// |z| grid and number of trajectories whose final folded distribution peaks there.
    std::vector<int> outcome_abs_z;
    std::vector<std::size_t> outcome_counts;
    std::size_t n_traj = 0;
};

/// Trajectory i uses seed derive_stream_seed(base_seed, i); partial sums are
/// merged in a fixed order, so the summary is bit-identical for any worker count.
EnsembleSummary run_ensemble(const InitialDistribution& init, const EnsembleOptions& options);

}  // namespace qcollapse
