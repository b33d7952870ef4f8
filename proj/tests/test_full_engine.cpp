#include <doctest.h>

#include <cmath>

#include "qcollapse/error.hpp"
#include "qcollapse/trajectory.hpp"

using namespace qcollapse;

namespace {

// Parameters for which alpha_q = C D10 holds exactly.
CavityParams oracle_params()
{
    CavityParams p;
    p.kappa = 1.0;
    p.delta_p = 0.5;
    p.delta_a = -10.0;
    p.g0 = 1.0;
    p.g1 = 1.0;
    p.a0 = 1.0;
    p.eta = 0.0;
    p.dispersive_shift = false;
    return p;
}

TrajectoryOptions options(std::uint64_t seed, double tau_max = 3.0)
{
    TrajectoryOptions o;
    o.tau_max = tau_max;
    o.record_interval = 0.01;
    o.seed = seed;
    o.keep_distributions = true;
    return o;
}

double max_marginal_deviation(const TrajectoryRecord& a, const TrajectoryRecord& b)
{
    REQUIRE(a.distributions.size() == b.distributions.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.distributions.size(); ++k) {
        CHECK(a.samples[k].m == b.samples[k].m);
        for (std::size_t j = 0; j < a.distributions[k].size(); ++j)
            worst = std::max(worst, std::abs(a.distributions[k][j] - b.distributions[k][j]));
    }
    return worst;
}

}  // namespace

TEST_CASE("marginal of the full engine's initial state")
{
    const FullEngineSetup setup{LatticeConfig(2, 2, 2), Geometry::minimum, AmplitudePreset::superfluid,
                                oracle_params(), Regime::steady};
    const auto d = full_engine_marginal(setup);
    CHECK(std::vector<int>(d.z().begin(), d.z().end()) == std::vector<int>{-2, 0, 2});
    CHECK(d.p()[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(d.p()[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("reduced and full engines agree on the z marginal")
{
    SUBCASE("minimum geometry, M = K = 2, N <= 4")
    {
        for (int n = 1; n <= 4; ++n) {
            for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
                const FullEngineSetup setup{LatticeConfig(2, 2, n), Geometry::minimum, AmplitudePreset::superfluid,
                                            oracle_params(), Regime::steady};
                const auto full = run_full_oracle(setup, options(seed));
                const auto reduced = run_trajectory(full_engine_marginal(setup), options(seed));
                CHECK(max_marginal_deviation(full, reduced) < 1e-10);
                CHECK(full.jumps.size() == reduced.jumps.size());
            }
        }
    }
    SUBCASE("maximum geometry, K < M = 3, N <= 4")
    {
        for (int n = 1; n <= 4; ++n) {
            for (int k = 1; k <= 2; ++k) {
                const FullEngineSetup setup{LatticeConfig(3, k, n), Geometry::maximum, AmplitudePreset::superfluid,
                                            oracle_params(), Regime::steady};
                const auto full = run_full_oracle(setup, options(10 + n));
                const auto reduced = run_trajectory(full_engine_marginal(setup), options(10 + n));
                CHECK(max_marginal_deviation(full, reduced) < 1e-10);
                for (std::size_t i = 0; i < full.jumps.size(); ++i)
                    CHECK(std::abs(full.jumps[i] - reduced.jumps[i]) < 1e-9 * (1 + reduced.jumps[i]));
            }
        }
    }
    SUBCASE("minimum geometry on four sites")
    {
        const FullEngineSetup setup{LatticeConfig(4, 4, 4), Geometry::minimum, AmplitudePreset::superfluid,
                                    oracle_params(), Regime::steady};
        const auto full = run_full_oracle(setup, options(8));
        const auto reduced = run_trajectory(full_engine_marginal(setup), options(8));
        CHECK(max_marginal_deviation(full, reduced) < 1e-10);
    }
}

TEST_CASE("mott initial state: no collapse dynamics")
{
    const FullEngineSetup setup{LatticeConfig(2, 2, 4), Geometry::minimum, AmplitudePreset::mott, oracle_params(),
                                Regime::steady};
    const auto full = run_full_oracle(setup, options(5));
    const auto reduced = run_trajectory(full_engine_marginal(setup), options(5));
    CHECK(max_marginal_deviation(full, reduced) == 0.0);
    // D10 = 0 for uniform filling at the minimum: a dark state, no counts at all.
    CHECK(full.jumps.empty());
    for (const auto& p : full.distributions) CHECK(p == full.distributions.front());
}

TEST_CASE("no-count branch weights follow e^{2 Re Phi_q} |c_q|^2")
{
    const CavityParams params = oracle_params();
    const LatticeConfig cfg(3, 2, 3);
    const FullEngineSetup setup{cfg, Geometry::maximum, AmplitudePreset::superfluid, params, Regime::steady};
    auto opt = options(1, 1.0);
    opt.jumps = JumpMode::suppressed;
    const auto rec = run_full_oracle(setup, opt);

    const auto basis = enumerate_configurations(cfg);
    const auto c0 = initial_amplitudes(AmplitudePreset::superfluid, cfg, basis);
    const ModeProfile modes = ModeProfile::diffraction_maximum(3);
    for (std::size_t k = 0; k < rec.samples.size(); k += 25) {
        const double t = rec.samples[k].tau / params.tau_per_time();
        std::vector<double> marginal(rec.z_grid.size(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const Complex d10 = coupling_coefficient(basis[i], modes, 1, 0, 2);
            const Complex alpha = steady_amplitude(params, d10, 0.0);
            const double w = std::exp(2.0 * phase_exponent_steady(params, d10, alpha, t).real()) * std::norm(c0[i]);
            marginal[static_cast<std::size_t>(d10.real())] += w;
            total += w;
        }
        for (std::size_t j = 0; j < marginal.size(); ++j)
            CHECK(std::abs(rec.distributions[k][j] - marginal[j] / total) < 1e-13);
    }
}

TEST_CASE("transient regime")
{
    CavityParams params = oracle_params();
    params.dispersive_shift = true;
    params.eta = 0.1;
    params.alpha0 = Complex(0.3, 0.0);
    const FullEngineSetup setup{LatticeConfig(2, 2, 2), Geometry::minimum, AmplitudePreset::superfluid, params,
                                Regime::transient};
    const auto a = run_full_oracle(setup, options(21, 1.0));
    const auto b = run_full_oracle(setup, options(21, 1.0));
    CHECK(a.jumps == b.jumps);
    CHECK(a.distributions == b.distributions);
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        double total = 0.0;
        for (double v : a.distributions[k]) total += v;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
    for (std::size_t i = 1; i < a.jumps.size(); ++i) CHECK(a.jumps[i] > a.jumps[i - 1]);

    auto fixed = options(1, 1.0);
    fixed.jumps = JumpMode::fixed_step;
    CHECK_THROWS_AS(run_full_oracle(setup, fixed), ConfigError);
}

TEST_CASE("full engine input validation")
{
    const FullEngineSetup big{LatticeConfig(20, 20, 20), Geometry::minimum, AmplitudePreset::superfluid,
                              oracle_params(), Regime::steady};
    CHECK_THROWS_WITH_AS(run_full_oracle(big, options(1)), "basis too large for full engine", ConfigError);

    const FullEngineSetup partial{LatticeConfig(3, 2, 2), Geometry::minimum, AmplitudePreset::superfluid,
                                  oracle_params(), Regime::steady};
    CHECK_THROWS_AS(run_full_oracle(partial, options(1)), ConfigError);

    CavityParams lossless = oracle_params();
    lossless.kappa = 0.0;
    const FullEngineSetup closed{LatticeConfig(2, 2, 2), Geometry::minimum, AmplitudePreset::superfluid, lossless,
                                 Regime::steady};
    CHECK_THROWS_AS(run_full_oracle(closed, options(1)), ConfigError);
}
