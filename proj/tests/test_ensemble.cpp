#include <doctest.h>

#include <cmath>

#include "qcollapse/error.hpp"
#include "qcollapse/stats.hpp"
#include "qcollapse/trajectory.hpp"

using namespace qcollapse;

namespace {

InitialDistribution superfluid_min(int n)
{
    return initial_distribution(DistributionPreset::superfluid_minimum, LatticeConfig(n, n, n), Geometry::minimum);
}

bool identical(const EnsembleSummary& a, const EnsembleSummary& b)
{
    if (a.mean_distribution != b.mean_distribution || a.standard_error != b.standard_error) return false;
    if (a.outcome_counts != b.outcome_counts || a.mean_count != b.mean_count) return false;
    for (std::size_t k = 0; k < a.mean_sample.size(); ++k) {
        const auto& x = a.mean_sample[k];
        const auto& y = b.mean_sample[k];
        if (x.mean_z != y.mean_z || x.var_z != y.var_z || x.mean_abs_z != y.mean_abs_z || x.var_abs_z != y.var_abs_z)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("stream seeds")
{
    CHECK(derive_stream_seed(1, 0) != derive_stream_seed(1, 1));
    CHECK(derive_stream_seed(1, 0) != derive_stream_seed(2, 0));
    CHECK(derive_stream_seed(7, 3) == derive_stream_seed(7, 3));
    // SplitMix64 reference output for state 0
    CHECK(mix64(0) == 0xE220A8397B1DCDAFULL);
    UniformStream u(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.next();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("one-trajectory ensemble equals run_trajectory with the derived seed")
{
    const auto init = superfluid_min(8);
    EnsembleOptions eo;
    eo.tau_max = 1.0;
    eo.record_interval = 0.05;
    eo.n_traj = 1;
    eo.base_seed = 42;
    const auto ens = run_ensemble(init, eo);

    TrajectoryOptions to;
    to.tau_max = 1.0;
    to.record_interval = 0.05;
    to.seed = derive_stream_seed(42, 0);
    to.keep_distributions = true;
    const auto rec = run_trajectory(init, to);
    CHECK(ens.mean_distribution == rec.distributions);
    for (std::size_t k = 0; k < rec.samples.size(); ++k) {
        CHECK(ens.mean_count[k] == static_cast<double>(rec.samples[k].m));
        CHECK(ens.mean_sample[k].var_abs_z == rec.samples[k].var_abs_z);
        CHECK(ens.standard_error[k] == std::vector<double>(init.size(), 0.0));
    }
}

TEST_CASE("ensemble summaries do not depend on the worker count")
{
    const auto init = superfluid_min(10);
    EnsembleOptions eo;
    eo.tau_max = 2.0;
    eo.record_interval = 0.1;
    eo.n_traj = 333;
    eo.base_seed = 9;
    eo.workers = 1;
    const auto one = run_ensemble(init, eo);
    eo.workers = 4;
    const auto four = run_ensemble(init, eo);
    eo.workers = 0;
    const auto hw = run_ensemble(init, eo);
    CHECK(identical(one, four));
    CHECK(identical(one, hw));
    eo.base_seed = 10;
    CHECK_FALSE(identical(one, run_ensemble(init, eo)));
}

TEST_CASE("martingale: the ensemble-mean posterior stays at the prior")
{
    const auto init = superfluid_min(6);
    EnsembleOptions eo;
    eo.tau_max = 2.0;
    eo.record_interval = 0.5;
    eo.n_traj = 3000;
    eo.base_seed = 2024;
    eo.workers = 0;
    const auto ens = run_ensemble(init, eo);
    for (std::size_t k = 0; k < ens.taus.size(); ++k) {
        for (std::size_t j = 0; j < init.size(); ++j) {
            const double dev = std::abs(ens.mean_distribution[k][j] - init.p()[j]);
            if (k == 0) CHECK(dev < 1e-15);
            else CHECK(dev <= 3.5 * ens.standard_error[k][j]);
        }
    }
    // outcome histogram against the folded prior
    const DistributionSnapshot folded =
        DistributionSnapshot(ens.z_grid, std::vector<double>(init.p().begin(), init.p().end()), init.step()).folded();
    const auto chi = chi_square_test(ens.outcome_counts, folded.p());
    CHECK(chi.p_value > 0.001);
    CHECK(std::vector<int>(folded.z().begin(), folded.z().end()) == ens.outcome_abs_z);
}

TEST_CASE("ensemble edge cases")
{
    const auto init = superfluid_min(4);
    EnsembleOptions eo;
    eo.tau_max = 0.0;
    eo.record_interval = 0.1;
    eo.n_traj = 5;
    const auto ens = run_ensemble(init, eo);
    CHECK(ens.taus.size() == 1);
    eo.n_traj = 0;
    CHECK_THROWS_AS(run_ensemble(init, eo), ConfigError);
}
