#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "engine_driver.hpp"
#include "qcollapse/error.hpp"
#include "qcollapse/stats.hpp"
#include "qcollapse/trajectory.hpp"

namespace qcollapse {

namespace {

// Trajectories per partial sum; fixed so the merge order never depends on workers.
constexpr std::size_t block_size = 32;

struct Partial {
    std::vector<std::vector<double>> sum_p;
    std::vector<std::vector<double>> sum_p2;
    std::vector<TrajectorySample> sum_sample;
    std::vector<std::size_t> outcomes;
};

Partial make_partial(std::size_t checkpoints, std::size_t grid, std::size_t outcomes)
{
    Partial p;
    p.sum_p.assign(checkpoints, std::vector<double>(grid, 0.0));
    p.sum_p2 = p.sum_p;
    p.sum_sample.assign(checkpoints, TrajectorySample{});
    p.outcomes.assign(outcomes, 0);
    return p;
}

void accumulate(TrajectorySample& into, const TrajectorySample& s)
{
    into.tau += s.tau;
    into.m += s.m;
    into.mean_z += s.mean_z;
    into.mean_abs_z += s.mean_abs_z;
    into.var_z += s.var_z;
    into.var_abs_z += s.var_abs_z;
}

}  // namespace

EnsembleSummary run_ensemble(const InitialDistribution& init, const EnsembleOptions& options)
{
    if (options.n_traj < 1) throw ConfigError("ensemble needs n_traj >= 1");
    const std::size_t checkpoints = detail::checkpoint_count(options.tau_max, options.record_interval);

    EnsembleSummary out;
    out.z_grid.assign(init.z().begin(), init.z().end());
    out.step = init.step();
    out.n_traj = options.n_traj;
    {
        const DistributionSnapshot folded =
            DistributionSnapshot(out.z_grid, std::vector<double>(init.p().begin(), init.p().end()), init.step())
                .folded();
        out.outcome_abs_z.assign(folded.z().begin(), folded.z().end());
    }
    const std::size_t grid = out.z_grid.size();
    const std::size_t n_outcomes = out.outcome_abs_z.size();
    const std::size_t n_blocks = (options.n_traj + block_size - 1) / block_size;
    std::vector<Partial> partials(n_blocks);

    auto run_block = [&](std::size_t b) {
        Partial part = make_partial(checkpoints, grid, n_outcomes);
        const std::size_t end = std::min(options.n_traj, (b + 1) * block_size);
        for (std::size_t i = b * block_size; i < end; ++i) {
            TrajectoryOptions topt;
            topt.tau_max = options.tau_max;
            topt.record_interval = options.record_interval;
            topt.seed = derive_stream_seed(options.base_seed, i);
            topt.keep_distributions = true;
            const TrajectoryRecord rec = run_trajectory(init, topt);
            for (std::size_t k = 0; k < checkpoints; ++k) {
                const auto& p = rec.distributions[k];
                for (std::size_t j = 0; j < grid; ++j) {
                    part.sum_p[k][j] += p[j];
                    part.sum_p2[k][j] += p[j] * p[j];
                }
                accumulate(part.sum_sample[k], rec.samples[k]);
            }
            const DistributionSnapshot final_state(rec.z_grid, rec.distributions.back(), rec.step);
            const DistributionSnapshot folded = final_state.folded();
            const auto fp = folded.p();
            const auto peak = static_cast<std::size_t>(std::max_element(fp.begin(), fp.end()) - fp.begin());
            ++part.outcomes[peak];
        }
        partials[b] = std::move(part);
    };

    unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_blocks));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t b = next++; b < n_blocks; b = next++) {
            try {
                run_block(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    Partial total = make_partial(checkpoints, grid, n_outcomes);
    for (const Partial& part : partials) {
        for (std::size_t k = 0; k < checkpoints; ++k) {
            for (std::size_t j = 0; j < grid; ++j) {
                total.sum_p[k][j] += part.sum_p[k][j];
                total.sum_p2[k][j] += part.sum_p2[k][j];
            }
            accumulate(total.sum_sample[k], part.sum_sample[k]);
        }
        for (std::size_t j = 0; j < n_outcomes; ++j) total.outcomes[j] += part.outcomes[j];
    }

    const auto n = static_cast<double>(options.n_traj);
    out.taus.resize(checkpoints);
    out.mean_distribution.assign(checkpoints, std::vector<double>(grid));
    out.standard_error.assign(checkpoints, std::vector<double>(grid));
    out.mean_sample.resize(checkpoints);
    out.mean_count.resize(checkpoints);
    for (std::size_t k = 0; k < checkpoints; ++k) {
        out.taus[k] = static_cast<double>(k) * options.record_interval;
        for (std::size_t j = 0; j < grid; ++j) {
            const double mean = total.sum_p[k][j] / n;
            out.mean_distribution[k][j] = mean;
            const double var = options.n_traj > 1
                                   ? std::max(0.0, (total.sum_p2[k][j] - n * mean * mean) / (n - 1.0))
                                   : 0.0;
            out.standard_error[k][j] = std::sqrt(var / n);
        }
        const TrajectorySample& s = total.sum_sample[k];
        out.mean_sample[k] =
            TrajectorySample{out.taus[k], 0, s.mean_z / n, s.mean_abs_z / n, s.var_z / n, s.var_abs_z / n, false};
        out.mean_count[k] = static_cast<double>(s.m) / n;
    }
    out.outcome_counts = std::move(total.outcomes);
    return out;
}

}  // namespace qcollapse
