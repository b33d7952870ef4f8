#pragma once

#include <cstdint>
#include <vector>

namespace qcollapse {

/// Moments of one recorded checkpoint.
struct TrajectorySample {
    double tau = 0.0;
    long m = 0;
    double mean_z = 0.0;
    double mean_abs_z = 0.0;
    double var_z = 0.0;
    double var_abs_z = 0.0;
    bool jump_in_interval = false;  ///< a count occurred in (previous tau, tau]
};

/// One stochastic trajectory in scaled time tau.
struct TrajectoryRecord {
    std::uint64_t seed = 0;
    int step = 1;                 ///< atom-number step Z of the grid
    std::vector<int> z_grid;
    std::vector<TrajectorySample> samples;
    std::vector<double> jumps;    ///< count times, strictly increasing
    /// Normalized distribution over z_grid at every sample (only when requested).
    std::vector<std::vector<double>> distributions;
};

}  // namespace qcollapse
