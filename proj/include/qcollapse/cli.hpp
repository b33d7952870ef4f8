#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "qcollapse/dynamics.hpp"
#include "qcollapse/lattice.hpp"
#include "qcollapse/trajectory.hpp"

namespace qcollapse::cli {

enum class Engine { reduced, full };

/// Parameters of the lossless collapse-and-revival sweep.
struct UnitaryBlock {
    double delta_p = 1.0;
    double C = 1.0;
    double mean_nk = 10.0;
    double truncation = 1e-12;  ///< Poisson components below this mass are dropped
    std::size_t points = 2001;  ///< samples of Q(t) on [0, 2 t_rev]
};

/// Everything one run needs. Loaded from a sectioned key=value file:
///
///     [run]       geometry N M K initial tau_max record_interval n_traj seed engine output_dir
///     [physical]  kappa delta_p delta_a g0 g1 a0 eta alpha0_re alpha0_im dispersive_shift regime
///     [unitary]   delta_p C mean_nk truncation points
///
/// Unknown sections or keys are errors.
struct RunConfig {
    Geometry geometry = Geometry::minimum;
    int N = 100;
    int M = 100;
    int K = 100;
    std::string initial = "superfluid";  ///< superfluid | mott | delta:<z> | path to a "z p0" file
    double tau_max = 3.0;
    double record_interval = 0.001;
    std::size_t n_traj = 1;
    std::uint64_t seed = 1;
    Engine engine = Engine::reduced;
    std::optional<CavityParams> physical;
    Regime regime = Regime::steady;
    std::optional<UnitaryBlock> unitary;
    std::filesystem::path output_dir = ".";
    std::filesystem::path base_dir = ".";  ///< relative distribution paths resolve here

    LatticeConfig lattice() const;
};

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Initial distribution over z for the reduced engine.
InitialDistribution resolve_initial(const RunConfig& cfg);

/// Writes trajectory.csv, trajectory_nojump.csv, events.csv, fig1.gp and summary.txt.
int cmd_trajectory(const RunConfig& cfg, std::ostream& log);
/// Writes ensemble.csv, outcomes.csv and ensemble_report.txt.
int cmd_ensemble(const RunConfig& cfg, unsigned workers, std::ostream& log);
/// Writes oracle_report.csv; returns 2 if the engines differ by more than 1e-8.
int cmd_oracle_compare(const RunConfig& cfg, std::ostream& log);
/// Writes coherence.csv and phases.csv.
int cmd_unitary(const RunConfig& cfg, std::ostream& log);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

inline constexpr double oracle_tolerance = 1e-8;

}  // namespace qcollapse::cli
