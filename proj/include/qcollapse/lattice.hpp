#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace qcollapse {

using Complex = std::complex<double>;

/// Lattice of `sites` sites holding `atoms` atoms, of which the first
/// `illuminated` sites are probed.
class LatticeConfig {
public:
    LatticeConfig(int sites, int illuminated, int atoms);

    int sites() const noexcept { return sites_; }
    int illuminated() const noexcept { return illuminated_; }
    int atoms() const noexcept { return atoms_; }

private:
    int sites_;
    int illuminated_;
    int atoms_;
};

enum class Geometry { maximum, minimum };

/// Atom-number step of the measured variable: 1 at the diffraction maximum
/// (atoms at K sites), 2 at the minimum (odd-even difference at fixed N).
constexpr int grid_step(Geometry g) noexcept { return g == Geometry::maximum ? 1 : 2; }

std::string to_string(Geometry g);
Geometry parse_geometry(const std::string& name);

/// Probe (u0) and cavity (u1) mode functions sampled at every site.
class ModeProfile {
public:
    enum class Preset { diffraction_maximum, diffraction_minimum, custom };

    /// u0 = u1 = 1 on every site.
    static ModeProfile diffraction_maximum(int sites);
    /// u0 = 1, u1 = (-1)^(j+1) for j = 1..M, so D10 = N_odd - N_even.
    static ModeProfile diffraction_minimum(int sites);
    static ModeProfile custom(std::vector<Complex> u0, std::vector<Complex> u1);
    static ModeProfile for_geometry(Geometry g, int sites);

    Preset preset() const noexcept { return preset_; }
    std::span<const Complex> u0() const noexcept { return u0_; }
    std::span<const Complex> u1() const noexcept { return u1_; }
    int sites() const noexcept { return static_cast<int>(u0_.size()); }

private:
    ModeProfile(Preset p, std::vector<Complex> u0, std::vector<Complex> u1);

    Preset preset_;
    std::vector<Complex> u0_;
    std::vector<Complex> u1_;
};

/// Occupation numbers of one classical configuration.
struct FockConfiguration {
    std::vector<int> q;

    int total() const noexcept;
    friend bool operator==(const FockConfiguration&, const FockConfiguration&) = default;
};

inline constexpr std::size_t default_basis_cap = 1'000'000;

/// Number of compositions of N into M non-negative parts, saturating at
/// SIZE_MAX on overflow.
std::size_t basis_size(const LatticeConfig& cfg) noexcept;

/// All configurations of N atoms on M sites in lexicographic order.
/// Throws ConfigError("basis too large for full engine") above `cap`.
std::vector<FockConfiguration> enumerate_configurations(const LatticeConfig& cfg,
                                                        std::size_t cap = default_basis_cap);

/// D^q_{lm} = sum over the first K sites of conj(u_l) u_m q_j.
Complex coupling_coefficient(const FockConfiguration& q, const ModeProfile& modes, int l, int m,
                             int illuminated);

/// Probability distribution of the measured atom-number variable z on a
/// uniform integer grid.
class InitialDistribution {
public:
    /// Validates normalization (1e-12), non-negativity and uniform spacing.
    /// Zero-probability entries are kept on the grid.
    InitialDistribution(std::vector<int> z, std::vector<double> p, int step);

    /// Construct from log-probabilities; normalizes them.
    static InitialDistribution from_log(std::vector<int> z, std::vector<double> log_p, int step);

    std::span<const int> z() const noexcept { return z_; }
    std::span<const double> p() const noexcept { return p_; }
    /// ln p0, -inf where p0 = 0. Carries the tails beyond double range.
    std::span<const double> log_p() const noexcept { return log_p_; }
    int step() const noexcept { return step_; }
    std::size_t size() const noexcept { return z_.size(); }

    double mean() const noexcept;
    double variance() const noexcept;

private:
    InitialDistribution() = default;

    std::vector<int> z_;
    std::vector<double> p_;
    std::vector<double> log_p_;
    int step_ = 1;
};

enum class DistributionPreset { superfluid_maximum, superfluid_minimum, delta };

/// Binomial(N, K/M) on {0..N} for the maximum, 2k - N with k ~ Binomial(N, 1/2)
/// on {-N..N step 2} for the minimum (requires K = M), or unit mass at
/// `delta_at` on the grid of `geometry`.
InitialDistribution initial_distribution(DistributionPreset preset, const LatticeConfig& cfg,
                                         Geometry geometry = Geometry::maximum, int delta_at = 0);

/// Reads a two-column "z p0" text file; `#` starts a comment.
/// The grid step is inferred from the data, or `default_step` for a single row.
InitialDistribution load_distribution(const std::filesystem::path& path, int default_step = 1);
void save_distribution(const InitialDistribution& d, const std::filesystem::path& path);

enum class AmplitudePreset { superfluid, mott };

/// Initial amplitudes c_q^0 over `basis` (as produced by enumerate_configurations).
/// superfluid: sqrt(N!/prod q_j!) / M^{N/2}; mott: unit amplitude on the
/// uniform filling (requires M | N).
std::vector<Complex> initial_amplitudes(AmplitudePreset preset, const LatticeConfig& cfg,
                                        std::span<const FockConfiguration> basis);

/// Grid of the measured variable for a geometry: {0..N} or {-N..N step 2}.
std::vector<int> geometry_grid(Geometry g, const LatticeConfig& cfg);

/// Sums configuration probabilities by the integer value of D10 onto `grid`.
/// Throws ConfigError if some D10 is not real, integral and on the grid.
std::vector<double> illuminated_marginal(std::span<const FockConfiguration> basis,
                                         std::span<const double> probabilities,
                                         const ModeProfile& modes, int illuminated,
                                         std::span<const int> grid);

}  // namespace qcollapse
