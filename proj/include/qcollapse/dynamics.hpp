#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qcollapse/lattice.hpp"

namespace qcollapse {

/// Physical constants of the probe, cavity and atom-light coupling.
///
/// All amplitudes live in the frame rotating at the probe frequency, so only
/// the detuning delta_p = omega_p - omega_1 appears; the optical frequencies
/// themselves never enter.
struct CavityParams {
    double kappa = 1.0;    ///< cavity decay rate
    double delta_p = 0.0;  ///< probe-cavity detuning
    double delta_a = -1.0; ///< cavity-atom detuning, must be non-zero
    double g0 = 1.0;       ///< probe-mode coupling
    double g1 = 1.0;       ///< cavity-mode coupling
    double a0 = 1.0;       ///< transverse probe amplitude
    double eta = 0.0;      ///< probe amplitude through the mirror
    Complex alpha0 = 0.0;  ///< cavity amplitude at t = 0
    /// When false the dispersive shift U11 D11 is dropped (U11 treated as 0).
    bool dispersive_shift = true;

    /// Throws ConfigError unless kappa >= 0, delta_a != 0 and U_lm finite.
    void validate() const;

    /// U_lm = g_l g_m / delta_a.
    double coupling(int l, int m) const;

    /// C = i U10 a0 / (i delta_p - kappa); alpha_z = C z in the reduced model.
    Complex reduced_coupling() const;
    /// C = U10 a0 / delta_p of the lossless (kappa = 0) model.
    double unitary_coupling() const;

    /// tau = 2 |C|^2 kappa t.
    double tau_per_time() const;
};

/// Cavity amplitude and phase exponent attached to one configuration.
struct ComponentSolution {
    Complex alpha;
    Complex phi;
};

/// Lorentzian steady amplitude (eta - i U10 a0 D10) / (i(U11 D11 - delta_p) + kappa).
/// Throws DomainError on an exact resonance (zero denominator).
Complex steady_amplitude(const CavityParams& p, Complex d10, Complex d11);

/// alpha_q(t) = A + (alpha0 - A) exp(-(kappa + i(U11 D11 - delta_p)) t), A the steady value.
Complex transient_amplitude(const CavityParams& p, Complex d10, Complex d11, double t);

/// Phi_q(t) = -|alpha|^2 kappa t + (X conj(alpha) - conj(X) alpha) t / 2, X = eta - i U10 a0 D10.
Complex phase_exponent_steady(const CavityParams& p, Complex d10, Complex alpha, double t);

enum class CrossCheck { off, on };

/// Phi_q(t) integrated exactly along transient_amplitude. With CrossCheck::on
/// the result is compared with adaptive quadrature and a ConsistencyError is
/// raised above 1e-10 relative deviation.
Complex phase_exponent_transient(const CavityParams& p, Complex d10, Complex d11, double t,
                                 CrossCheck check = CrossCheck::off);

/// Adaptive Gauss-Kronrod evaluation of the same integral.
Complex phase_exponent_quadrature(const CavityParams& p, Complex d10, Complex d11, double t);

/// C D10 (1 - exp(i delta_p t)); requires kappa = 0 parameters.
Complex unitary_amplitude(const CavityParams& p, Complex d10, double t);

/// -i delta_p |C D10|^2 t + i |C D10|^2 sin(delta_p t); purely imaginary.
Complex unitary_phase(const CavityParams& p, Complex d10, double t);

enum class Regime {
    steady,    ///< first count after ~1/kappa: prefactor alpha_q^m, linear phase
    transient  ///< exact solution with alpha_q(t_i) at each count time
};

/// Normalized conditional superposition over a configuration basis.
struct ConditionalState {
    std::vector<Complex> amplitudes;  ///< normalized weights of each configuration
    std::vector<ComponentSolution> components;
    double log_norm = 0.0;  ///< ln F(t) relative to the initial amplitudes
    double probability(std::size_t i) const { return std::norm(amplitudes[i]); }
};

/// Conditional state after counts at `jump_times` (non-decreasing, <= t).
/// Throws DomainError if every component is annihilated.
ConditionalState conditional_state(std::span<const FockConfiguration> basis,
                                   std::span<const Complex> initial, const ModeProfile& modes,
                                   int illuminated, const CavityParams& p,
                                   std::span<const double> jump_times, double t,
                                   Regime regime = Regime::steady);

/// Q(t) = |sum_N p0(N) exp(-i rate N^2 t)| with rate = delta_p C^2.
/// Phases are reduced modulo 2 pi exactly for integer N, so Q = 1 at
/// multiples of 2 pi / rate up to rounding of t itself.
double coherence_proxy(std::span<const int> nk, std::span<const double> p0, double rate, double t);
double coherence_proxy(const InitialDistribution& p0, const CavityParams& p, double t);

}  // namespace qcollapse
