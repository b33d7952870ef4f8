#include "qcollapse/dynamics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qcollapse/error.hpp"

namespace qcollapse {

namespace {

constexpr Complex I{0.0, 1.0};

// exp(w) - 1 without cancellation for small |w|.
Complex expm1(Complex w)
{
    const double s = std::sin(0.5 * w.imag());
    return {std::expm1(w.real()) * std::cos(w.imag()) - 2.0 * s * s, std::exp(w.real()) * std::sin(w.imag())};
}

// integral_0^t exp(-mu s) ds
Complex decay_integral(Complex mu, double t)
{
    if (mu == Complex{0.0, 0.0}) return t;
    return -expm1(-mu * t) / mu;
}

Complex drive(const CavityParams& p, Complex d10)
{
    return p.eta - I * p.coupling(1, 0) * p.a0 * d10;
}

Complex decay_rate(const CavityParams& p, Complex d11)
{
    return p.kappa + I * (p.coupling(1, 1) * d11 - p.delta_p);
}

void require_lossless(const CavityParams& p)
{
    if (p.kappa != 0.0 || p.eta != 0.0)
        throw ConfigError("unitary solution requires kappa = 0 and eta = 0");
}

}  // namespace

void CavityParams::validate() const
{
    const double values[] = {kappa, delta_p, delta_a, g0, g1, a0, eta, alpha0.real(), alpha0.imag()};
    if (!std::all_of(std::begin(values), std::end(values), [](double v) { return std::isfinite(v); }))
        throw ConfigError("cavity parameters must be finite");
    if (kappa < 0.0) throw ConfigError("kappa must be >= 0");
    if (delta_a == 0.0) throw ConfigError("delta_a must be non-zero");
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m)
            if (!std::isfinite(coupling(l, m))) throw ConfigError("U_lm is not finite");
}

double CavityParams::coupling(int l, int m) const
{
    if (l == 1 && m == 1 && !dispersive_shift) return 0.0;
    const double gl = l == 0 ? g0 : g1;
    const double gm = m == 0 ? g0 : g1;
    return gl * gm / delta_a;
}

Complex CavityParams::reduced_coupling() const
{
    const Complex denom = I * delta_p - kappa;
    if (denom == Complex{0.0, 0.0}) throw DomainError("C undefined: delta_p = kappa = 0");
    return I * coupling(1, 0) * a0 / denom;
}

double CavityParams::unitary_coupling() const
{
    if (delta_p == 0.0) throw DomainError("C = U10 a0 / delta_p undefined for delta_p = 0");
    return coupling(1, 0) * a0 / delta_p;
}

double CavityParams::tau_per_time() const
{
    return 2.0 * std::norm(reduced_coupling()) * kappa;
}

Complex steady_amplitude(const CavityParams& p, Complex d10, Complex d11)
{
    const Complex lambda = decay_rate(p, d11);
    if (lambda == Complex{0.0, 0.0})
        throw DomainError("resonance singularity: kappa = 0 and U11 D11 = delta_p");
    return drive(p, d10) / lambda;
}

Complex transient_amplitude(const CavityParams& p, Complex d10, Complex d11, double t)
{
    const Complex a = steady_amplitude(p, d10, d11);
    return a + (p.alpha0 - a) * std::exp(-decay_rate(p, d11) * t);
}

Complex phase_exponent_steady(const CavityParams& p, Complex d10, Complex alpha, double t)
{
    const Complex x = drive(p, d10) * std::conj(alpha);
    return -std::norm(alpha) * p.kappa * t + 0.5 * (x - std::conj(x)) * t;
}

Complex phase_exponent_transient(const CavityParams& p, Complex d10, Complex d11, double t,
                                 CrossCheck check)
{
    // alpha(s) = A + B e^{-lambda s}; every term of the integrand is an exponential in s.
    const Complex x = drive(p, d10);
    const Complex lambda = decay_rate(p, d11);
    const Complex a = steady_amplitude(p, d10, d11);
    const Complex b = p.alpha0 - a;
    const Complex e_lambda = decay_integral(lambda, t);
    const Complex e_lambda_c = std::conj(e_lambda);
    const Complex e_kappa = decay_integral(2.0 * p.kappa, t);

    const Complex xa = x * std::conj(a);
    const Complex xb = x * std::conj(b) * e_lambda_c;
    const Complex drive_part = 0.5 * ((xa - std::conj(xa)) * t + xb - std::conj(xb));
    const Complex ab = a * std::conj(b) * e_lambda_c;
    const double loss_part =
        p.kappa * (std::norm(a) * t + 2.0 * ab.real() + std::norm(b) * e_kappa.real());
    const Complex phi = drive_part - loss_part;

    if (check == CrossCheck::on && t > 0.0) {
        const Complex reference = phase_exponent_quadrature(p, d10, d11, t);
        const double scale = std::max(std::abs(reference), std::numeric_limits<double>::min());
        if (std::abs(phi - reference) > 1e-10 * scale) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "transient phase cross-check failed: analytic " << phi << " vs quadrature " << reference;
            throw ConsistencyError(msg.str());
        }
    }
    return phi;
}

Complex phase_exponent_quadrature(const CavityParams& p, Complex d10, Complex d11, double t)
{
    if (t <= 0.0) return 0.0;
    const Complex x = drive(p, d10);
    auto integrand = [&](double s) {
        const Complex alpha = transient_amplitude(p, d10, d11, s);
        const Complex xa = x * std::conj(alpha);
        return 0.5 * (xa - std::conj(xa)) - p.kappa * std::norm(alpha);
    };
    using boost::math::quadrature::gauss_kronrod;
    // Split into pieces no longer than a few oscillation/decay periods.
    const double rate = std::max(std::abs(decay_rate(p, d11)), 1e-300);
    const int pieces = static_cast<int>(std::clamp(std::ceil(t * rate / 4.0), 1.0, 4096.0));
    double re = 0.0;
    double im = 0.0;
    for (int k = 0; k < pieces; ++k) {
        const double lo = t * k / pieces;
        const double hi = t * (k + 1) / pieces;
        re += gauss_kronrod<double, 31>::integrate([&](double s) { return integrand(s).real(); }, lo, hi, 15, 1e-15);
        im += gauss_kronrod<double, 31>::integrate([&](double s) { return integrand(s).imag(); }, lo, hi, 15, 1e-15);
    }
    return {re, im};
}

Complex unitary_amplitude(const CavityParams& p, Complex d10, double t)
{
    require_lossless(p);
    return p.unitary_coupling() * d10 * -expm1(I * p.delta_p * t);
}

Complex unitary_phase(const CavityParams& p, Complex d10, double t)
{
    require_lossless(p);
    const double c = std::norm(p.unitary_coupling() * d10);
    return I * c * (std::sin(p.delta_p * t) - p.delta_p * t);
}

ConditionalState conditional_state(std::span<const FockConfiguration> basis,
                                   std::span<const Complex> initial, const ModeProfile& modes,
                                   int illuminated, const CavityParams& p,
                                   std::span<const double> jump_times, double t, Regime regime)
{
    if (basis.size() != initial.size()) throw ConfigError("basis and initial amplitudes differ in length");
    if (t < 0.0) throw ConfigError("time must be >= 0");
    for (std::size_t i = 0; i < jump_times.size(); ++i) {
        if (jump_times[i] < 0.0 || jump_times[i] > t || (i > 0 && jump_times[i] < jump_times[i - 1]))
            throw ConfigError("jump times must satisfy 0 <= t1 <= ... <= tm <= t");
    }
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    const double m = static_cast<double>(jump_times.size());

    ConditionalState out;
    out.components.resize(basis.size());
    std::vector<Complex> log_w(basis.size(), Complex{neg_inf, 0.0});
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const Complex d10 = coupling_coefficient(basis[i], modes, 1, 0, illuminated);
        const Complex d11 = coupling_coefficient(basis[i], modes, 1, 1, illuminated);
        ComponentSolution& sol = out.components[i];
        bool dark = false;
        Complex jumps = 0.0;
        if (regime == Regime::steady) {
            sol.alpha = steady_amplitude(p, d10, d11);
            sol.phi = phase_exponent_steady(p, d10, sol.alpha, t);
            if (m > 0 && sol.alpha == Complex{0.0, 0.0}) dark = true;
            else if (m > 0) jumps = m * std::log(sol.alpha);
        } else {
            sol.alpha = transient_amplitude(p, d10, d11, t);
            sol.phi = phase_exponent_transient(p, d10, d11, t);
            for (double ti : jump_times) {
                const Complex a = transient_amplitude(p, d10, d11, ti);
                if (a == Complex{0.0, 0.0}) {
                    dark = true;
                    break;
                }
                jumps += std::log(a);
            }
        }
        if (dark || initial[i] == Complex{0.0, 0.0}) continue;
        log_w[i] = std::log(initial[i]) + jumps + sol.phi;
    }
    double top = neg_inf;
    for (const auto& lw : log_w) top = std::max(top, lw.real());
    if (!std::isfinite(top)) throw DomainError("all components annihilated: conditional state undefined");
    out.amplitudes.resize(basis.size());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        out.amplitudes[i] = std::isfinite(log_w[i].real()) ? std::exp(log_w[i] - top) : 0.0;
        norm2 += std::norm(out.amplitudes[i]);
    }
    const double norm = std::sqrt(norm2);
    for (auto& a : out.amplitudes) a /= norm;
    out.log_norm = top + std::log(norm);
    return out;
}

double coherence_proxy(std::span<const int> nk, std::span<const double> p0, double rate, double t)
{
    if (nk.size() != p0.size()) throw ConfigError("coherence proxy: grid and probabilities differ in length");
    const double turns_per_n2 = rate * t / (2.0 * std::numbers::pi);
    Complex sum = 0.0;
    for (std::size_t i = 0; i < nk.size(); ++i) {
        const double n2 = static_cast<double>(nk[i]) * nk[i];
        double turns = n2 * turns_per_n2;
        turns -= std::floor(turns);
        sum += p0[i] * std::polar(1.0, -2.0 * std::numbers::pi * turns);
    }
    return std::min(1.0, std::abs(sum));
}

double coherence_proxy(const InitialDistribution& p0, const CavityParams& p, double t)
{
    const double c = p.unitary_coupling();
    return coherence_proxy(p0.z(), p0.p(), p.delta_p * c * c, t);
}

}  // namespace qcollapse
