#include "qcollapse/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "qcollapse/error.hpp"

namespace qcollapse {

namespace {

constexpr double normalization_tolerance = 1e-12;
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_binomial_pmf(int n, int k, double p)
{
    if (p == 0.0) return k == 0 ? 0.0 : neg_inf;
    if (p == 1.0) return k == n ? 0.0 : neg_inf;
    // Grouped so that k and n - k give bit-identical results when p = 1/2.
    return std::lgamma(n + 1.0) - (std::lgamma(k + 1.0) + std::lgamma(n - k + 1.0)) +
           (k * std::log(p) + (n - k) * std::log1p(-p));
}

void enumerate_into(int remaining, std::size_t site, std::vector<int>& current,
                    std::vector<FockConfiguration>& out)
{
    if (site + 1 == current.size()) {
        current[site] = remaining;
        out.push_back(FockConfiguration{current});
        return;
    }
    for (int n = 0; n <= remaining; ++n) {
        current[site] = n;
        enumerate_into(remaining - n, site + 1, current, out);
    }
}

}  // namespace

LatticeConfig::LatticeConfig(int sites, int illuminated, int atoms)
    : sites_(sites), illuminated_(illuminated), atoms_(atoms)
{
    if (sites < 1) throw ConfigError("M (site count) must be >= 1, got " + std::to_string(sites));
    if (illuminated < 1 || illuminated > sites)
        throw ConfigError("K (illuminated sites) must satisfy 1 <= K <= M, got K=" +
                          std::to_string(illuminated) + ", M=" + std::to_string(sites));
    if (atoms < 1) throw ConfigError("N (atom number) must be >= 1, got " + std::to_string(atoms));
}

std::string to_string(Geometry g)
{
    return g == Geometry::maximum ? "maximum" : "minimum";
}

Geometry parse_geometry(const std::string& name)
{
    if (name == "maximum") return Geometry::maximum;
    if (name == "minimum") return Geometry::minimum;
    throw ConfigError("unknown geometry '" + name + "' (expected maximum | minimum)");
}

ModeProfile::ModeProfile(Preset p, std::vector<Complex> u0, std::vector<Complex> u1)
    : preset_(p), u0_(std::move(u0)), u1_(std::move(u1))
{
}

ModeProfile ModeProfile::diffraction_maximum(int sites)
{
    return ModeProfile(Preset::diffraction_maximum, std::vector<Complex>(sites, 1.0),
                       std::vector<Complex>(sites, 1.0));
}

ModeProfile ModeProfile::diffraction_minimum(int sites)
{
    std::vector<Complex> u1(sites);
    // site j = 1 (index 0) gets +1
    for (int j = 0; j < sites; ++j) u1[j] = (j % 2 == 0) ? 1.0 : -1.0;
    return ModeProfile(Preset::diffraction_minimum, std::vector<Complex>(sites, 1.0), std::move(u1));
}

ModeProfile ModeProfile::custom(std::vector<Complex> u0, std::vector<Complex> u1)
{
    if (u0.size() != u1.size() || u0.empty())
        throw ConfigError("custom mode profile needs u0 and u1 of equal non-zero length");
    return ModeProfile(Preset::custom, std::move(u0), std::move(u1));
}

ModeProfile ModeProfile::for_geometry(Geometry g, int sites)
{
    return g == Geometry::maximum ? diffraction_maximum(sites) : diffraction_minimum(sites);
}

int FockConfiguration::total() const noexcept
{
    return std::accumulate(q.begin(), q.end(), 0);
}

std::size_t basis_size(const LatticeConfig& cfg) noexcept
{
    // C(N+M-1, M-1) computed incrementally; each partial product is itself a binomial.
    const std::size_t n = static_cast<std::size_t>(cfg.atoms()) + cfg.sites() - 1;
    const std::size_t k = std::min<std::size_t>(cfg.sites() - 1, cfg.atoms());
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::size_t factor = n - k + i;
        if (result > std::numeric_limits<std::size_t>::max() / factor)
            return std::numeric_limits<std::size_t>::max();
        result = result * factor / i;
    }
    return result;
}

std::vector<FockConfiguration> enumerate_configurations(const LatticeConfig& cfg, std::size_t cap)
{
    const std::size_t count = basis_size(cfg);
    if (count > cap) throw ConfigError("basis too large for full engine");
    std::vector<FockConfiguration> out;
    out.reserve(count);
    std::vector<int> current(cfg.sites(), 0);
    enumerate_into(cfg.atoms(), 0, current, out);
    return out;
}

Complex coupling_coefficient(const FockConfiguration& q, const ModeProfile& modes, int l, int m,
                             int illuminated)
{
    if ((l != 0 && l != 1) || (m != 0 && m != 1))
        throw ConfigError("mode indices l, m must be 0 or 1");
    if (static_cast<int>(q.q.size()) != modes.sites() || illuminated < 1 ||
        illuminated > modes.sites())
        throw ConfigError("configuration, mode profile and K have inconsistent shapes");
    const auto ul = l == 0 ? modes.u0() : modes.u1();
    const auto um = m == 0 ? modes.u0() : modes.u1();
    Complex sum = 0.0;
    for (int j = 0; j < illuminated; ++j) sum += std::conj(ul[j]) * um[j] * static_cast<double>(q.q[j]);
    return sum;
}

InitialDistribution::InitialDistribution(std::vector<int> z, std::vector<double> p, int step)
    : z_(std::move(z)), p_(std::move(p)), step_(step)
{
    if (z_.empty() || z_.size() != p_.size())
        throw ConfigError("distribution needs matching non-empty z and p columns");
    if (step_ < 1) throw ConfigError("distribution grid step must be positive");
    for (std::size_t i = 1; i < z_.size(); ++i)
        if (z_[i] - z_[i - 1] != step_)
            throw ConfigError("distribution grid is not uniform with step " + std::to_string(step_));
    double total = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("distribution has a negative or non-finite probability");
        total += v;
    }
    if (std::abs(total - 1.0) > normalization_tolerance) {
        std::ostringstream msg;
        msg << std::setprecision(17) << "distribution is not normalized: sum p0 = " << total;
        throw ConfigError(msg.str());
    }
    log_p_.resize(p_.size());
    std::transform(p_.begin(), p_.end(), log_p_.begin(),
                   [](double v) { return v > 0.0 ? std::log(v) : neg_inf; });
}

InitialDistribution InitialDistribution::from_log(std::vector<int> z, std::vector<double> log_p,
                                                  int step)
{
    if (z.empty() || z.size() != log_p.size())
        throw ConfigError("distribution needs matching non-empty z and log p columns");
    const double top = *std::max_element(log_p.begin(), log_p.end());
    if (!std::isfinite(top)) throw ConfigError("distribution has no finite log-weight");
    double total = 0.0;
    for (double v : log_p) total += std::exp(v - top);
    const double log_total = std::log(total);
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        log_p[i] = (log_p[i] - top) - log_total;
        p[i] = std::exp(log_p[i]);
    }
    InitialDistribution d(std::move(z), std::move(p), step);
    d.log_p_ = std::move(log_p);
    return d;
}

double InitialDistribution::mean() const noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) s += p_[i] * z_[i];
    return s;
}

double InitialDistribution::variance() const noexcept
{
    const double mu = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) s += p_[i] * (z_[i] - mu) * (z_[i] - mu);
    return s;
}

std::vector<int> geometry_grid(Geometry g, const LatticeConfig& cfg)
{
    std::vector<int> grid;
    const int n = cfg.atoms();
    if (g == Geometry::maximum) {
        for (int z = 0; z <= n; ++z) grid.push_back(z);
    } else {
        for (int z = -n; z <= n; z += 2) grid.push_back(z);
    }
    return grid;
}

InitialDistribution initial_distribution(DistributionPreset preset, const LatticeConfig& cfg,
                                         Geometry geometry, int delta_at)
{
    const int n = cfg.atoms();
    switch (preset) {
    case DistributionPreset::superfluid_maximum: {
        const double frac = static_cast<double>(cfg.illuminated()) / cfg.sites();
        std::vector<double> log_p(n + 1);
        for (int k = 0; k <= n; ++k) log_p[k] = log_binomial_pmf(n, k, frac);
        return InitialDistribution::from_log(geometry_grid(Geometry::maximum, cfg), std::move(log_p), 1);
    }
    case DistributionPreset::superfluid_minimum: {
        if (cfg.illuminated() != cfg.sites())
            throw ConfigError("superfluid-min requires K = M (diffraction minimum illuminates every site)");
        std::vector<double> log_p(n + 1);
        for (int k = 0; k <= n; ++k) log_p[k] = log_binomial_pmf(n, k, 0.5);
        return InitialDistribution::from_log(geometry_grid(Geometry::minimum, cfg), std::move(log_p), 2);
    }
    case DistributionPreset::delta: {
        auto grid = geometry_grid(geometry, cfg);
        const auto it = std::find(grid.begin(), grid.end(), delta_at);
        if (it == grid.end())
            throw ConfigError("delta position z*=" + std::to_string(delta_at) + " is not on the " +
                              to_string(geometry) + " grid for N=" + std::to_string(n));
        std::vector<double> p(grid.size(), 0.0);
        p[static_cast<std::size_t>(it - grid.begin())] = 1.0;
        return InitialDistribution(std::move(grid), std::move(p), grid_step(geometry));
    }
    }
    throw ConfigError("unknown distribution preset");
}

InitialDistribution load_distribution(const std::filesystem::path& path, int default_step)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open distribution file " + path.string());
    std::vector<int> z;
    std::vector<double> p;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double zv = 0.0;
        double pv = 0.0;
        if (!(fields >> zv)) continue;
        std::string extra;
        if (!(fields >> pv) || (fields >> extra))
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected two columns 'z p0'");
        if (zv != std::round(zv))
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": z must be an integer");
        z.push_back(static_cast<int>(zv));
        p.push_back(pv);
    }
    if (z.empty()) throw ConfigError(path.string() + ": no data rows");
    const int step = z.size() > 1 ? z[1] - z[0] : default_step;
    return InitialDistribution(std::move(z), std::move(p), step);
}

void save_distribution(const InitialDistribution& d, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write distribution file " + path.string());
    out << "# z p0\n" << std::setprecision(17);
    for (std::size_t i = 0; i < d.size(); ++i) out << d.z()[i] << ' ' << d.p()[i] << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Complex> initial_amplitudes(AmplitudePreset preset, const LatticeConfig& cfg,
                                        std::span<const FockConfiguration> basis)
{
    std::vector<Complex> c(basis.size(), 0.0);
    const int n = cfg.atoms();
    const int m = cfg.sites();
    if (preset == AmplitudePreset::mott) {
        if (n % m != 0)
            throw ConfigError("mott state requires N divisible by M (N=" + std::to_string(n) +
                              ", M=" + std::to_string(m) + ")");
        const FockConfiguration uniform{std::vector<int>(m, n / m)};
        const auto it = std::find(basis.begin(), basis.end(), uniform);
        if (it == basis.end()) throw ConfigError("basis does not contain the uniform configuration");
        c[static_cast<std::size_t>(it - basis.begin())] = 1.0;
        return c;
    }
    // |c_q|^2 = multinomial(N; q) / M^N
    const double log_norm = std::lgamma(n + 1.0) - n * std::log(static_cast<double>(m));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (basis[i].total() != n || static_cast<int>(basis[i].q.size()) != m)
            throw ConfigError("basis configuration inconsistent with lattice");
        double log_w = log_norm;
        for (int qj : basis[i].q) log_w -= std::lgamma(qj + 1.0);
        c[i] = std::exp(0.5 * log_w);
    }
    return c;
}

std::vector<double> illuminated_marginal(std::span<const FockConfiguration> basis,
                                         std::span<const double> probabilities,
                                         const ModeProfile& modes, int illuminated,
                                         std::span<const int> grid)
{
    if (basis.size() != probabilities.size())
        throw ConfigError("basis and probability vectors differ in length");
    std::vector<double> marginal(grid.size(), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const Complex d10 = coupling_coefficient(basis[i], modes, 1, 0, illuminated);
        const double zr = std::round(d10.real());
        if (std::abs(d10.imag()) > 1e-9 || std::abs(d10.real() - zr) > 1e-9)
            throw ConfigError("D10 is not an integer; marginal over z undefined for this mode profile");
        const auto it = std::find(grid.begin(), grid.end(), static_cast<int>(zr));
        if (it == grid.end()) throw ConfigError("D10 = " + std::to_string(static_cast<int>(zr)) + " is off the z grid");
        marginal[static_cast<std::size_t>(it - grid.begin())] += probabilities[i];
    }
    return marginal;
}

}  // namespace qcollapse
