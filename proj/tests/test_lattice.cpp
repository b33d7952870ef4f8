#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "qcollapse/error.hpp"
#include "qcollapse/lattice.hpp"

using namespace qcollapse;

namespace {

std::vector<std::vector<int>> occupations(const std::vector<FockConfiguration>& basis)
{
    std::vector<std::vector<int>> out;
    for (const auto& c : basis) out.push_back(c.q);
    return out;
}

// Binomial pmf by repeated multiplication, independent of the lgamma path.
double binomial_pmf(int n, int k, double p)
{
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("qcollapse_test_" + name);
}

}  // namespace

TEST_CASE("lattice config rejects invalid shapes")
{
    CHECK_NOTHROW(LatticeConfig(3, 1, 4));
    CHECK_THROWS_AS(LatticeConfig(0, 0, 1), ConfigError);
    CHECK_THROWS_AS(LatticeConfig(3, 0, 1), ConfigError);
    CHECK_THROWS_AS(LatticeConfig(3, 4, 1), ConfigError);
    CHECK_THROWS_AS(LatticeConfig(3, 2, 0), ConfigError);
}

TEST_CASE("enumerate_configurations lists compositions in lexicographic order")
{
    CHECK(occupations(enumerate_configurations(LatticeConfig(2, 2, 2))) ==
          std::vector<std::vector<int>>{{0, 2}, {1, 1}, {2, 0}});
    CHECK(occupations(enumerate_configurations(LatticeConfig(3, 3, 1))) ==
          std::vector<std::vector<int>>{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
    CHECK(enumerate_configurations(LatticeConfig(2, 2, 4)).size() == 5);

    SUBCASE("count matches the stars-and-bars formula and every entry is distinct")
    {
        for (int n = 1; n <= 6; ++n) {
            for (int m = 1; m <= 4; ++m) {
                const auto basis = enumerate_configurations(LatticeConfig(m, m, n));
                // C(n + m - 1, m - 1)
                double expected = 1.0;
                for (int i = 1; i < m; ++i) expected = expected * (n + i) / i;
                CHECK(basis.size() == static_cast<std::size_t>(std::lround(expected)));
                CHECK(basis.size() == basis_size(LatticeConfig(m, m, n)));
                for (std::size_t i = 0; i < basis.size(); ++i) {
                    CHECK(basis[i].total() == n);
                    CHECK(std::all_of(basis[i].q.begin(), basis[i].q.end(), [](int v) { return v >= 0; }));
                    if (i > 0) CHECK(basis[i - 1].q < basis[i].q);
                }
            }
        }
    }

    SUBCASE("cap")
    {
        CHECK_THROWS_WITH_AS(enumerate_configurations(LatticeConfig(2, 2, 4), 4), "basis too large for full engine",
                             ConfigError);
        CHECK_THROWS_AS(enumerate_configurations(LatticeConfig(100, 100, 100)), ConfigError);
        CHECK(basis_size(LatticeConfig(100, 100, 100)) > default_basis_cap);
    }
}

TEST_CASE("coupling coefficients")
{
    const ModeProfile maxp = ModeProfile::diffraction_maximum(2);
    CHECK(coupling_coefficient(FockConfiguration{{2, 3}}, maxp, 1, 0, 2) == Complex(5.0, 0.0));

    const ModeProfile minp = ModeProfile::diffraction_minimum(4);
    CHECK(coupling_coefficient(FockConfiguration{{1, 2, 1, 2}}, minp, 1, 0, 4) == Complex(-2.0, 0.0));
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::conj(minp.u0()[j]) * minp.u1()[j] == Complex(j % 2 == 0 ? 1.0 : -1.0, 0.0));

    const ModeProfile custom = ModeProfile::custom({{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {1.0, 0.0}});
    CHECK(coupling_coefficient(FockConfiguration{{1, 1}}, custom, 1, 0, 2) == Complex(1.0, 1.0));
    CHECK(custom.preset() == ModeProfile::Preset::custom);
    CHECK_THROWS_AS(ModeProfile::custom({{1.0, 0.0}}, {{1.0, 0.0}, {1.0, 0.0}}), ConfigError);
    CHECK_THROWS_AS(coupling_coefficient(FockConfiguration{{1, 1, 1}}, custom, 1, 0, 2), ConfigError);

    SUBCASE("maximum preset: D10 is the illuminated atom number N_K")
    {
        const LatticeConfig cfg(4, 2, 5);
        const ModeProfile modes = ModeProfile::diffraction_maximum(4);
        for (const auto& q : enumerate_configurations(cfg))
            CHECK(coupling_coefficient(q, modes, 1, 0, 2).real() == q.q[0] + q.q[1]);
    }

    SUBCASE("minimum preset: D10 is the odd-even difference with the parity of N")
    {
        for (int n = 1; n <= 5; ++n) {
            const LatticeConfig cfg(4, 4, n);
            const ModeProfile modes = ModeProfile::diffraction_minimum(4);
            for (const auto& q : enumerate_configurations(cfg)) {
                const Complex d = coupling_coefficient(q, modes, 1, 0, 4);
                CHECK(d.imag() == 0.0);
                CHECK(d.real() == (q.q[0] + q.q[2]) - (q.q[1] + q.q[3]));
                CHECK((static_cast<int>(d.real()) - n) % 2 == 0);
            }
        }
    }
}

TEST_CASE("initial distributions")
{
    SUBCASE("superfluid minimum, N=2")
    {
        const auto d = initial_distribution(DistributionPreset::superfluid_minimum, LatticeConfig(2, 2, 2),
                                            Geometry::minimum);
        CHECK(std::vector<int>(d.z().begin(), d.z().end()) == std::vector<int>{-2, 0, 2});
        CHECK(d.p()[0] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(d.p()[1] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(d.p()[2] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(d.step() == 2);
    }
    SUBCASE("superfluid maximum with K = M is a delta at N")
    {
        const auto d = initial_distribution(DistributionPreset::superfluid_maximum, LatticeConfig(100, 100, 100));
        CHECK(d.z().back() == 100);
        CHECK(d.p().back() == 1.0);
        CHECK(d.variance() == 0.0);
    }
    SUBCASE("superfluid minimum, N=100 has variance N")
    {
        const auto d = initial_distribution(DistributionPreset::superfluid_minimum, LatticeConfig(100, 100, 100),
                                            Geometry::minimum);
        CHECK(d.variance() == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(std::abs(d.mean()) < 1e-12);
    }
    SUBCASE("superfluid maximum matches Binomial(N, K/M)")
    {
        const LatticeConfig cfg(7, 3, 9);
        const auto d = initial_distribution(DistributionPreset::superfluid_maximum, cfg);
        REQUIRE(d.size() == 10);
        for (int k = 0; k <= 9; ++k) CHECK(d.p()[k] == doctest::Approx(binomial_pmf(9, k, 3.0 / 7.0)).epsilon(1e-12));
    }
    SUBCASE("delta")
    {
        const auto d = initial_distribution(DistributionPreset::delta, LatticeConfig(4, 2, 6), Geometry::maximum, 3);
        CHECK(d.p()[3] == 1.0);
        CHECK(d.mean() == 3.0);
        CHECK_THROWS_AS(initial_distribution(DistributionPreset::delta, LatticeConfig(4, 2, 6), Geometry::maximum, 7),
                        ConfigError);
        CHECK_THROWS_AS(initial_distribution(DistributionPreset::delta, LatticeConfig(4, 4, 6), Geometry::minimum, 1),
                        ConfigError);
    }
    SUBCASE("minimum geometry needs K = M")
    {
        CHECK_THROWS_AS(initial_distribution(DistributionPreset::superfluid_minimum, LatticeConfig(4, 2, 4),
                                             Geometry::minimum),
                        ConfigError);
    }
    SUBCASE("validation of custom distributions")
    {
        CHECK_THROWS_AS(InitialDistribution({0, 1}, {0.5, 0.6}, 1), ConfigError);
        CHECK_THROWS_AS(InitialDistribution({0, 1}, {1.5, -0.5}, 1), ConfigError);
        CHECK_THROWS_AS(InitialDistribution({0, 2, 3}, {0.5, 0.25, 0.25}, 1), ConfigError);
        CHECK_NOTHROW(InitialDistribution({0, 1}, {0.5, 0.5 + 5e-13}, 1));
        const auto d = InitialDistribution::from_log({1, 2}, {-1000.0, -1000.0 + std::log(3.0)}, 1);
        CHECK(d.p()[0] == doctest::Approx(0.25).epsilon(1e-14));
        // -1000 + ln 3 is itself only accurate to about one ulp of 1000
        CHECK(std::abs(d.log_p()[1] - std::log(0.75)) < 4e-13);
    }
}

TEST_CASE("distribution files round-trip")
{
    const auto path = temp_file("dist.txt");
    const auto d = initial_distribution(DistributionPreset::superfluid_minimum, LatticeConfig(6, 6, 6),
                                        Geometry::minimum);
    save_distribution(d, path);
    const auto back = load_distribution(path);
    CHECK(back.step() == 2);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.z()[i] == d.z()[i]);
        CHECK(back.p()[i] == d.p()[i]);
    }

    {
        std::ofstream out(path);
        out << "# a comment\n  3 0.25 # trailing\n\n4 0.75\n";
    }
    const auto custom = load_distribution(path);
    CHECK(custom.z()[0] == 3);
    CHECK(custom.p()[1] == 0.75);

    {
        std::ofstream out(path);
        out << "3 0.25\n4 banana\n";
    }
    CHECK_THROWS_AS(load_distribution(path), ConfigError);
    {
        std::ofstream out(path);
        out << "3 0.25\n4 0.70\n";
    }
    CHECK_THROWS_AS(load_distribution(path), ConfigError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_distribution(path), IoError);
}

TEST_CASE("initial amplitudes")
{
    SUBCASE("superfluid, N=2, M=2")
    {
        const LatticeConfig cfg(2, 2, 2);
        const auto basis = enumerate_configurations(cfg);
        const auto c = initial_amplitudes(AmplitudePreset::superfluid, cfg, basis);
        CHECK(c[0].real() == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(c[1].real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
        CHECK(c[2].real() == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("mott, N=4, M=2")
    {
        const LatticeConfig cfg(2, 2, 4);
        const auto basis = enumerate_configurations(cfg);
        const auto c = initial_amplitudes(AmplitudePreset::mott, cfg, basis);
        for (std::size_t i = 0; i < basis.size(); ++i)
            CHECK(std::norm(c[i]) == (basis[i].q == std::vector<int>{2, 2} ? 1.0 : 0.0));
        CHECK_THROWS_AS(initial_amplitudes(AmplitudePreset::mott, LatticeConfig(3, 3, 4),
                                           enumerate_configurations(LatticeConfig(3, 3, 4))),
                        ConfigError);
    }
    SUBCASE("normalization for every preset and shape")
    {
        for (int n = 1; n <= 6; ++n) {
            for (int m = 1; m <= 4; ++m) {
                const LatticeConfig cfg(m, m, n);
                const auto basis = enumerate_configurations(cfg);
                double total = 0.0;
                for (const auto& a : initial_amplitudes(AmplitudePreset::superfluid, cfg, basis)) total += std::norm(a);
                CHECK(std::abs(total - 1.0) < 1e-12);
            }
        }
    }
    SUBCASE("superfluid marginal over N_K reproduces Binomial(N, K/M)")
    {
        const LatticeConfig cfg(5, 2, 6);
        const auto basis = enumerate_configurations(cfg);
        const auto c = initial_amplitudes(AmplitudePreset::superfluid, cfg, basis);
        std::vector<double> probs;
        for (const auto& a : c) probs.push_back(std::norm(a));
        const auto grid = geometry_grid(Geometry::maximum, cfg);
        const auto marginal = illuminated_marginal(basis, probs, ModeProfile::diffraction_maximum(5), 2, grid);
        const auto preset = initial_distribution(DistributionPreset::superfluid_maximum, cfg);
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(marginal[i] - preset.p()[i]) < 1e-14);
    }
}

TEST_CASE("geometry names")
{
    CHECK(parse_geometry("minimum") == Geometry::minimum);
    CHECK(parse_geometry(to_string(Geometry::maximum)) == Geometry::maximum);
    CHECK_THROWS_AS(parse_geometry("sideways"), ConfigError);
    CHECK(geometry_grid(Geometry::minimum, LatticeConfig(3, 3, 3)) == std::vector<int>{-3, -1, 1, 3});
}
