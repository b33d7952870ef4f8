#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qcollapse/cli.hpp"
#include "qcollapse/error.hpp"
#include "qcollapse/stats.hpp"

namespace qcollapse::cli {

namespace {

namespace fs = std::filesystem;

class CsvWriter {
public:
    explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary)
    {
        if (!out_) throw IoError("cannot write " + path.string());
    }

    template <class... Cols>
    void row(const Cols&... cols)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cols), first = false), ...);
        out_ << '\n';
    }

    void close()
    {
        out_.close();
        if (!out_) throw IoError("write failed: " + path_.string());
    }

private:
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    template <class T>
        requires std::is_integral_v<T>
    static std::string cell(T v)
    {
        return std::to_string(v);
    }

    fs::path path_;
    std::ofstream out_;
};

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw IoError("write failed: " + path.string());
}

FullEngineSetup full_setup(const RunConfig& cfg)
{
    AmplitudePreset preset;
    if (cfg.initial == "superfluid") preset = AmplitudePreset::superfluid;
    else if (cfg.initial == "mott") preset = AmplitudePreset::mott;
    else throw ConfigError("field 'run.initial': the full engine supports superfluid | mott only");
    CavityParams params;
    if (cfg.physical) {
        params = *cfg.physical;
    } else {
        // Steady-regime defaults for which alpha_q = C D10 exactly.
        params.kappa = 1.0;
        params.delta_p = 1.0;
        params.delta_a = -10.0;
        params.dispersive_shift = false;
    }
    return FullEngineSetup{cfg.lattice(), cfg.geometry, preset, params, cfg.regime};
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec, const std::optional<CavityParams>& phys)
{
    const double tau_per_time = phys ? phys->tau_per_time() : 0.0;
    CsvWriter csv(path);
    if (phys) csv.row("tau", "m", "mean_z", "mean_abs_z", "var_z", "var_abs_z", "width_abs", "is_jump_interval", "t");
    else csv.row("tau", "m", "mean_z", "mean_abs_z", "var_z", "var_abs_z", "width_abs", "is_jump_interval");
    for (const auto& s : rec.samples) {
        const int jump = s.jump_in_interval ? 1 : 0;
        const double width = std::sqrt(s.var_abs_z);
        if (phys) csv.row(s.tau, s.m, s.mean_z, s.mean_abs_z, s.var_z, s.var_abs_z, width, jump, s.tau / tau_per_time);
        else csv.row(s.tau, s.m, s.mean_z, s.mean_abs_z, s.var_z, s.var_abs_z, width, jump);
    }
    csv.close();
}

constexpr const char* plot_script = R"(# Width of the atom-number distribution against scaled time tau.
# Left column linear, right column logarithmic. Run: gnuplot fig1.gp
set datafile separator ','
if (strstrt(GPVAL_TERMINALS, 'pngcairo') > 0) { set terminal pngcairo size 1200,900; set output 'fig1.png' }
set multiplot layout 2,2
set xlabel 'tau'
set ylabel 'width of |z| (atoms)'
set title '(a) trajectory without jumps'
plot 'trajectory_nojump.csv' using 1:7 every ::1 with lines notitle
set logscale y
plot 'trajectory_nojump.csv' using 1:7 every ::1 with lines notitle
unset logscale y
set title '(b) trajectory with jumps'
plot 'trajectory.csv' using 1:7 every ::1 with lines notitle
set logscale y
plot 'trajectory.csv' using 1:7 every ::1 with lines notitle
unset multiplot
)";

std::string describe_regimes(const std::string& label, const TrajectoryRecord& rec)
{
    std::ostringstream s;
    s << label << ":\n";
    s << "  counts: " << rec.jumps.size() << "\n";
    if (!rec.samples.empty()) {
        const auto& last = rec.samples.back();
        s << "  final tau " << format_double(last.tau) << ", var_abs_z " << format_double(last.var_abs_z)
          << ", mean_abs_z " << format_double(last.mean_abs_z) << "\n";
    }
    if (const auto w = sqrt_law_window(rec, 0.15)) {
        s << "  sqrt-law window (width*sqrt(tau) within 15%): tau " << format_double(w->tau_lo) << " .. "
          << format_double(w->tau_hi) << " (" << format_double(w->decades()) << " decades), width*sqrt(tau) = "
          << format_double(w->mean_scaled_width) << "\n";
    } else {
        s << "  sqrt-law window: none\n";
    }
    try {
        const RegimeFits f = fit_regimes(rec);
        s << "  sqrt regime: d ln(width)/d ln(tau) = " << format_double(f.sqrt_regime.slope)
          << ", R^2 = " << format_double(f.sqrt_regime.r2) << "\n";
        s << "  exponential regime: d ln(var)/d tau = " << format_double(f.exponential_regime.slope)
          << ", R^2 = " << format_double(f.exponential_regime.r2) << ", tau " << format_double(f.exponential_regime.tau_lo)
          << " .. " << format_double(f.exponential_regime.tau_hi) << "\n";
    } catch (const DomainError& e) {
        s << "  regimes: " << e.what() << "\n";
    }
    return s.str();
}

}  // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

int cmd_trajectory(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.n_traj > 1) throw ConfigError("field 'run.n_traj': trajectory runs one trajectory; use the ensemble subcommand");
    ensure_dir(cfg.output_dir);

    TrajectoryOptions opt;
    opt.tau_max = cfg.tau_max;
    opt.record_interval = cfg.record_interval;
    opt.seed = cfg.seed;

    TrajectoryRecord with_jumps;
    TrajectoryRecord no_jumps;
    std::optional<CavityParams> phys = cfg.physical;
    if (cfg.engine == Engine::reduced) {
        const InitialDistribution init = resolve_initial(cfg);
        with_jumps = run_trajectory(init, opt);
        opt.jumps = JumpMode::suppressed;
        no_jumps = run_trajectory(init, opt);
    } else {
        const FullEngineSetup setup = full_setup(cfg);
        phys = setup.params;
        with_jumps = run_full_oracle(setup, opt);
        opt.jumps = JumpMode::suppressed;
        no_jumps = run_full_oracle(setup, opt);
    }

    write_trajectory_csv(cfg.output_dir / "trajectory.csv", with_jumps, phys);
    write_trajectory_csv(cfg.output_dir / "trajectory_nojump.csv", no_jumps, phys);
    CsvWriter events(cfg.output_dir / "events.csv");
    events.row("jump_index", "tau_jump");
    for (std::size_t i = 0; i < with_jumps.jumps.size(); ++i) events.row(i, with_jumps.jumps[i]);
    events.close();
    write_text(cfg.output_dir / "fig1.gp", plot_script);

    const std::string summary =
        describe_regimes("trajectory with jumps (seed " + std::to_string(cfg.seed) + ")", with_jumps) +
        describe_regimes("trajectory without jumps", no_jumps);
    write_text(cfg.output_dir / "summary.txt", summary);
    log << summary;
    return 0;
}

int cmd_ensemble(const RunConfig& cfg, unsigned workers, std::ostream& log)
{
    if (cfg.n_traj < 2) throw ConfigError("field 'run.n_traj': ensemble needs n_traj >= 2");
    if (cfg.engine != Engine::reduced) throw ConfigError("field 'run.engine': ensembles use the reduced engine");
    ensure_dir(cfg.output_dir);
    const InitialDistribution init = resolve_initial(cfg);
    EnsembleOptions opt;
    opt.tau_max = cfg.tau_max;
    opt.record_interval = cfg.record_interval;
    opt.n_traj = cfg.n_traj;
    opt.base_seed = cfg.seed;
    opt.workers = workers;
    const EnsembleSummary ens = run_ensemble(init, opt);

    CsvWriter csv(cfg.output_dir / "ensemble.csv");
    csv.row("tau", "mean_m", "mean_z", "var_z", "mean_abs_z", "var_abs_z", "avg_cond_var_z", "avg_cond_var_abs_z",
            "max_dev_from_p0_in_se");
    double worst_final = 0.0;
    for (std::size_t k = 0; k < ens.taus.size(); ++k) {
        const Moments mo = moments(ens.z_grid, ens.mean_distribution[k]);
        double worst = 0.0;
        for (std::size_t j = 0; j < ens.z_grid.size(); ++j) {
            const double dev = std::abs(ens.mean_distribution[k][j] - init.p()[j]);
            const double se = ens.standard_error[k][j];
            worst = std::max(worst, se > 0.0 ? dev / se : (dev > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0));
        }
        worst_final = worst;
        csv.row(ens.taus[k], ens.mean_count[k], mo.mean_z, mo.var_z, mo.mean_abs_z, mo.var_abs_z,
                ens.mean_sample[k].var_z, ens.mean_sample[k].var_abs_z, worst);
    }
    csv.close();

    const DistributionSnapshot folded =
        DistributionSnapshot(ens.z_grid, std::vector<double>(init.p().begin(), init.p().end()), init.step()).folded();
    CsvWriter outcomes(cfg.output_dir / "outcomes.csv");
    outcomes.row("abs_z", "count", "expected_count", "folded_p0");
    for (std::size_t j = 0; j < ens.outcome_abs_z.size(); ++j)
        outcomes.row(ens.outcome_abs_z[j], ens.outcome_counts[j], folded.p()[j] * static_cast<double>(ens.n_traj),
                     folded.p()[j]);
    outcomes.close();

    const ChiSquareResult chi = chi_square_test(ens.outcome_counts, folded.p());
    std::ostringstream report;
    report << "trajectories: " << ens.n_traj << "\n"
           << "final tau: " << format_double(ens.taus.back()) << "\n"
           << "max |mean p - p0| / SE at final tau: " << format_double(worst_final) << "\n"
           << "outcome chi-square: " << format_double(chi.statistic) << " (dof " << chi.dof
           << "), p-value " << format_double(chi.p_value) << "\n";
    write_text(cfg.output_dir / "ensemble_report.txt", report.str());
    log << report.str();
    return 0;
}

int cmd_oracle_compare(const RunConfig& cfg, std::ostream& log)
{
    ensure_dir(cfg.output_dir);
    const FullEngineSetup setup = full_setup(cfg);
    if (setup.params.eta != 0.0 || setup.params.dispersive_shift)
        throw ConfigError("oracle comparison needs eta = 0 and dispersive_shift = false (alpha_q = C D10)");
    if (setup.regime != Regime::steady) throw ConfigError("oracle comparison runs the steady regime");
    const std::size_t size = basis_size(setup.lattice);
    if (size > default_basis_cap) throw ConfigError("basis too large for full engine");

    TrajectoryOptions opt;
    opt.tau_max = cfg.tau_max;
    opt.record_interval = cfg.record_interval;
    opt.seed = cfg.seed;
    opt.keep_distributions = true;
    const TrajectoryRecord full = run_full_oracle(setup, opt);
    const TrajectoryRecord reduced = run_trajectory(full_engine_marginal(setup), opt);

    CsvWriter csv(cfg.output_dir / "oracle_report.csv");
    csv.row("checkpoint", "tau", "m_reduced", "m_full", "max_abs_dev");
    double worst = 0.0;
    bool counts_agree = true;
    for (std::size_t k = 0; k < full.samples.size(); ++k) {
        double dev = 0.0;
        for (std::size_t j = 0; j < full.z_grid.size(); ++j)
            dev = std::max(dev, std::abs(full.distributions[k][j] - reduced.distributions[k][j]));
        worst = std::max(worst, dev);
        counts_agree = counts_agree && full.samples[k].m == reduced.samples[k].m;
        csv.row(k, full.samples[k].tau, reduced.samples[k].m, full.samples[k].m, dev);
    }
    csv.close();
    log << "basis size: " << size << "\n"
        << "checkpoints: " << full.samples.size() << "\n"
        << "counts: reduced " << reduced.jumps.size() << ", full " << full.jumps.size() << "\n"
        << "max abs marginal deviation: " << format_double(worst) << "\n";
    if (!counts_agree || worst > oracle_tolerance) {
        log << "FAIL: engines disagree (tolerance " << format_double(oracle_tolerance) << ")\n";
        return 2;
    }
    log << "OK\n";
    return 0;
}

int cmd_unitary(const RunConfig& cfg, std::ostream& log)
{
    if (!cfg.unitary) throw ConfigError("unitary subcommand needs a [unitary] section");
    const UnitaryBlock& u = *cfg.unitary;
    const double rate = u.delta_p * u.C * u.C;
    if (rate == 0.0 || !std::isfinite(rate)) throw ConfigError("field 'unitary': delta_p C^2 must be non-zero");
    ensure_dir(cfg.output_dir);

    // Poisson(mean_nk) over N_K, dropping components below the truncation mass.
    std::vector<int> nk;
    std::vector<double> p0;
    const int hi = static_cast<int>(std::ceil(u.mean_nk + 20.0 * std::sqrt(u.mean_nk + 1.0) + 20.0));
    for (int n = 0; n <= hi; ++n) {
        const double lp = u.mean_nk > 0.0 ? n * std::log(u.mean_nk) - u.mean_nk - std::lgamma(n + 1.0)
                                          : (n == 0 ? 0.0 : -std::numeric_limits<double>::infinity());
        const double p = std::exp(lp);
        if (p < u.truncation) continue;
        nk.push_back(n);
        p0.push_back(p);
    }
    double total = 0.0;
    for (double p : p0) total += p;
    for (double& p : p0) p /= total;

    const double t_rev = 2.0 * std::numbers::pi / std::abs(rate);
    CsvWriter coh(cfg.output_dir / "coherence.csv");
    coh.row("t", "t_over_trev", "Q");
    double q_min = 1.0;
    double q_at_rev = 0.0;
    const std::size_t half = (u.points - 1) / 2;
    for (std::size_t k = 0; k < u.points; ++k) {
        const double frac = 2.0 * static_cast<double>(k) / static_cast<double>(u.points - 1);
        const double t = t_rev * frac;
        const double q = coherence_proxy(nk, p0, rate, t);
        if (k == half && 2 * half == u.points - 1) q_at_rev = q;
        if (frac > 0.05 && frac < 0.95) q_min = std::min(q_min, q);
        coh.row(t, frac, q);
    }
    coh.close();

    CsvWriter ph(cfg.output_dir / "phases.csv");
    ph.row("t", "n_k", "p0", "phase");
    for (int step = 0; step <= 8; ++step) {
        const double t = t_rev * step / 8.0;
        for (std::size_t i = 0; i < nk.size(); ++i) {
            // -delta_p C^2 N_K^2 t wrapped to [-pi, pi)
            double turns = rate * static_cast<double>(nk[i]) * nk[i] * t / (2.0 * std::numbers::pi);
            turns -= std::floor(turns);
            double phase = -2.0 * std::numbers::pi * turns;
            if (phase < -std::numbers::pi) phase += 2.0 * std::numbers::pi;
            ph.row(t, nk[i], p0[i], phase);
        }
    }
    ph.close();
    log << "components: " << nk.size() << "\n"
        << "t_rev = 2 pi / (delta_p C^2) = " << format_double(t_rev) << "\n"
        << "Q(t_rev) = " << format_double(q_at_rev) << "\n"
        << "min Q between revivals = " << format_double(q_min) << "\n";
    return 0;
}

}  // namespace qcollapse::cli
