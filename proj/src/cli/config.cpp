#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "qcollapse/cli.hpp"
#include "qcollapse/error.hpp"

namespace qcollapse::cli {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string> run_keys{"geometry", "N", "M", "K", "initial", "tau_max", "record_interval",
                                     "n_traj", "seed", "engine", "output_dir"};
const std::set<std::string> physical_keys{"kappa", "g0", "g1", "a0", "eta", "delta_p", "delta_a",
                                          "alpha0_re", "alpha0_im", "dispersive_shift", "regime"};
const std::set<std::string> unitary_keys{"delta_p", "C", "mean_nk", "truncation", "points"};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& field, const std::string& raw)
{
    const std::string text = trim(raw);
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty())
        throw ConfigError("field '" + field + "': cannot parse '" + text + "' as a number");
    return value;
}

bool parse_bool(const std::string& field, const std::string& raw)
{
    const std::string v = trim(raw);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("field '" + field + "': expected true | false, got '" + v + "'");
}

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed)
{
    for (const auto& [key, value] : section) {
        if (!value.empty()) throw ConfigError("nested key '" + name + "." + key + "' is not allowed");
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + name + "." + key + "'");
    }
}

}  // namespace

LatticeConfig RunConfig::lattice() const
{
    return LatticeConfig(M, K, N);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    RunConfig cfg;
    cfg.base_dir = base_dir;
    for (const auto& [name, section] : tree) {
        if (!section.data().empty()) throw ConfigError("key '" + name + "' must live inside a [section]");
        if (name == "run") {
            check_keys(section, name, run_keys);
        } else if (name == "physical") {
            check_keys(section, name, physical_keys);
        } else if (name == "unitary") {
            check_keys(section, name, unitary_keys);
        } else {
            throw ConfigError("unknown section [" + name + "]");
        }
    }

    if (const auto run = tree.get_child_optional("run")) {
        for (const auto& [key, node] : *run) {
            const std::string field = "run." + key;
            const std::string v = trim(node.data());
            if (key == "geometry") cfg.geometry = parse_geometry(v);
            else if (key == "N") cfg.N = parse_number<int>(field, v);
            else if (key == "M") cfg.M = parse_number<int>(field, v);
            else if (key == "K") cfg.K = parse_number<int>(field, v);
            else if (key == "initial") cfg.initial = v;
            else if (key == "tau_max") cfg.tau_max = parse_number<double>(field, v);
            else if (key == "record_interval") cfg.record_interval = parse_number<double>(field, v);
            else if (key == "n_traj") cfg.n_traj = parse_number<std::size_t>(field, v);
            else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(field, v);
            else if (key == "engine") {
                if (v == "reduced") cfg.engine = Engine::reduced;
                else if (v == "full") cfg.engine = Engine::full;
                else throw ConfigError("field 'run.engine': expected reduced | full, got '" + v + "'");
            } else if (key == "output_dir") cfg.output_dir = v;
        }
    }

    if (const auto phys = tree.get_child_optional("physical")) {
        CavityParams p;
        for (const auto& [key, node] : *phys) {
            const std::string field = "physical." + key;
            const std::string v = trim(node.data());
            if (key == "kappa") p.kappa = parse_number<double>(field, v);
            else if (key == "delta_p") p.delta_p = parse_number<double>(field, v);
            else if (key == "delta_a") p.delta_a = parse_number<double>(field, v);
            else if (key == "g0") p.g0 = parse_number<double>(field, v);
            else if (key == "g1") p.g1 = parse_number<double>(field, v);
            else if (key == "a0") p.a0 = parse_number<double>(field, v);
            else if (key == "eta") p.eta = parse_number<double>(field, v);
            else if (key == "alpha0_re") p.alpha0.real(parse_number<double>(field, v));
            else if (key == "alpha0_im") p.alpha0.imag(parse_number<double>(field, v));
            else if (key == "dispersive_shift") p.dispersive_shift = parse_bool(field, v);
            else if (key == "regime") {
                if (v == "steady") cfg.regime = Regime::steady;
                else if (v == "transient") cfg.regime = Regime::transient;
                else throw ConfigError("field 'physical.regime': expected steady | transient, got '" + v + "'");
            }
        }
        p.validate();
        cfg.physical = p;
    }

    if (const auto uni = tree.get_child_optional("unitary")) {
        UnitaryBlock u;
        for (const auto& [key, node] : *uni) {
            const std::string field = "unitary." + key;
            const std::string v = trim(node.data());
            if (key == "delta_p") u.delta_p = parse_number<double>(field, v);
            else if (key == "C") u.C = parse_number<double>(field, v);
            else if (key == "mean_nk") u.mean_nk = parse_number<double>(field, v);
            else if (key == "truncation") u.truncation = parse_number<double>(field, v);
            else if (key == "points") u.points = parse_number<std::size_t>(field, v);
        }
        if (!(u.mean_nk >= 0.0)) throw ConfigError("field 'unitary.mean_nk': must be >= 0");
        if (!(u.truncation > 0.0 && u.truncation < 1.0)) throw ConfigError("field 'unitary.truncation': must lie in (0, 1)");
        if (u.points < 2) throw ConfigError("field 'unitary.points': must be >= 2");
        cfg.unitary = u;
    }

    if (cfg.geometry == Geometry::minimum && cfg.K != cfg.M)
        throw ConfigError("field 'run.K': the minimum geometry requires K = M (got K=" + std::to_string(cfg.K) +
                          ", M=" + std::to_string(cfg.M) + ")");
    (void)cfg.lattice();
    if (!(cfg.tau_max >= 0.0)) throw ConfigError("field 'run.tau_max': must be >= 0");
    if (!(cfg.record_interval > 0.0)) throw ConfigError("field 'run.record_interval': must be > 0");
    if (cfg.n_traj < 1) throw ConfigError("field 'run.n_traj': must be >= 1");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

InitialDistribution resolve_initial(const RunConfig& cfg)
{
    const LatticeConfig lattice = cfg.lattice();
    const std::string& name = cfg.initial;
    if (name == "superfluid") {
        return initial_distribution(cfg.geometry == Geometry::maximum ? DistributionPreset::superfluid_maximum
                                                                      : DistributionPreset::superfluid_minimum,
                                    lattice, cfg.geometry);
    }
    if (name == "mott") {
        if (cfg.N % cfg.M != 0) throw ConfigError("field 'run.initial': mott requires N divisible by M");
        // Every site holds N/M atoms, so D10 is fixed.
        const int per_site = cfg.N / cfg.M;
        const int z = cfg.geometry == Geometry::maximum ? per_site * cfg.K : per_site * (cfg.M % 2);
        return initial_distribution(DistributionPreset::delta, lattice, cfg.geometry, z);
    }
    if (name.rfind("delta:", 0) == 0) {
        const int z = parse_number<int>("run.initial", name.substr(6));
        return initial_distribution(DistributionPreset::delta, lattice, cfg.geometry, z);
    }
    std::filesystem::path path(name);
    if (path.is_relative()) path = cfg.base_dir / path;
    return load_distribution(path, grid_step(cfg.geometry));
}

}  // namespace qcollapse::cli
