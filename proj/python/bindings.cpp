#include <algorithm>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qcollapse/error.hpp"
#include "qcollapse/stats.hpp"
#include "qcollapse/trajectory.hpp"

namespace py = pybind11;
using namespace qcollapse;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v)
{
    py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> to_matrix(const std::vector<std::vector<double>>& rows, std::size_t width)
{
    py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(width)});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) view(i, j) = rows[i][j];
    return out;
}

InitialDistribution make_initial(const std::string& preset, int sites, int illuminated, int atoms,
                                 const std::string& geometry, int delta_at)
{
    const LatticeConfig cfg(sites, illuminated, atoms);
    const Geometry g = parse_geometry(geometry);
    if (preset == "superfluid")
        return initial_distribution(g == Geometry::maximum ? DistributionPreset::superfluid_maximum
                                                           : DistributionPreset::superfluid_minimum,
                                    cfg, g);
    if (preset == "delta") return initial_distribution(DistributionPreset::delta, cfg, g, delta_at);
    throw ConfigError("preset must be superfluid | delta, got '" + preset + "'");
}

JumpMode parse_jumps(const std::string& mode)
{
    if (mode == "sampled") return JumpMode::sampled;
    if (mode == "suppressed") return JumpMode::suppressed;
    if (mode == "fixed_step") return JumpMode::fixed_step;
    throw ConfigError("jumps must be sampled | suppressed | fixed_step, got '" + mode + "'");
}

py::dict record_to_dict(const TrajectoryRecord& rec)
{
    std::vector<double> tau, mean_z, mean_abs_z, var_z, var_abs_z;
    std::vector<long> m;
    std::vector<bool> jumped;
    for (const auto& s : rec.samples) {
        tau.push_back(s.tau);
        m.push_back(s.m);
        mean_z.push_back(s.mean_z);
        mean_abs_z.push_back(s.mean_abs_z);
        var_z.push_back(s.var_z);
        var_abs_z.push_back(s.var_abs_z);
        jumped.push_back(s.jump_in_interval);
    }
    py::dict d;
    d["seed"] = rec.seed;
    d["step"] = rec.step;
    d["z"] = to_array(rec.z_grid);
    d["tau"] = to_array(tau);
    d["m"] = to_array(m);
    d["mean_z"] = to_array(mean_z);
    d["mean_abs_z"] = to_array(mean_abs_z);
    d["var_z"] = to_array(var_z);
    d["var_abs_z"] = to_array(var_abs_z);
    d["is_jump_interval"] = py::array(py::cast(jumped));
    d["jumps"] = to_array(rec.jumps);
    if (!rec.distributions.empty()) d["distributions"] = to_matrix(rec.distributions, rec.z_grid.size());
    return d;
}

}  // namespace

PYBIND11_MODULE(_qcollapse, m)
{
    m.doc() = "Conditional atom-number collapse under cavity photodetection";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<InitialDistribution>(m, "InitialDistribution")
        .def(py::init<std::vector<int>, std::vector<double>, int>(), py::arg("z"), py::arg("p"), py::arg("step"))
        .def_property_readonly("z", [](const InitialDistribution& d) { return to_array(std::vector<int>(d.z().begin(), d.z().end())); })
        .def_property_readonly("p", [](const InitialDistribution& d) { return to_array(std::vector<double>(d.p().begin(), d.p().end())); })
        .def_property_readonly("step", &InitialDistribution::step)
        .def("mean", &InitialDistribution::mean)
        .def("variance", &InitialDistribution::variance)
        .def("__len__", &InitialDistribution::size);

    m.def("initial_distribution", &make_initial, py::arg("preset"), py::arg("sites"), py::arg("illuminated"),
          py::arg("atoms"), py::arg("geometry") = "maximum", py::arg("delta_at") = 0,
          "Preset p0(z): superfluid (binomial) or delta.");

    m.def("closed_form_distribution", [](const InitialDistribution& init, long counts, double tau) {
        return to_array(closed_form_distribution(init, counts, tau));
    }, py::arg("init"), py::arg("m"), py::arg("tau"), "p(z) ~ z^{2m} exp(-z^2 tau) p0(z).");

    m.def("run_trajectory", [](const InitialDistribution& init, double tau_max, double record_interval,
                               std::uint64_t seed, const std::string& jumps, bool keep_distributions) {
        TrajectoryOptions opt;
        opt.tau_max = tau_max;
        opt.record_interval = record_interval;
        opt.seed = seed;
        opt.jumps = parse_jumps(jumps);
        opt.keep_distributions = keep_distributions;
        TrajectoryRecord rec;
        {
            py::gil_scoped_release release;
            rec = run_trajectory(init, opt);
        }
        return record_to_dict(rec);
    }, py::arg("init"), py::arg("tau_max"), py::arg("record_interval") = 0.01, py::arg("seed") = 0,
       py::arg("jumps") = "sampled", py::arg("keep_distributions") = false);

    m.def("run_ensemble", [](const InitialDistribution& init, double tau_max, double record_interval,
                             std::size_t n_traj, std::uint64_t base_seed, unsigned workers) {
        EnsembleOptions opt;
        opt.tau_max = tau_max;
        opt.record_interval = record_interval;
        opt.n_traj = n_traj;
        opt.base_seed = base_seed;
        opt.workers = workers;
        EnsembleSummary ens;
        {
            py::gil_scoped_release release;
            ens = run_ensemble(init, opt);
        }
        py::dict d;
        d["z"] = to_array(ens.z_grid);
        d["tau"] = to_array(ens.taus);
        d["mean_distribution"] = to_matrix(ens.mean_distribution, ens.z_grid.size());
        d["standard_error"] = to_matrix(ens.standard_error, ens.z_grid.size());
        d["mean_count"] = to_array(ens.mean_count);
        d["outcome_abs_z"] = to_array(ens.outcome_abs_z);
        d["outcome_counts"] = to_array(ens.outcome_counts);
        d["n_traj"] = ens.n_traj;
        return d;
    }, py::arg("init"), py::arg("tau_max"), py::arg("record_interval") = 0.01, py::arg("n_traj") = 1000,
       py::arg("base_seed") = 0, py::arg("workers") = 0);

    m.def("derive_stream_seed", &derive_stream_seed, py::arg("base"), py::arg("index"));

    m.def("coherence_proxy", [](std::vector<int> nk, std::vector<double> p0, double rate, double t) {
        return coherence_proxy(nk, p0, rate, t);
    }, py::arg("nk"), py::arg("p0"), py::arg("rate"), py::arg("t"), "Q(t) = |sum p0(N) exp(-i rate N^2 t)|.");

    m.def("peak_estimate", &peak_estimate, py::arg("m"), py::arg("tau"));
    m.def("fwhm_estimate", &fwhm_estimate, py::arg("tau"));
}
