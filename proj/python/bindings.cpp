#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "alsched/harness.hpp"
#include "alsched/metrics.hpp"
#include "alsched/strategies.hpp"

namespace py = pybind11;
using namespace alsched;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    auto v = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = v(i, j);
    return m;
}

Array to_array(const Matrix& m) {
    Array a({m.rows(), m.cols()});
    auto v = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) v(i, j) = m(i, j);
    return a;
}

Pool to_pool(const Array& a) {
    const Matrix m = to_matrix(a);
    Pool p;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        p.samples.push_back(Sample{"p" + std::to_string(i), 1, {r.begin(), r.end()}, nullptr});
    }
    return p;
}

// model-free strategies only; model-based ones need a fitted model and
// labeled data and are reached through run()
std::vector<std::size_t> select_indices(const std::string& strategy, const Array& pool, std::optional<Array> labeled,
                                        std::size_t budget, std::uint64_t seed, std::vector<int> signs,
                                        std::size_t clusters) {
    const auto name = parse_strategy(strategy);
    if (!is_initialization_strategy(name)) throw py::value_error(strategy + " needs a model; use run()");
    const Pool p = to_pool(pool);
    LabeledSet set;
    if (labeled) {
        const Matrix l = to_matrix(*labeled);
        for (std::size_t i = 0; i < l.rows(); ++i) {
            auto r = l.row(i);
            set.add(Sample{"l" + std::to_string(i), 0, {r.begin(), r.end()}, nullptr}, 0.0, 0);
        }
    }
    StrategyConfig cfg;
    cfg.cl_clusters = clusters;
    if (!signs.empty()) cfg.pareto = ParetoSpec::from_signs(signs);
    return select(name, SelectionRequest{p, set, nullptr, budget, seed}, cfg);
}

py::dict synth(const SynthConfig& cfg, std::uint64_t seed) {
    auto s = synth_pool_stream(cfg, seed);
    py::list pools, labels;
    for (const auto& p : s.pools) {
        pools.append(to_array(p.features()));
        std::vector<double> y;
        for (const auto& smp : p.samples) y.push_back(s.oracle.label(smp));
        labels.append(py::cast(y));
    }
    py::dict d;
    d["pools"] = pools;
    d["labels"] = labels;
    d["holdout_x"] = to_array(s.holdout.features);
    d["holdout_y"] = py::cast(s.holdout.labels);
    d["feature_names"] = py::cast(synthetic_feature_names(cfg.dim));
    return d;
}

py::tuple command(int code, const std::ostringstream& out, const std::ostringstream& err) {
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_alsched, m) {
    m.doc() = "Pool-per-round active learning schedules for regression";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("mse", [](std::vector<double> y, std::vector<double> yhat) { return mse(y, yhat); }, py::arg("y"), py::arg("yhat"));
    m.def("auc", [](std::vector<double> c) { return auc(c); }, py::arg("curve"));
    m.def("log_auc", [](std::vector<double> c) { return log_auc(c); }, py::arg("curve"));
    m.def("asd", [](std::vector<double> c) { return asd(c); }, py::arg("curve"));
    m.def("wasd", [](std::vector<double> c) { return wasd(c); }, py::arg("curve"));
    m.def("ftc", [](std::vector<double> c, double eps) { return ftc(c, eps); }, py::arg("curve"), py::arg("eps") = 0.01);
    m.def(
        "paired_ttest_log",
        [](std::vector<double> a, std::vector<double> b, double alpha, int comparisons) {
            const auto r = paired_ttest_log(a, b, alpha, comparisons);
            return py::make_tuple(r.t_statistic, r.p_value, r.significant);
        },
        py::arg("a"), py::arg("b"), py::arg("alpha") = 0.05, py::arg("comparisons") = 1);

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("horizon", &SynthConfig::horizon)
        .def_readwrite("pool_size", &SynthConfig::pool_size)
        .def_readwrite("dim", &SynthConfig::dim)
        .def_readwrite("noise", &SynthConfig::noise)
        .def_readwrite("drift", &SynthConfig::drift)
        .def_readwrite("drift_fraction", &SynthConfig::drift_fraction)
        .def_readwrite("holdout_fraction", &SynthConfig::holdout_fraction);

    m.def("synth", &synth, py::arg("config") = SynthConfig{}, py::arg("seed") = 0);
    m.def(
        "label_draws", [](const SynthConfig& c, std::uint64_t seed, std::size_t n) { return synth_label_draws(c, seed, n); },
        py::arg("config") = SynthConfig{}, py::arg("seed") = 0, py::arg("count") = 1000);
    m.def("select", &select_indices, py::arg("strategy"), py::arg("pool"), py::arg("labeled") = py::none(),
          py::arg("budget") = 8, py::arg("seed") = 0, py::arg("signs") = std::vector<int>{}, py::arg("clusters") = 20);

    m.def(
        "run",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> output,
           std::optional<std::uint64_t> seed, std::optional<int> parallel) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cmd_run(config, RunOptions{output, seed, parallel}, out, err);
            }
            return command(code, out, err);
        },
        py::arg("config"), py::arg("output") = py::none(), py::arg("seed") = py::none(), py::arg("parallel") = py::none());
    m.def(
        "synth_files",
        [](const std::filesystem::path& config, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed) {
            std::ostringstream out, err;
            const int code = cmd_synth(config, out_dir, seed, out, err);
            return command(code, out, err);
        },
        py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none());
    m.def(
        "importance",
        [](const std::filesystem::path& run_dir, int repeats, std::optional<std::string> experiment,
           std::optional<std::uint64_t> seed) {
            std::ostringstream out, err;
            const int code = cmd_importance(run_dir, repeats, experiment, seed, out, err);
            return command(code, out, err);
        },
        py::arg("run_dir"), py::arg("repeats") = 5, py::arg("experiment") = py::none(), py::arg("seed") = py::none());
}
