// Python extension: experiment drivers taking a JSON config string, plus a few
// arithmetic primitives. Tensors cross the boundary as numpy arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "lospec/config.hpp"
#include "lospec/experiments.hpp"

namespace py = pybind11;
using namespace lospec;

namespace {

template <typename T>
py::array_t<T> to_numpy(const Matrix<T>& m) {
  py::array_t<T> a({m.rows(), m.cols()});
  if (m.size() > 0) std::memcpy(a.mutable_data(), m.data().data(), m.size() * sizeof(T));
  return a;
}

py::dict tensor_dict(const QuantTensor8& t) {
  py::dict d;
  d["data"] = to_numpy<std::int8_t>(t);
  d["scale"] = t.scale;
  return d;
}

ExperimentConfig config_from(const std::string& json) {
  auto cfg = json.empty() ? ExperimentConfig{} : parse_config(json);
  cfg.validate();
  return cfg;
}

py::dict workload_dict(const Workload& w) {
  py::dict d;
  d["x"] = tensor_dict(w.x);
  py::list heads;
  for (const auto& h : w.heads) {
    py::dict hd;
    hd["wq"] = tensor_dict(h.wq);
    hd["wk"] = tensor_dict(h.wk);
    hd["wv"] = tensor_dict(h.wv);
    heads.append(hd);
  }
  d["heads"] = heads;
  d["checksum"] = checksum(w.x);
  return d;
}

py::dict predict(const std::string& config) {
  const auto cfg = config_from(config);
  const auto w = gen_workload(cfg.workload);
  PredictRun run;
  {
    py::gil_scoped_release release;
    run = run_predict(w, cfg.css, cfg.weights, cfg.threads);
  }
  py::list masks;
  py::list mask_text;
  for (const auto& h : run.heads) {
    masks.append(to_numpy<std::uint8_t>(h.prediction.mask.to_dense()).attr("astype")("bool"));
    mask_text.append(h.prediction.mask.to_text());
  }
  py::dict d;
  d["metrics"] = run.metrics.to_json();
  d["masks"] = masks;
  d["mask_text"] = mask_text;
  d["cost_csv"] = run.total_cost.to_csv();
  d["cost_summary"] = run.total_cost.to_json_summary();
  d["dense_units"] = run.dense_cost.units();
  return d;
}

}  // namespace

PYBIND11_MODULE(_lospec, m) {
  m.doc() = "Cross-stage attention sparsity prediction";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  m.def("aloc_mul", [](int x, int y) { return aloc_mul(x, loe(y)); }, py::arg("x"), py::arg("y"),
        "Leading-one approximate product of two 8-bit integers.");
  m.def("normalize_config", [](const std::string& c) { return to_json(config_from(c)); }, py::arg("config"),
        "Parse, validate and re-emit a config with every default filled in.");
  m.def("gen_workload", [](const std::string& c) { return workload_dict(gen_workload(config_from(c).workload)); },
        py::arg("config"));
  m.def("predict", &predict, py::arg("config"));
  m.def(
      "compare",
      [](const std::string& c, std::size_t head) {
        const auto cfg = config_from(c);
        const auto w = gen_workload(cfg.workload);
        py::gil_scoped_release release;
        return compare_csv(run_compare(w, head, cfg.predictors, cfg.density, cfg.css.nibble_schedule, cfg.weights));
      },
      py::arg("config"), py::arg("head") = 0);
  m.def(
      "sweep",
      [](const std::string& c) {
        const auto cfg = config_from(c);
        const auto w = gen_workload(cfg.workload);
        py::gil_scoped_release release;
        return sweep_csv(run_sweep(w, cfg.css.rounds, cfg.css.nibble_schedule, cfg.weights, cfg.threads));
      },
      py::arg("config"));
  m.def(
      "tune",
      [](const std::string& c) {
        const auto cfg = config_from(c);
        py::gil_scoped_release release;
        return run_tune(cfg.workload, cfg.ladder, cfg.budget, cfg.css.rounds, cfg.css.nibble_schedule, cfg.weights,
                        cfg.threads)
            .to_json();
      },
      py::arg("config"));
}
