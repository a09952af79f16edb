#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "gcnet/architectures.hpp"
#include "gcnet/connectivity.hpp"
#include "gcnet/error.hpp"
#include "gcnet/experiment.hpp"
#include "gcnet/flops.hpp"
#include "gcnet/prune.hpp"

namespace py = pybind11;
using namespace gcnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const Tensor& t) {
  py::array_t<double> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

py::array_t<bool> mask_to_numpy(const Mask& m) {
  py::array_t<bool> out(std::vector<py::ssize_t>(m.shape().begin(), m.shape().end()));
  bool* dst = out.mutable_data();
  for (std::size_t k = 0; k < m.size(); ++k) dst[k] = m.kept(k);
  return out;
}

const char* kind_label(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Composition: return "composition";
    case ErrorKind::Format: return "format";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Config: return "config";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

Metric parse_metric(const std::string& name) {
  ExperimentConfig cfg;
  set_config_value(cfg, "metric", name);
  return cfg.metric;
}

Architecture parse_arch(const std::string& name) {
  ExperimentConfig cfg;
  set_config_value(cfg, "arch", name);
  return cfg.arch;
}

ActivationMatrix as_activations(const DoubleArray& a) {
  const Tensor t = to_tensor(a);
  return t.rank() == 2 ? ActivationMatrix{t, 0} : activation_matrix(t);
}

struct Result {
  ExperimentConfig cfg;
  ExperimentResult result;
};

py::dict row_dict(const AggregateRow& r) {
  py::dict d;
  d["method"] = std::string(method_name(r.cell.method));
  d["hybrid"] = std::string(hybrid_name(r.cell.hybrid));
  d["alpha"] = r.cell.alpha;
  d["trials"] = r.trials;
  d["acc_O"] = r.acc_O;
  d["acc_1"] = r.acc_1;
  d["acc_cjg"] = r.acc_cjg;
  d["acc_rnb"] = r.acc_rnb;
  d["acc_lo"] = r.acc_lo;
  d["flops_connectivity"] = r.flops.connectivity_flops;
  d["flops_gc_prune"] = r.flops.gc_prune_flops;
  d["flops_mapping"] = r.flops.mapping_flops;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gcnet, m) {
  m.doc() = "Ghost-connectivity pruning core.";

  static py::exception<Error> error(m, "GcnetError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error.ptr())(e.what());
      inst.attr("kind") = kind_label(e.kind());
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  m.def("activation_matrix",
        [](const DoubleArray& acts) { return to_numpy(as_activations(acts).values); },
        py::arg("acts"), "Spatial mean of [s, o, h, w] activations; [s, o] passes through.");

  m.def("connectivity",
        [](const DoubleArray& source, const DoubleArray& target, const std::string& metric) {
          return to_numpy(
              connectivity(as_activations(source), as_activations(target), parse_metric(metric))
                  .values);
        },
        py::arg("source"), py::arg("target"), py::arg("metric") = "pearson",
        "R[j, i] relating source channel i to target channel j.");

  m.def("merge_skip", [](const DoubleArray& a, const DoubleArray& b) {
    return to_numpy(merge_skip({to_tensor(a)}, {to_tensor(b)}).values);
  });

  m.def("prune_count", &prune_count, py::arg("alpha"), py::arg("n"));

  m.def("mask_per_layer",
        [](const DoubleArray& scores, double alpha) {
          return mask_to_numpy(mask_per_layer(to_tensor(scores), alpha));
        },
        py::arg("scores"), py::arg("alpha"), "Keep-mask; True marks a kept weight.");

  m.def("theory_g_scores",
        [](const std::vector<DoubleArray>& weights, std::optional<DoubleArray> importance) {
          Network net;
          for (const auto& w : weights) {
            const Tensor t = to_tensor(w);
            require(t.rank() == 2, ErrorKind::Input, "weights must be 2-d [out, in]");
            Layer l = Layer::dense(t.dim(0), t.dim(1));
            *l.weights = t;
            net.layers.push_back(std::move(l));
          }
          require(!net.layers.empty(), ErrorKind::Input, "no weights given");
          net.input_shape = {net.layers.front().in};
          std::optional<Tensor> s;
          if (importance) s = to_tensor(*importance);
          std::vector<py::array_t<double>> out;
          for (const auto& g : theory_g_scores(net, s)) out.push_back(to_numpy(g.scores));
          return out;
        },
        py::arg("weights"), py::arg("output_importance") = py::none(),
        "One score vector per layer but the last, for a chain of [out, in] matrices.");

  m.def("connectivity_flops",
        [](const std::string& arch, std::size_t samples, const std::string& metric) {
          const ExperimentConfig d;
          const Network net = make_architecture(parse_arch(arch), d.channels, d.image_size,
                                                d.classes);
          return count_connectivity_flops(net, samples, parse_metric(metric));
        },
        py::arg("arch") = "MiniVGG", py::arg("samples") = 512, py::arg("metric") = "pearson");

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init([](const std::string& text) { return parse_config(text); }),
           py::arg("text") = "")
      .def_static("load", [](const std::string& path) { return load_config(path); })
      .def("set",
           [](ExperimentConfig& c, const std::string& key, const std::string& value) {
             set_config_value(c, key, value);
           })
      .def("validate", [](const ExperimentConfig& c) { validate(c); })
      .def("text", &config_text)
      .def("cell_count", [](const ExperimentConfig& c) { return cells(c).size(); });

  py::class_<Result>(m, "Result")
      .def_property_readonly("rows",
                             [](const Result& r) {
                               py::list rows;
                               for (const auto& row : r.result.rows) rows.append(row_dict(row));
                               return rows;
                             })
      .def("results_csv", [](const Result& r) { return results_csv(r.cfg, r.result); })
      .def("trials_csv", [](const Result& r) { return trials_csv(r.cfg, r.result); })
      .def("summary", [](const Result& r) { return summary_text(r.cfg, r.result); })
      .def("write", [](const Result& r, const std::string& dir) {
        write_outputs(r.cfg, r.result, dir);
      });

  m.def("run_experiment",
        [](const ExperimentConfig& cfg) {
          validate(cfg);
          Result r{cfg, {}};
          {
            py::gil_scoped_release release;
            r.result = run_experiment(cfg);
          }
          return r;
        },
        py::arg("config"));
}
