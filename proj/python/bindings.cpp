// SPDX-License-Identifier: Apache-2.0
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmrc/als.hpp"
#include "mmrc/detectors.hpp"
#include "mmrc/experiments.hpp"
#include "mmrc/ofdm.hpp"
#include "mmrc/tensor.hpp"

namespace py = pybind11;
using namespace mmrc;

namespace {

// Fortran-ordered buffers share our first-index-fastest layout, so the copy
// is a straight memcpy in both directions.
using FArray = py::array_t<cplx, py::array::f_style | py::array::forcecast>;

Tensor toTensor(const FArray& a) {
  std::vector<Index> shape;
  for (py::ssize_t d = 0; d < a.ndim(); ++d) shape.push_back(static_cast<Index>(a.shape(d)));
  Tensor t(shape);
  std::copy(a.data(), a.data() + t.size(), t.data());
  return t;
}

py::array fromTensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FArray a(shape);
  std::copy(t.data(), t.data() + t.size(), a.mutable_data());
  return a;
}

MatrixXcd toMatrix(const FArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  return Eigen::Map<const MatrixXcd>(a.data(), a.shape(0), a.shape(1));
}

py::array fromMatrix(const MatrixXcd& m) {
  FArray a({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  Eigen::Map<MatrixXcd>(a.mutable_data(), m.rows(), m.cols()) = m;
  return a;
}

}  // namespace

PYBIND11_MODULE(_mmrc, m) {
  m.doc() = "Multi-mode reservoir computing for massive MIMO-OFDM detection";

  m.def("unfold", [](const FArray& x, int mode) { return fromMatrix(unfold(toTensor(x), mode)); },
        py::arg("tensor"), py::arg("mode"),
        "Mode-n matricization with the reversed (last-free-index-fastest) column order");
  m.def("fold",
        [](const FArray& m2, int mode, const std::vector<Index>& shape) {
          return fromTensor(fold(toMatrix(m2), mode, shape));
        },
        py::arg("matrix"), py::arg("mode"), py::arg("shape"));
  m.def("mode_product",
        [](const FArray& x, const FArray& u, int mode) {
          return fromTensor(modeProduct(toTensor(x), toMatrix(u), mode));
        },
        py::arg("tensor"), py::arg("matrix"), py::arg("mode"));
  m.def("tucker_eval",
        [](const FArray& core, const std::vector<FArray>& factors) {
          std::vector<MatrixXcd> f;
          for (const auto& a : factors) f.push_back(toMatrix(a));
          return fromTensor(tuckerEval(toTensor(core), f));
        },
        py::arg("core"), py::arg("factors"));
  m.def("superblockdiag",
        [](const std::vector<FArray>& blocks) {
          std::vector<Tensor> b;
          for (const auto& a : blocks) b.push_back(toTensor(a));
          return fromTensor(superblockdiag(b));
        },
        py::arg("blocks"));

  m.def("solve_right_ls",
        [](const FArray& b, const FArray& a, double ridge) {
          LSOptions opts;
          opts.ridge = ridge;
          return fromMatrix(solveRightLS(toMatrix(b), toMatrix(a), opts));
        },
        py::arg("b"), py::arg("a"), py::arg("ridge") = 0.0,
        "Minimize ||B - W A|| over W (minimum-norm for ridge = 0)");
  m.def("spectral_radius", [](const FArray& w) { return spectralRadius(toMatrix(w)); });

  m.def("qam_map",
        [](const std::vector<std::uint8_t>& bits, int order) { return qamMap(bits, order); },
        py::arg("bits"), py::arg("order"));
  m.def("qam_demap",
        [](const std::vector<cplx>& symbols, int order) { return qamDemap(symbols, order); },
        py::arg("symbols"), py::arg("order"));

  m.def("als_fit_dense",
        [](const FArray& g, const FArray& z, int iters, std::uint64_t seed) {
          AlsOptions opts;
          opts.iters = iters;
          opts.seed = seed;
          ReadoutFactors fit = alsFitDense(toTensor(g), toTensor(z), opts);
          py::list factors;
          for (const MatrixXcd& f : fit.factors) factors.append(fromMatrix(f));
          return py::make_tuple(factors, fit.loss_trace);
        },
        py::arg("g"), py::arg("z"), py::arg("iters") = 6, py::arg("seed") = 7,
        "ALS on stacked dense tensors (.., time, batch); returns (factors, loss_trace)");

  m.def("run_experiment_config",
        [](const std::string& config_text) {
          ExperimentSpec spec = parseConfigText(config_text);
          return runExperiment(spec).toString();
        },
        py::arg("config_text"), "Parse a sectioned key=value config and return the CSV text");

  m.def("detect",
        [](const std::string& detector, const std::string& config_text) {
          ExperimentSpec spec = parseConfigText(config_text);
          SysConfig cfg = spec.system;
          Subframe sf = buildSubframe(cfg);
          RxRecord rec = applyChannel(sf.tx_time, genChannel(cfg), cfg);
          DetectionResult res;
          if (detector == "rc_joint") res = rcDetectJoint(cfg, sf, rec, spec.rc);
          else if (detector == "rc_decomposed") res = rcDetectDecomposed(cfg, sf, rec, spec.rc);
          else if (detector == "lmmse") res = lmmseDetect(cfg, sf, rec);
          else if (detector == "wesn") res = wesnDetect(cfg, sf, rec, spec.wesn);
          else throw std::invalid_argument("unknown detector '" + detector + "'");
          return py::make_tuple(res.ber, res.delay, res.loss_trace);
        },
        py::arg("detector"), py::arg("config_text"),
        "One end-to-end subframe: returns (ber, delay, loss_trace)");
}
