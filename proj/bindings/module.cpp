#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <utility>
#include <vector>

#include "sinkmatch/assoc.hpp"
#include "sinkmatch/geom.hpp"
#include "sinkmatch/hungarian.hpp"
#include "sinkmatch/train.hpp"

namespace py = pybind11;

namespace {

sinkmatch::Matrix<double> to_matrix(
    const std::vector<std::vector<double>>& rows, const char* what) {
  if (rows.empty() || rows.front().empty()) {
    throw sinkmatch::DataError(std::string(what) + ": empty matrix");
  }
  sinkmatch::Matrix<double> out(rows.size(), rows.front().size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.cols()) {
      throw sinkmatch::DataError(std::string(what) + ": ragged matrix");
    }
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

std::vector<std::vector<double>> from_matrix(
    const sinkmatch::Matrix<double>& m) {
  std::vector<std::vector<double>> out(m.rows(),
                                       std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() =
      "Core operations of the graph-association tracker: box overlap, "
      "doubly-constrained normalization, assignment, and a gradient check.";
  mod.attr("__version__") = "0.1.0";

  py::register_exception<sinkmatch::DataError>(mod, "DataError",
                                               PyExc_ValueError);
  py::register_exception<sinkmatch::InternalError>(mod, "InternalError",
                                                   PyExc_RuntimeError);

  mod.def(
      "iou",
      [](std::tuple<double, double, double, double> a,
         std::tuple<double, double, double, double> b) {
        const sinkmatch::BoundingBox ba(std::get<0>(a), std::get<1>(a),
                                        std::get<2>(a), std::get<3>(a));
        const sinkmatch::BoundingBox bb(std::get<0>(b), std::get<1>(b),
                                        std::get<2>(b), std::get<3>(b));
        return sinkmatch::iou(ba, bb);
      },
      py::arg("box_a"), py::arg("box_b"),
      "Intersection over union of two (cx, cy, w, h) boxes.");

  mod.def(
      "cosine",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return sinkmatch::cosine_similarity<double>(
            a, b, sinkmatch::ScalarCtx<double>{});
      },
      py::arg("a"), py::arg("b"),
      "Cosine similarity; zero vectors score 0 by definition.");

  mod.def(
      "sinkhorn",
      [](const std::vector<std::vector<double>>& scores, double l,
         int iters) {
        auto s = to_matrix(scores, "sinkhorn");
        const std::size_t m = s.rows() - 1;
        const std::size_t n = s.cols() - 1;
        sinkmatch::Matrix<double> kernel(m + 1, n + 1, 0.0);
        for (std::size_t i = 0; i <= m; ++i) {
          for (std::size_t j = 0; j <= n; ++j) {
            kernel(i, j) = std::exp(l * s(i, j));
          }
        }
        auto s_star = sinkmatch::sinkhorn_scale(
            std::move(kernel), m, n, iters, sinkmatch::ScalarCtx<double>{});
        return from_matrix(s_star);
      },
      py::arg("scores"), py::arg("l") = 5.0, py::arg("iters") = 8,
      "Exponentiate an augmented score matrix (last row/column = slack) and "
      "scale it toward the tracking marginals; returns the scaled matrix.");

  mod.def(
      "max_weight_matching",
      [](const std::vector<std::vector<double>>& weights) {
        return sinkmatch::max_weight_matching(to_matrix(weights, "matching"));
      },
      py::arg("weights"),
      "Maximum-weight partial matching; returns matched (row, col) pairs.");

  mod.def(
      "gradient_check",
      [](std::size_t m, std::size_t n, std::size_t d_app, std::size_t d_inter,
         std::size_t layers, std::uint64_t seed) {
        sinkmatch::GradCheckConfig gc;
        gc.m = m;
        gc.n = n;
        gc.dims = sinkmatch::ModelDims{
            .d_app = d_app, .d_inter = d_inter, .gcn_layers = layers};
        gc.seed = seed;
        const auto report =
            sinkmatch::gradient_check(gc, sinkmatch::PipelineConfig{});
        return report.max_rel_error;
      },
      py::arg("m") = 2, py::arg("n") = 2, py::arg("d_app") = 8,
      py::arg("d_inter") = 8, py::arg("layers") = 2, py::arg("seed") = 0,
      "Max relative error between tape gradients and finite differences on "
      "a random instance.");
}
