#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "heavycov/errors.hpp"
#include "heavycov/robust_cov.hpp"
#include "heavycov/robust_mean.hpp"
#include "heavycov/simlab.hpp"

namespace py = pybind11;
using namespace heavycov;

namespace {

SymMat sym(const Matrix& a) { return SymMat(a); }

std::vector<Matrix> matrices(const std::vector<SymMat>& v) {
  std::vector<Matrix> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.matrix());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust covariance estimation for heavy-tailed data";

  py::register_exception<SampleSizeError>(m, "SampleSizeError", PyExc_ValueError);
  py::register_exception<DegenerateSpectrumError>(m, "DegenerateSpectrumError",
                                                  PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("psi", &psi, py::arg("x"));
  m.def(
      "sym_eigen",
      [](const Matrix& a) {
        EigenDecomp e = sym_eigen(sym(a));
        return py::make_tuple(e.values, e.vectors);
      },
      py::arg("a"), "Eigenvalues (descending) and eigenvectors of a symmetric matrix.");
  m.def("op_norm", [](const Matrix& a) { return op_norm(sym(a)); });
  m.def("fro_norm", [](const Matrix& a) { return fro_norm(sym(a)); });
  m.def("nuclear_norm", [](const Matrix& a) { return nuclear_norm(sym(a)); });
  m.def("trace", [](const Matrix& a) { return trace(sym(a)); });
  m.def("effective_rank", [](const Matrix& a) { return effective_rank(sym(a)); });

  m.def(
      "geometric_median",
      [](const Matrix& points, double tol, int max_iter) {
        return geometric_median(points, GeometricMedianOptions{tol, max_iter});
      },
      py::arg("points"), py::arg("tol") = 1e-8, py::arg("max_iter") = 1000);

  py::class_<MoMResult>(m, "MoMResult")
      .def_readonly("mu_hat", &MoMResult::mu_hat)
      .def_readonly("k", &MoMResult::k)
      .def_readonly("block_means", &MoMResult::block_means)
      .def_readonly("beta", &MoMResult::beta);
  m.def(
      "median_of_means", [](const Matrix& x, double beta) { return median_of_means(x, beta); },
      py::arg("samples"), py::arg("beta"));

  m.def("sample_covariance", [](const Matrix& x) { return sample_covariance(x).matrix(); });
  m.def(
      "truncated_cov",
      [](const Matrix& x, const Vector& mu, double theta) {
        return truncated_cov(x, mu, theta).matrix();
      },
      py::arg("samples"), py::arg("mu_hat"), py::arg("theta"));
  m.def(
      "estimate_fixed_sigma",
      [](const Matrix& x, double sigma, double beta) {
        FixedSigmaEstimate e = estimate_fixed_sigma(x, sigma, beta);
        return py::dict(py::arg("sigma_hat") = e.sigma_hat.matrix(),
                        py::arg("mu_hat") = e.mean.mu_hat, py::arg("theta") = e.theta);
      },
      py::arg("samples"), py::arg("sigma"), py::arg("beta"));

  py::class_<LepskiReport>(m, "LepskiReport")
      .def_readonly("sigmas", &LepskiReport::sigmas)
      .def_readonly("thetas", &LepskiReport::thetas)
      .def_readonly("distances", &LepskiReport::distances)
      .def_readonly("j_star", &LepskiReport::j_star)
      .def_property_readonly("estimates",
                             [](const LepskiReport& r) { return matrices(r.estimates); })
      .def_property_readonly("sigma_star",
                             [](const LepskiReport& r) { return r.sigma_star.matrix(); })
      .def_property_readonly("mu_hat", [](const LepskiReport& r) { return r.mean.mu_hat; });
  m.def(
      "lepski_estimate",
      [](const Matrix& x, double sigma_min, double sigma_max, double beta) {
        return lepski_estimate(x, LepskiConfig{sigma_min, sigma_max, beta});
      },
      py::arg("samples"), py::arg("sigma_min"), py::arg("sigma_max"), py::arg("beta"));

  m.def(
      "soft_threshold",
      [](const Matrix& a, double tau) { return soft_threshold(sym(a), tau).matrix(); },
      py::arg("sigma"), py::arg("tau"));
  m.def(
      "pca_projector",
      [](const Matrix& a, int k) { return pca_projector(sym(a), k).matrix(); },
      py::arg("sigma"), py::arg("k"));
  m.def(
      "subspace_dist",
      [](const Matrix& p1, const Matrix& p2) { return subspace_dist(sym(p1), sym(p2)); },
      py::arg("p1"), py::arg("p2"));
  m.def("truncation_ratio", &truncation_ratio, py::arg("z"), py::arg("mu"), py::arg("theta"));
  m.def("truncation_ratio_bounds", &truncation_ratio_bounds, py::arg("bound"),
        py::arg("theta"));

  m.def(
      "sample_gaussian",
      [](const Vector& mu0, const Matrix& sigma0, long n, std::uint64_t seed) {
        return sample_gaussian(mu0, sym(sigma0), n, seed);
      },
      py::arg("mu0"), py::arg("sigma0"), py::arg("m"), py::arg("seed"));
  m.def(
      "sample_student_t",
      [](const Vector& mu0, const Matrix& scale, double nu, long n, std::uint64_t seed) {
        return sample_student_t(mu0, sym(scale), nu, n, seed);
      },
      py::arg("mu0"), py::arg("scale"), py::arg("nu"), py::arg("m"), py::arg("seed"));
}
