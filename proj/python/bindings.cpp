#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "invit/bounds.hpp"
#include "invit/correction.hpp"
#include "invit/iteration.hpp"
#include "invit/operator_core.hpp"
#include "invit/problem_gen.hpp"
#include "invit/serialization.hpp"

namespace py = pybind11;
using namespace invit;

namespace {

// Structured values travel as JSON text.
json parse(const std::string& text) { return json::parse(text); }

BoundInputs inputs(double lambda1, double lambda2, double eta) {
  BoundInputs b{lambda1, lambda2, eta};
  b.validate();
  return b;
}

SpectralMetadata metadata_arg(const std::string& text) { return metadata_from_json(parse(text)); }

std::vector<StepRecord> records_arg(const std::string& text) {
  json j = parse(text);
  if (j.is_object() && j.contains("records")) j = j.at("records");
  std::vector<StepRecord> out;
  for (const auto& r : j) out.push_back(step_record_from_json(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Inexact inverse iteration with a per-step bounds ledger.";

  py::register_exception<Error>(m, "InvitError", PyExc_ValueError);

  py::class_<Eigenproblem>(m, "Problem")
      .def_static("diagonal", &diagonal_problem, py::arg("eigenvalues"))
      .def_static("laplacian_1d", &laplacian_1d, py::arg("n"))
      .def_static("laplacian_2d", &laplacian_2d, py::arg("n"))
      .def_static("fem1d", &fem1d_problem, py::arg("n"))
      .def_static("matrix_market", &matrix_market_problem, py::arg("a_path"),
                  py::arg("m_path") = std::nullopt)
      .def_static(
          "dense",
          [](const DenseMatrix& a, std::optional<DenseMatrix> mass) {
            SymmetricForm mf = mass ? SymmetricForm::dense(*mass)
                                    : SymmetricForm::identity(a.rows());
            return Eigenproblem(SymmetricForm::dense(a), mf);
          },
          py::arg("a"), py::arg("m") = std::nullopt,
          "Dense A and optional M (identity when omitted).")
      .def_property_readonly("dim", &Eigenproblem::dim)
      .def_property_readonly("has_metadata", &Eigenproblem::has_metadata)
      .def("a", [](const Eigenproblem& p) { return p.energy().to_dense(); })
      .def("m", [](const Eigenproblem& p) { return p.mass().to_dense(); })
      .def("with_oracle", [](const Eigenproblem& p) { return p.with_metadata(spectral_oracle(p)); },
           "Copy with metadata from the dense eigensolver.")
      .def("metadata_json", [](const Eigenproblem& p) { return metadata_to_json(p).dump(); });

  m.def("rayleigh_quotient", &rayleigh_quotient, py::arg("problem"), py::arg("u"));
  m.def("m_normalize", &m_normalize, py::arg("problem"), py::arg("u"));
  m.def("admissible_start", &admissible_start, py::arg("problem"), py::arg("gap_fraction"),
        py::arg("seed"));
  m.def("exact_correction", [](const Eigenproblem& p, const Vector& u) {
    return exact_correction(p, u).v;
  }, py::arg("problem"), py::arg("u"));
  m.def(
      "perturbed_correction",
      [](const Eigenproblem& p, const Vector& u, double eta, const std::string& policy) {
        auto r = perturbed_correction(p, u, eta, perturbation_policy_from_json(parse(policy)));
        return py::make_tuple(r.v, *r.w_ref, r.eta_actual);
      },
      py::arg("problem"), py::arg("u"), py::arg("eta"), py::arg("policy_json"),
      "Returns (v, w, eta_actual).");

  m.def(
      "run_json",
      [](const Eigenproblem& p, const Vector& u0, const std::string& config) {
        RunConfig cfg = run_config_from_json(parse(config));
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = run(p, u0, cfg);
        }
        return to_json(t).dump();
      },
      py::arg("problem"), py::arg("u0"), py::arg("config_json"));

  m.def(
      "verify_json",
      [](const std::string& records, const std::string& metadata, std::optional<double> eta) {
        return to_json(verify_records(records_arg(records), metadata_arg(metadata), eta)).dump();
      },
      py::arg("records_json"), py::arg("metadata_json"), py::arg("eta") = std::nullopt);

  m.def("q_factor", [](double l1, double l2, double eta, double lambda) {
    return q_factor(inputs(l1, l2, eta), lambda);
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"), py::arg("lambda_"));
  m.def("q_limit", [](double l1, double l2, double eta) { return q_limit(inputs(l1, l2, eta)); },
        py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"));
  m.def("kn_optimal_rate",
        [](double l1, double l2, double eta) { return kn_optimal_rate(inputs(l1, l2, eta)); },
        py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"));
  m.def("lemma31_bound", [](double l1, double l2, double eta, double lambda) {
    return lemma31_bound(inputs(l1, l2, eta), lambda);
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"), py::arg("lambda_"));
  m.def("lemma32_bound", [](double l1, double l2, double eta, double lambda, double w2) {
    return lemma32_bound(inputs(l1, l2, eta), lambda, w2);
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"), py::arg("lambda_"),
        py::arg("w_norm_sq"));
  m.def("lemma33_bound", [](double l1, double l2, double eta, double lambda) {
    return lemma33_bound(inputs(l1, l2, eta), lambda);
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"), py::arg("lambda_"));
  m.def("lemma34_constant",
        [](double l1, double l2, double eta) { return lemma34_constant(inputs(l1, l2, eta)); },
        py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"));
  m.def("thm32_bound", [](double l1, double l2, double eta, double lambda) {
    return thm32_bound(inputs(l1, l2, eta), lambda);
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("eta"), py::arg("lambda_"));
}
