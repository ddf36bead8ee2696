#pragma once

// JSON and CSV encodings of the library's data types. All JSON documents
// written at top level carry "schema_version": 1.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "invit/bounds.hpp"
#include "invit/iteration.hpp"
#include "invit/problem_gen.hpp"

namespace invit {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const json& j);

json to_json(const PerturbationPolicy& policy);
PerturbationPolicy perturbation_policy_from_json(const json& j);

json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const json& j);

json to_json(const StepRecord& rec);
StepRecord step_record_from_json(const json& j);

json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j);

/// metadata.json: lambda1, lambda2, multiplicity, per-vector residuals and
/// the E1 basis. Residuals are computed against the owning problem.
json metadata_to_json(const Eigenproblem& p);
/// Reads lambda1/lambda2 and, when present, the basis. The basis is not
/// validated here; attach it to a problem to validate.
SpectralMetadata metadata_from_json(const json& j);

json to_json(const VerificationReport& report);
VerificationReport verification_report_from_json(const json& j);

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

/// Fixed trajectory CSV header.
const std::vector<std::string>& trajectory_csv_header();
void write_trajectory_csv(std::ostream& out, const std::vector<StepRecord>& records);
/// Strict reader: every header column except subspace_dist is required.
std::vector<StepRecord> read_trajectory_csv(std::istream& in);

/// Plot-ready rate comparison: k, lambda_minus_lambda1, empirical_ratio,
/// q_of_lambda_k, q_limit, kn_optimal.
void write_rates_csv(std::ostream& out, const std::vector<StepRecord>& records,
                     const SpectralMetadata& meta);

/// Aggregated per-inequality table followed by the first failure, if any.
void write_report_table(std::ostream& out, const VerificationReport& report, bool per_step);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace invit
