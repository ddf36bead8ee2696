#include "invit/serialization.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "invit/format.hpp"

namespace invit {

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::MissingField, std::string("missing key '") + key + "'");
  }
  return j.at(key);
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return require(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("key '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get_as<T>(j, key);
}

// NaN and infinities are not representable in JSON; they map to null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_nan(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nan("");
  return get_as<double>(j, key);
}

void check_schema_version(const json& j) {
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion) {
    throw Error(ErrorCode::SchemaError, "unsupported schema_version");
  }
}

std::string stop_rule_name(CgStopRule rule) {
  return rule == CgStopRule::Certified ? "certified" : "residual-heuristic";
}

CgStopRule stop_rule_from_string(const std::string& name) {
  if (name == "certified") return CgStopRule::Certified;
  if (name == "residual-heuristic") return CgStopRule::ResidualHeuristic;
  throw Error(ErrorCode::InvalidArgument, "unknown CG stop rule '" + name + "'");
}

}  // namespace

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "vector must be a JSON array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::SchemaError, "vector entries must be numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const GeneratorSpec& spec) {
  json params = json::object();
  switch (spec.kind) {
    case GeneratorKind::Diagonal: params["eigenvalues"] = spec.eigenvalues; break;
    case GeneratorKind::Laplacian1d:
    case GeneratorKind::Laplacian2d:
    case GeneratorKind::Fem1d: params["n"] = spec.n; break;
    case GeneratorKind::MatrixMarket:
      params["A"] = spec.a_path.string();
      if (spec.m_path) params["M"] = spec.m_path->string();
      break;
  }
  return {{"kind", to_string(spec.kind)}, {"params", params}, {"seed", spec.seed}};
}

GeneratorSpec generator_spec_from_json(const json& j) {
  GeneratorSpec spec;
  spec.kind = generator_kind_from_string(get_as<std::string>(j, "kind"));
  spec.seed = get_or<std::uint64_t>(j, "seed", 0);
  const json params = j.contains("params") ? j.at("params") : json::object();
  switch (spec.kind) {
    case GeneratorKind::Diagonal:
      spec.eigenvalues = get_as<std::vector<double>>(params, "eigenvalues");
      break;
    case GeneratorKind::Laplacian1d:
    case GeneratorKind::Laplacian2d:
    case GeneratorKind::Fem1d:
      spec.n = get_as<int>(params, "n");
      break;
    case GeneratorKind::MatrixMarket:
      spec.a_path = get_as<std::string>(params, "A");
      if (params.contains("M") && !params.at("M").is_null()) {
        spec.m_path = std::filesystem::path(get_as<std::string>(params, "M"));
      }
      break;
  }
  spec.validate();
  return spec;
}

json to_json(const PerturbationPolicy& policy) {
  return {{"kind", to_string(policy.kind)},
          {"n_candidates", policy.n_candidates},
          {"seed", policy.seed},
          {"budget_fraction", policy.budget_fraction}};
}

PerturbationPolicy perturbation_policy_from_json(const json& j) {
  PerturbationPolicy p;
  p.kind = perturbation_kind_from_string(get_or<std::string>(j, "kind", "random"));
  p.n_candidates = get_or<int>(j, "n_candidates", 16);
  p.seed = get_or<std::uint64_t>(j, "seed", 0);
  p.budget_fraction = get_or<double>(j, "budget_fraction", 1.0);
  p.validate();
  return p;
}

json to_json(const RunConfig& cfg) {
  return {{"eta", cfg.eta},
          {"solver_mode", to_string(cfg.solver_mode)},
          {"policy", to_json(cfg.policy)},
          {"max_steps", cfg.max_steps},
          {"stop_tol", cfg.stop_tol},
          {"record_subspace_distance", cfg.record_subspace_distance},
          {"eta_schedule", cfg.eta_schedule},
          {"cg",
           {{"max_iter", cfg.cg.max_iter},
            {"stop_rule", stop_rule_name(cfg.cg.rule)},
            {"lambda_min_estimate", cfg.cg.lambda_min_estimate}}},
          {"record_iterates", cfg.record_iterates}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.eta = get_or<double>(j, "eta", 0.0);
  cfg.solver_mode = solver_mode_from_string(get_or<std::string>(j, "solver_mode", "exact"));
  if (j.contains("policy")) cfg.policy = perturbation_policy_from_json(j.at("policy"));
  cfg.max_steps = get_or<int>(j, "max_steps", cfg.max_steps);
  cfg.stop_tol = get_or<double>(j, "stop_tol", cfg.stop_tol);
  cfg.record_subspace_distance = get_or<bool>(j, "record_subspace_distance", true);
  cfg.eta_schedule = get_or<std::vector<double>>(j, "eta_schedule", {});
  if (j.contains("cg")) {
    const auto& cg = j.at("cg");
    cfg.cg.max_iter = get_or<int>(cg, "max_iter", cfg.cg.max_iter);
    cfg.cg.rule = stop_rule_from_string(get_or<std::string>(cg, "stop_rule", "certified"));
    cfg.cg.lambda_min_estimate = get_or<double>(cg, "lambda_min_estimate", 1.0);
  }
  cfg.record_iterates = get_or<bool>(j, "record_iterates", false);
  cfg.validate();
  return cfg;
}

json to_json(const StepRecord& r) {
  return {{"k", r.k},
          {"lambda", r.lambda},
          {"lambda_next", r.lambda_next},
          {"w_norm", r.w_norm},
          {"v_norm", r.v_norm},
          {"v_norm_mass", r.v_norm_mass},
          {"u_minus_w_norm", r.u_minus_w_norm},
          {"u_minus_v_norm", r.u_minus_v_norm},
          {"u_diff_norm", r.u_diff_norm},
          {"subspace_dist", r.subspace_dist ? json(*r.subspace_dist) : json(nullptr)},
          {"eta_used", r.eta_used},
          {"eta_actual", r.eta_actual},
          {"cg_iterations", r.cg_iterations},
          {"fixed_point", r.fixed_point}};
}

StepRecord step_record_from_json(const json& j) {
  StepRecord r;
  r.k = get_as<int>(j, "k");
  r.lambda = get_as<double>(j, "lambda");
  r.lambda_next = get_as<double>(j, "lambda_next");
  r.w_norm = get_as<double>(j, "w_norm");
  r.v_norm = get_as<double>(j, "v_norm");
  r.v_norm_mass = get_as<double>(j, "v_norm_mass");
  r.u_minus_w_norm = get_as<double>(j, "u_minus_w_norm");
  r.u_minus_v_norm = get_as<double>(j, "u_minus_v_norm");
  r.u_diff_norm = get_as<double>(j, "u_diff_norm");
  if (j.contains("subspace_dist") && !j.at("subspace_dist").is_null()) {
    r.subspace_dist = get_as<double>(j, "subspace_dist");
  }
  r.eta_used = get_as<double>(j, "eta_used");
  r.eta_actual = get_or<double>(j, "eta_actual", r.eta_used);
  r.cg_iterations = get_or<int>(j, "cg_iterations", 0);
  r.fixed_point = get_or<bool>(j, "fixed_point", false);
  return r;
}

json to_json(const Trajectory& t) {
  json records = json::array();
  for (const auto& r : t.records) records.push_back(to_json(r));
  return {{"schema_version", kSchemaVersion},
          {"config", to_json(t.config)},
          {"stop_reason", to_string(t.stop_reason)},
          {"stop_detail", t.stop_detail},
          {"records", records},
          {"final_u", vector_to_json(t.final_u)}};
}

Trajectory trajectory_from_json(const json& j) {
  check_schema_version(j);
  Trajectory t;
  if (j.contains("config")) t.config = run_config_from_json(j.at("config"));
  t.stop_reason = stop_reason_from_string(get_or<std::string>(j, "stop_reason", "max_steps"));
  t.stop_detail = get_or<std::string>(j, "stop_detail", "");
  const auto& records = require(j, "records");
  if (!records.is_array()) throw Error(ErrorCode::SchemaError, "records must be an array");
  for (const auto& r : records) t.records.push_back(step_record_from_json(r));
  if (j.contains("final_u")) t.final_u = vector_from_json(j.at("final_u"));
  return t;
}

json metadata_to_json(const Eigenproblem& p) {
  const auto& meta = p.metadata();
  json residuals = json::array();
  double max_res = 0.0;
  json basis = json::array();
  for (const auto& chi : meta.e1_basis) {
    const double res = relative_eigen_residual(p.energy(), p.mass(), meta.lambda1, chi);
    max_res = std::max(max_res, res);
    residuals.push_back(res);
    basis.push_back(vector_to_json(chi));
  }
  return {{"schema_version", kSchemaVersion},
          {"dim", p.dim()},
          {"lambda1", meta.lambda1},
          {"lambda2", meta.lambda2},
          {"multiplicity", meta.multiplicity()},
          {"residuals", residuals},
          {"max_residual", max_res},
          {"e1_basis", basis}};
}

SpectralMetadata metadata_from_json(const json& j) {
  check_schema_version(j);
  SpectralMetadata meta;
  meta.lambda1 = get_as<double>(j, "lambda1");
  meta.lambda2 = get_as<double>(j, "lambda2");
  if (j.contains("e1_basis")) {
    for (const auto& v : j.at("e1_basis")) meta.e1_basis.push_back(vector_from_json(v));
  }
  BoundInputs{meta.lambda1, meta.lambda2, 0.0}.validate();
  return meta;
}

json to_json(const VerificationReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"step", e.step},
                       {"id", to_string(e.id)},
                       {"lhs", number(e.lhs)},
                       {"rhs", number(e.rhs)},
                       {"margin", number(e.margin)},
                       {"applicable", e.applicable},
                       {"pass", e.pass}});
  }
  json failure = nullptr;
  if (report.first_failure) {
    failure = {{"step", report.first_failure->step}, {"id", to_string(report.first_failure->id)}};
  }
  return {{"schema_version", kSchemaVersion},
          {"all_pass", report.all_pass},
          {"first_failure", failure},
          {"min_margin_T31", report.min_margin_t31 ? json(*report.min_margin_t31) : json(nullptr)},
          {"max_ratio_over_q",
           report.max_ratio_over_q ? number(*report.max_ratio_over_q) : json(nullptr)},
          {"entries", entries}};
}

VerificationReport verification_report_from_json(const json& j) {
  check_schema_version(j);
  VerificationReport report;
  report.all_pass = get_as<bool>(j, "all_pass");
  if (j.contains("first_failure") && !j.at("first_failure").is_null()) {
    const auto& f = j.at("first_failure");
    report.first_failure = FailureLocation{get_as<int>(f, "step"),
                                           bound_id_from_string(get_as<std::string>(f, "id"))};
  }
  if (j.contains("min_margin_T31") && !j.at("min_margin_T31").is_null()) {
    report.min_margin_t31 = j.at("min_margin_T31").get<double>();
  }
  if (j.contains("max_ratio_over_q") && !j.at("max_ratio_over_q").is_null()) {
    report.max_ratio_over_q = j.at("max_ratio_over_q").get<double>();
  }
  for (const auto& e : require(j, "entries")) {
    report.entries.push_back(CheckEntry{get_as<int>(e, "step"),
                                        bound_id_from_string(get_as<std::string>(e, "id")),
                                        number_or_nan(e, "lhs"), number_or_nan(e, "rhs"),
                                        number_or_nan(e, "margin"), get_as<bool>(e, "applicable"),
                                        get_as<bool>(e, "pass")});
  }
  return report;
}

const std::vector<std::string>& trajectory_csv_header() {
  static const std::vector<std::string> header = {
      "k",          "lambda",         "lambda_next",    "w_norm",
      "v_norm",     "v_norm_mass",    "u_minus_w_norm", "u_minus_v_norm",
      "u_diff_norm", "subspace_dist", "eta_used"};
  return header;
}

void write_trajectory_csv(std::ostream& out, const std::vector<StepRecord>& records) {
  const auto& header = trajectory_csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : records) {
    out << r.k << ',' << format_double(r.lambda) << ',' << format_double(r.lambda_next) << ','
        << format_double(r.w_norm) << ',' << format_double(r.v_norm) << ','
        << format_double(r.v_norm_mass) << ',' << format_double(r.u_minus_w_norm) << ','
        << format_double(r.u_minus_v_norm) << ',' << format_double(r.u_diff_norm) << ','
        << (r.subspace_dist ? format_double(*r.subspace_dist) : std::string()) << ','
        << format_double(r.eta_used) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    if (!c.empty() && c.back() == '\r') c.pop_back();
  }
  return cells;
}

}  // namespace

std::vector<StepRecord> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty trajectory CSV");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(header[i], i).second) {
      throw Error(ErrorCode::SchemaError, "duplicate CSV column '" + header[i] + "'");
    }
  }
  for (const auto& name : trajectory_csv_header()) {
    if (name != "subspace_dist" && !col.count(name)) {
      throw Error(ErrorCode::SchemaError, "trajectory CSV lacks column '" + name + "'");
    }
  }
  std::vector<StepRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "CSV line " + std::to_string(line_no) + ": wrong cell count");
    }
    auto num = [&](const char* name) {
      const auto value = parse_double(cells[col.at(name)]);
      if (!value) {
        throw Error(ErrorCode::ParseError,
                    "CSV line " + std::to_string(line_no) + ": bad value in column " + name);
      }
      return *value;
    };
    StepRecord r;
    r.k = static_cast<int>(num("k"));
    r.lambda = num("lambda");
    r.lambda_next = num("lambda_next");
    r.w_norm = num("w_norm");
    r.v_norm = num("v_norm");
    r.v_norm_mass = num("v_norm_mass");
    r.u_minus_w_norm = num("u_minus_w_norm");
    r.u_minus_v_norm = num("u_minus_v_norm");
    r.u_diff_norm = num("u_diff_norm");
    if (col.count("subspace_dist") && !cells[col.at("subspace_dist")].empty()) {
      r.subspace_dist = num("subspace_dist");
    }
    r.eta_used = num("eta_used");
    r.eta_actual = r.eta_used;
    records.push_back(r);
  }
  return records;
}

void write_rates_csv(std::ostream& out, const std::vector<StepRecord>& records,
                     const SpectralMetadata& meta) {
  out << "k,lambda_minus_lambda1,empirical_ratio,q_of_lambda_k,q_limit,kn_optimal\n";
  for (const auto& r : records) {
    const BoundInputs b{meta.lambda1, meta.lambda2, r.eta_used};
    const double lam = std::clamp(r.lambda, meta.lambda1, meta.lambda2);
    const double gap = r.lambda - meta.lambda1;
    const double ratio = gap > 0.0 ? (r.lambda_next - meta.lambda1) / gap : std::nan("");
    out << r.k << ',' << format_double(gap) << ','
        << (std::isfinite(ratio) ? format_double(ratio) : std::string()) << ','
        << format_double(q_factor(b, lam)) << ',' << format_double(q_limit(b)) << ','
        << format_double(kn_optimal_rate(b)) << '\n';
  }
}

void write_report_table(std::ostream& out, const VerificationReport& report, bool per_step) {
  struct Tally {
    int applicable = 0;
    int passed = 0;
    double min_margin = HUGE_VAL;
  };
  std::map<std::string, Tally> tally;
  for (const auto& e : report.entries) {
    auto& t = tally[to_string(e.id)];
    if (!e.applicable) continue;
    ++t.applicable;
    if (e.pass) ++t.passed;
    if (std::isfinite(e.margin)) t.min_margin = std::min(t.min_margin, e.margin);
  }
  out << std::left << std::setw(8) << "check" << std::right << std::setw(12) << "applicable"
      << std::setw(10) << "passed" << std::setw(26) << "min margin" << '\n';
  for (const auto& [id, t] : tally) {
    out << std::left << std::setw(8) << id << std::right << std::setw(12) << t.applicable
        << std::setw(10) << t.passed << std::setw(26)
        << (t.applicable ? format_double(t.min_margin) : std::string("-")) << '\n';
  }
  if (per_step) {
    out << '\n'
        << std::setw(6) << "step" << std::setw(6) << "id" << std::setw(26) << "lhs" << std::setw(26)
        << "rhs" << std::setw(6) << "pass" << '\n';
    for (const auto& e : report.entries) {
      if (!e.applicable) continue;
      out << std::setw(6) << e.step << std::setw(6) << to_string(e.id) << std::setw(26)
          << format_double(e.lhs) << std::setw(26) << format_double(e.rhs) << std::setw(6)
          << (e.pass ? "yes" : "NO") << '\n';
    }
  }
  out << "all_pass: " << (report.all_pass ? "true" : "false") << '\n';
  if (report.first_failure) {
    out << "first_failure: step " << report.first_failure->step << ", "
        << to_string(report.first_failure->id) << '\n';
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace invit
