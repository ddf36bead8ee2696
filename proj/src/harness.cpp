#include "invit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "invit/bounds.hpp"
#include "invit/format.hpp"
#include "invit/matrix_market.hpp"

namespace invit {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::MissingField:
    case ErrorCode::IoError:
    case ErrorCode::PreconditionViolation:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::ClusterAmbiguity:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

void apply_override(json& manifest, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::InvalidArgument, "override must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  json* node = &manifest;
  std::istringstream keys(path);
  std::string key;
  std::vector<std::string> parts;
  while (std::getline(keys, key, '.')) parts.push_back(key);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& child = (*node)[parts[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) {
      throw Error(ErrorCode::InvalidArgument, "override path '" + path + "' crosses a non-object");
    }
    node = &child;
  }
  (*node)[parts.back()] = value;
}

RunManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "manifest must be a JSON object");
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion) {
    throw Error(ErrorCode::SchemaError, "unsupported manifest schema_version");
  }
  RunManifest m;
  if (!j.contains("generator")) throw Error(ErrorCode::MissingField, "manifest needs 'generator'");
  m.generator = generator_spec_from_json(j.at("generator"));
  m.start.seed = m.generator.seed;
  try {
    if (j.contains("start")) {
      const auto& s = j.at("start");
      m.start.gap_fraction = s.value("gap_fraction", m.start.gap_fraction);
      m.start.seed = s.value("seed", m.start.seed);
      if (s.contains("vector_file")) m.start.vector_file = s.at("vector_file").get<std::string>();
    }
    if (!(m.start.gap_fraction > 0.0 && m.start.gap_fraction < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "start.gap_fraction must lie in (0, 1)");
    }
    if (j.contains("run")) m.run = run_config_from_json(j.at("run"));
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
      const auto& s = j.at("sweep");
      SweepSpec sweep;
      sweep.eta = s.value("eta", std::vector<double>{});
      sweep.gap_fraction = s.value("gap_fraction", std::vector<double>{});
      sweep.seeds = s.value("seeds", std::vector<std::uint64_t>{});
      if (sweep.eta.empty() || sweep.gap_fraction.empty() || sweep.seeds.empty()) {
        throw Error(ErrorCode::InvalidArgument, "sweep lists must be nonempty");
      }
      for (double e : sweep.eta) {
        if (!(e >= 0.0 && e < 1.0)) throw Error(ErrorCode::InvalidArgument, "sweep eta must lie in [0, 1)");
      }
      for (double g : sweep.gap_fraction) {
        if (!(g > 0.0 && g < 1.0)) {
          throw Error(ErrorCode::InvalidArgument, "sweep gap_fraction must lie in (0, 1)");
        }
      }
      m.sweep = std::move(sweep);
    }
    m.output_dir = j.value("output_dir", std::string("out"));
    if (j.contains("formats")) {
      const auto formats = j.at("formats").get<std::vector<std::string>>();
      if (formats.empty()) throw Error(ErrorCode::InvalidArgument, "formats must be nonempty");
      m.write_csv = m.write_json = false;
      for (const auto& f : formats) {
        if (f == "csv") {
          m.write_csv = true;
        } else if (f == "json") {
          m.write_json = true;
        } else {
          throw Error(ErrorCode::InvalidArgument, "unknown format '" + f + "'");
        }
      }
    }
    m.workers = j.value("workers", 1);
    if (m.workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("manifest: ") + e.what());
  }
  return m;
}

json manifest_to_json(const RunManifest& m) {
  json j = {{"schema_version", kSchemaVersion},
            {"generator", to_json(m.generator)},
            {"start", {{"gap_fraction", m.start.gap_fraction}, {"seed", m.start.seed}}},
            {"run", to_json(m.run)},
            {"output_dir", m.output_dir.string()},
            {"workers", m.workers}};
  if (m.start.vector_file) j["start"]["vector_file"] = m.start.vector_file->string();
  json formats = json::array();
  if (m.write_csv) formats.push_back("csv");
  if (m.write_json) formats.push_back("json");
  j["formats"] = formats;
  if (m.sweep) {
    j["sweep"] = {{"eta", m.sweep->eta},
                  {"gap_fraction", m.sweep->gap_fraction},
                  {"seeds", m.sweep->seeds}};
  }
  return j;
}

RunManifest load_manifest(const CommandOptions& opts) {
  json doc = read_json_file(opts.manifest_path);
  for (const auto& o : opts.overrides) apply_override(doc, o);
  if (opts.out_dir) doc["output_dir"] = opts.out_dir->string();
  if (opts.workers) doc["workers"] = *opts.workers;
  // Relative matrix paths resolve against the manifest's directory.
  auto m = manifest_from_json(doc);
  const fs::path base = opts.manifest_path.parent_path();
  if (m.generator.kind == GeneratorKind::MatrixMarket) {
    if (m.generator.a_path.is_relative()) m.generator.a_path = base / m.generator.a_path;
    if (m.generator.m_path && m.generator.m_path->is_relative()) {
      m.generator.m_path = base / *m.generator.m_path;
    }
  }
  if (m.start.vector_file && m.start.vector_file->is_relative()) {
    m.start.vector_file = base / *m.start.vector_file;
  }
  return m;
}

Vector make_start(const Eigenproblem& p, const StartSpec& start) {
  if (start.vector_file) {
    Vector u = mm::read_vector_file(*start.vector_file);
    require_dim(p, u);
    return u;
  }
  if (!p.has_metadata()) {
    throw Error(ErrorCode::InvalidArgument,
                "problem has no spectral metadata; provide start.vector_file");
  }
  return admissible_start(p, start.gap_fraction, start.seed);
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string trajectory_csv(const std::vector<StepRecord>& records) {
  std::ostringstream out;
  write_trajectory_csv(out, records);
  return out.str();
}

}  // namespace

int cmd_generate(const RunManifest& m, std::ostream& log) {
  const auto p = build_problem(m.generator);
  ensure_dir(m.output_dir);
  {
    std::ostringstream a, mass;
    mm::write(a, p.energy().to_sparse());
    mm::write(mass, p.mass().to_sparse());
    write_text_file(m.output_dir / "A.mtx", a.str());
    write_text_file(m.output_dir / "M.mtx", mass.str());
  }
  if (p.has_metadata()) {
    write_text_file(m.output_dir / "metadata.json", dump(metadata_to_json(p)));
    log << "generated " << to_string(m.generator.kind) << " dim=" << p.dim()
        << " lambda1=" << format_double(p.metadata().lambda1)
        << " lambda2=" << format_double(p.metadata().lambda2) << '\n';
  } else {
    log << "generated " << to_string(m.generator.kind) << " dim=" << p.dim()
        << " (no spectral metadata: dimension above the oracle limit)\n";
  }
  return kExitOk;
}

int cmd_run(const RunManifest& m, std::ostream& log, bool verbose) {
  const auto p = build_problem(m.generator);
  const Vector u0 = make_start(p, m.start);
  const auto t = run(p, u0, m.run);

  ensure_dir(m.output_dir);
  if (m.write_csv) write_text_file(m.output_dir / "trajectory.csv", trajectory_csv(t.records));
  if (m.write_json) write_text_file(m.output_dir / "trajectory.json", dump(to_json(t)));
  log << "run: " << t.records.size() << " steps, stop_reason=" << to_string(t.stop_reason)
      << ", lambda=" << format_double(t.records.empty() ? rayleigh_quotient(p, t.final_u)
                                                        : t.records.back().lambda_next)
      << '\n';
  if (!p.has_metadata()) {
    log << "no spectral metadata; verification skipped\n";
    return kExitOk;
  }
  const auto report = verify_trajectory(t, p.metadata());
  write_text_file(m.output_dir / "metadata.json", dump(metadata_to_json(p)));
  if (m.write_json) write_text_file(m.output_dir / "report.json", dump(to_json(report)));
  if (m.write_csv) {
    std::ostringstream rates;
    write_rates_csv(rates, t.records, p.metadata());
    write_text_file(m.output_dir / "rates.csv", rates.str());
  }
  write_report_table(log, report, verbose);
  return report.all_pass ? kExitOk : kExitFailure;
}

namespace {

struct SweepCell {
  double eta = 0.0;
  double gap = 0.0;
  std::uint64_t seed = 0;
  std::optional<int> steps_to_tol;
  int steps = 0;
  bool all_pass = false;
  std::optional<double> min_margin_t31;
  std::string stop_reason;
  std::string error;
};

}  // namespace

int cmd_sweep(const RunManifest& m, std::ostream& log) {
  if (!m.sweep) throw Error(ErrorCode::InvalidArgument, "manifest has no sweep block");
  const auto p = build_problem(m.generator);
  if (!p.has_metadata()) {
    throw Error(ErrorCode::InvalidArgument, "sweeps need spectral metadata for verification");
  }
  const auto& sw = *m.sweep;
  std::vector<SweepCell> cells;
  for (double eta : sw.eta) {
    for (double gap : sw.gap_fraction) {
      for (auto seed : sw.seeds) {
        SweepCell cell;
        cell.eta = eta;
        cell.gap = gap;
        cell.seed = seed;
        cells.push_back(std::move(cell));
      }
    }
  }
  ensure_dir(m.output_dir);

  auto work = [&](SweepCell& cell, std::size_t index) {
    try {
      RunConfig cfg = m.run;
      cfg.eta = cell.eta;
      cfg.eta_schedule.clear();
      cfg.policy.seed = cell.seed;
      const Vector u0 = admissible_start(p, cell.gap, cell.seed);
      const auto t = run(p, u0, cfg);
      const auto report = verify_trajectory(t, p.metadata());
      cell.steps = static_cast<int>(t.records.size());
      if (t.stop_reason != StopReason::MaxSteps) cell.steps_to_tol = cell.steps;
      cell.all_pass = report.all_pass;
      cell.min_margin_t31 = report.min_margin_t31;
      cell.stop_reason = to_string(t.stop_reason);
      const fs::path dir = m.output_dir / "cells" / ("cell_" + std::to_string(index));
      ensure_dir(dir);
      if (m.write_csv) write_text_file(dir / "trajectory.csv", trajectory_csv(t.records));
      if (m.write_json) write_text_file(dir / "report.json", dump(to_json(report)));
    } catch (const std::exception& e) {
      cell.all_pass = false;
      cell.error = e.what();
    }
  };

  const int workers = std::max(1, std::min<int>(m.workers, static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) work(cells[i], i);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Trend column: steps_to_tol non-decreasing in eta at fixed (gap, seed).
  std::map<std::pair<double, std::uint64_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cells.size(); ++i) groups[{cells[i].gap, cells[i].seed}].push_back(i);
  std::vector<std::string> trend(cells.size(), "");
  for (auto& [key, idx] : groups) {
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return cells[a].eta < cells[b].eta; });
    for (std::size_t r = 1; r < idx.size(); ++r) {
      const auto& prev = cells[idx[r - 1]];
      const auto& cur = cells[idx[r]];
      if (prev.steps_to_tol && cur.steps_to_tol) {
        trend[idx[r]] = *cur.steps_to_tol >= *prev.steps_to_tol ? "1" : "0";
      }
    }
  }

  std::ostringstream summary;
  summary << "eta,gap_fraction,seed,steps_to_tol,all_pass,min_margin_T31,stop_reason,"
             "steps_nondecreasing_in_eta,error\n";
  bool all_pass = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    all_pass = all_pass && c.all_pass;
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    summary << format_double(c.eta) << ',' << format_double(c.gap) << ',' << c.seed << ','
            << (c.steps_to_tol ? std::to_string(*c.steps_to_tol) : std::string()) << ','
            << (c.all_pass ? "true" : "false") << ','
            << (c.min_margin_t31 ? format_double(*c.min_margin_t31) : std::string()) << ','
            << c.stop_reason << ',' << trend[i] << ',' << err << '\n';
  }
  write_text_file(m.output_dir / "summary.csv", summary.str());
  const auto failed = std::count_if(cells.begin(), cells.end(), [](auto& c) { return !c.all_pass; });
  log << "sweep: " << cells.size() << " cells, " << failed << " failed\n";
  return all_pass ? kExitOk : kExitFailure;
}

int cmd_verify(const VerifyOptions& opts, std::ostream& log) {
  std::vector<StepRecord> records;
  const auto ext = opts.trajectory_file.extension().string();
  if (ext == ".json") {
    records = trajectory_from_json(read_json_file(opts.trajectory_file)).records;
  } else {
    std::ifstream in(opts.trajectory_file);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + opts.trajectory_file.string());
    records = read_trajectory_csv(in);
  }
  const auto meta = metadata_from_json(read_json_file(opts.metadata_file));
  const auto report = verify_records(records, meta, opts.eta);
  if (opts.out_dir) {
    ensure_dir(*opts.out_dir);
    write_text_file(*opts.out_dir / "report.json", dump(to_json(report)));
  }
  write_report_table(log, report, opts.verbose);
  return report.all_pass ? kExitOk : kExitFailure;
}

}  // namespace invit
