#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "invit/format.hpp"
#include "invit/harness.hpp"
#include "invit/matrix_market.hpp"

using namespace invit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("invit_harness_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

json diag10_manifest(const fs::path& out) {
  json j = json::parse(R"({
    "generator": {"kind": "diagonal", "params": {"eigenvalues": [1,2,3,4,5,6,7,8,9,10]}, "seed": 1},
    "start": {"gap_fraction": 0.5},
    "run": {"eta": 0.0, "solver_mode": "exact"}
  })");
  j["output_dir"] = out.string();
  return j;
}

int run_guarded(auto&& body) {
  std::ostringstream err;
  return guarded(err, body);
}

}  // namespace

TEST_CASE("apply_override") {
  json j = {{"run", {{"eta", 0.1}}}};
  apply_override(j, "run.eta=0.5");
  CHECK(j["run"]["eta"] == 0.5);
  apply_override(j, "run.policy.kind=aligned");
  CHECK(j["run"]["policy"]["kind"] == "aligned");
  apply_override(j, "sweep.seeds=[1,2]");
  CHECK(j["sweep"]["seeds"].size() == 2);
  CHECK_THROWS_AS(apply_override(j, "noequals"), Error);
  CHECK_THROWS_AS(apply_override(j, "run.eta.x=1"), Error);
}

TEST_CASE("manifest validation") {
  TempDir tmp("manifest");
  auto j = diag10_manifest(tmp.path);
  const auto m = manifest_from_json(j);
  CHECK(m.generator.kind == GeneratorKind::Diagonal);
  CHECK(m.start.seed == 1);
  const auto back = manifest_from_json(manifest_to_json(m));
  CHECK(back.generator.eigenvalues == m.generator.eigenvalues);
  CHECK(back.output_dir == m.output_dir);

  auto bad = j;
  bad["run"]["eta"] = 1.5;
  try {
    manifest_from_json(bad);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(exit_code_for(e) == kExitUsage);
  }

  auto empty_sweep = j;
  empty_sweep["sweep"] = {{"eta", json::array()}, {"gap_fraction", {0.5}}, {"seeds", {1}}};
  CHECK_THROWS_AS(manifest_from_json(empty_sweep), Error);
  auto bad_format = j;
  bad_format["formats"] = {"xml"};
  CHECK_THROWS_AS(manifest_from_json(bad_format), Error);
  auto no_gen = j;
  no_gen.erase("generator");
  try {
    manifest_from_json(no_gen);
    FAIL("expected missing field");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingField);
  }
}

TEST_CASE("invalid eta exits 2 and writes nothing") {
  TempDir tmp("bad_eta");
  const fs::path out = tmp.path / "out";
  auto j = diag10_manifest(out);
  write_text_file(tmp.path / "m.json", j.dump());
  CommandOptions opts;
  opts.manifest_path = tmp.path / "m.json";
  opts.overrides = {"run.eta=1.5"};
  std::ostringstream log;
  const int code = run_guarded([&] { return cmd_run(load_manifest(opts), log); });
  CHECK(code == kExitUsage);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cmd_generate") {
  TempDir tmp("generate");
  std::ostringstream log;

  RunManifest m;
  m.generator.kind = GeneratorKind::Diagonal;
  m.generator.eigenvalues = {1, 2, 3};
  m.output_dir = tmp.path / "diag";
  CHECK(cmd_generate(m, log) == kExitOk);
  const auto meta = read_json_file(m.output_dir / "metadata.json");
  CHECK(meta.at("lambda1") == 1.0);
  CHECK(meta.at("lambda2") == 2.0);
  CHECK(meta.at("schema_version") == kSchemaVersion);

  m.generator.kind = GeneratorKind::Laplacian1d;
  m.generator.n = 3;
  m.output_dir = tmp.path / "lap";
  CHECK(cmd_generate(m, log) == kExitOk);
  const DenseMatrix a = DenseMatrix(mm::read_file(m.output_dir / "A.mtx"));
  CHECK((a - laplacian_1d(3).energy().to_dense()).norm() == 0.0);
  CHECK((DenseMatrix(mm::read_file(m.output_dir / "M.mtx")) - DenseMatrix::Identity(3, 3)).norm() == 0.0);

  m.generator.kind = GeneratorKind::Fem1d;
  m.generator.n = 10;
  m.output_dir = tmp.path / "fem";
  CHECK(cmd_generate(m, log) == kExitOk);
  CHECK(read_json_file(m.output_dir / "metadata.json").at("max_residual").get<double>() <= 1e-10);

  // The written matrices define the same problem again.
  RunManifest mmf;
  mmf.generator.kind = GeneratorKind::MatrixMarket;
  mmf.generator.a_path = m.output_dir / "A.mtx";
  mmf.generator.m_path = m.output_dir / "M.mtx";
  const auto p = build_problem(mmf.generator);
  CHECK(std::abs(p.metadata().lambda1 - fem1d_problem(10).metadata().lambda1) <= 1e-12 * p.metadata().lambda1);
}

TEST_CASE("cmd_run and cmd_verify round trip") {
  TempDir tmp("run");
  const auto m = manifest_from_json(diag10_manifest(tmp.path));
  std::ostringstream log;
  REQUIRE(cmd_run(m, log) == kExitOk);
  for (const char* f : {"trajectory.csv", "trajectory.json", "report.json", "rates.csv", "metadata.json"}) {
    CHECK(fs::exists(tmp.path / f));
  }
  const auto report = verification_report_from_json(read_json_file(tmp.path / "report.json"));
  CHECK(report.all_pass);

  for (const char* traj : {"trajectory.csv", "trajectory.json"}) {
    VerifyOptions v;
    v.trajectory_file = tmp.path / traj;
    v.metadata_file = tmp.path / "metadata.json";
    v.out_dir = tmp.path / (std::string("verify_") + traj);
    CHECK(cmd_verify(v, log) == kExitOk);
    const auto again = verification_report_from_json(read_json_file(*v.out_dir / "report.json"));
    REQUIRE(again.entries.size() == report.entries.size());
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
      const auto& a = report.entries[i];
      const auto& b = again.entries[i];
      CHECK(a.id == b.id);
      CHECK(a.applicable == b.applicable);
      if (a.applicable) CHECK(std::abs(a.margin - b.margin) <= 1e-12);
    }
  }

  // Determinism: a second run writes identical bytes.
  const fs::path second = tmp.path / "second";
  auto m2 = m;
  m2.output_dir = second;
  REQUIRE(cmd_run(m2, log) == kExitOk);
  for (const char* f : {"trajectory.csv", "trajectory.json", "report.json", "rates.csv"}) {
    CHECK(slurp(tmp.path / f) == slurp(second / f));
  }
}

TEST_CASE("cmd_verify detects a corrupted lambda column and tolerates a missing subspace_dist") {
  TempDir tmp("verify");
  const auto m = manifest_from_json(diag10_manifest(tmp.path));
  std::ostringstream log;
  REQUIRE(cmd_run(m, log) == kExitOk);
  auto rows = lines_of(tmp.path / "trajectory.csv");
  REQUIRE(rows.size() >= 3);

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  auto join = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    return out;
  };

  // Raise lambda_next of step 1 to lambda: no decrease at all.
  auto bad = rows;
  auto cells = split(bad[2]);
  cells[2] = cells[1];
  bad[2] = join(cells);
  std::string text;
  for (const auto& r : bad) text += r + "\n";
  write_text_file(tmp.path / "bad.csv", text);
  VerifyOptions v;
  v.trajectory_file = tmp.path / "bad.csv";
  v.metadata_file = tmp.path / "metadata.json";
  v.out_dir = tmp.path / "bad";
  CHECK(cmd_verify(v, log) == kExitFailure);
  const auto rep = read_json_file(tmp.path / "bad" / "report.json");
  CHECK(rep.at("first_failure").at("step") == 1);
  CHECK(rep.at("first_failure").at("id") == "T3.1");

  // Drop the subspace_dist column.
  std::string stripped;
  for (const auto& r : rows) {
    auto c = split(r);
    c.erase(c.begin() + 9);
    stripped += join(c) + "\n";
  }
  write_text_file(tmp.path / "nodist.csv", stripped);
  v.trajectory_file = tmp.path / "nodist.csv";
  v.out_dir = tmp.path / "nodist";
  CHECK(cmd_verify(v, log) == kExitOk);
  const auto nodist = verification_report_from_json(read_json_file(tmp.path / "nodist" / "report.json"));
  int t32 = 0;
  for (const auto& e : nodist.entries) {
    if (e.id == BoundId::T32) {
      ++t32;
      CHECK_FALSE(e.applicable);
    } else if (e.id != BoundId::L34) {
      CHECK(e.applicable);
    }
  }
  CHECK(t32 == static_cast<int>(rows.size()) - 1);

  v.trajectory_file = tmp.path / "missing.csv";
  CHECK(run_guarded([&] { return cmd_verify(v, log); }) == kExitUsage);
  write_text_file(tmp.path / "garbage.json", "{not json");
  v.trajectory_file = tmp.path / "garbage.json";
  CHECK(run_guarded([&] { return cmd_verify(v, log); }) == kExitUsage);
}

TEST_CASE("fixed-point start writes a single row") {
  TempDir tmp("fixed");
  write_text_file(tmp.path / "e1.txt", "1\n0\n0\n");
  auto j = json::parse(R"({
    "generator": {"kind": "diagonal", "params": {"eigenvalues": [1,2,3]}},
    "start": {"vector_file": "e1.txt"},
    "run": {"eta": 0.5, "solver_mode": "perturbed"}
  })");
  j["output_dir"] = (tmp.path / "out").string();
  write_text_file(tmp.path / "m.json", j.dump());
  CommandOptions opts;
  opts.manifest_path = tmp.path / "m.json";
  std::ostringstream log;
  CHECK(cmd_run(load_manifest(opts), log) == kExitOk);
  CHECK(lines_of(tmp.path / "out" / "trajectory.csv").size() == 2);
  CHECK(read_json_file(tmp.path / "out" / "trajectory.json").at("stop_reason") == "eigenvector_fixed_point");
}

TEST_CASE("cmd_sweep") {
  TempDir tmp("sweep");
  auto j = diag10_manifest(tmp.path);
  j["run"] = {{"solver_mode", "perturbed"}, {"policy", {{"kind", "worst-of-N"}, {"n_candidates", 4}}}};
  j["sweep"] = {{"eta", {0.1, 0.5, 0.9}},
                {"gap_fraction", {0.1, 0.5, 0.9}},
                {"seeds", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}};
  j["workers"] = 2;
  std::ostringstream log;
  CHECK(cmd_sweep(manifest_from_json(j), log) == kExitOk);
  const auto rows = lines_of(tmp.path / "summary.csv");
  REQUIRE(rows.size() == 91);
  CHECK(rows[0].rfind("eta,gap_fraction,seed,steps_to_tol,all_pass,min_margin_T31", 0) == 0);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].find(",true,") != std::string::npos);
  CHECK(fs::exists(tmp.path / "cells" / "cell_89" / "report.json"));

  RunManifest no_sweep = manifest_from_json(diag10_manifest(tmp.path));
  CHECK(run_guarded([&] { return cmd_sweep(no_sweep, log); }) == kExitUsage);
}
