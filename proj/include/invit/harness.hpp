#pragma once

// Batch driver behind the `invit` command line tool. Each command returns the
// process exit code: 0 success, 1 verification (or run) failure, 2 usage or
// validation error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "invit/iteration.hpp"
#include "invit/problem_gen.hpp"
#include "invit/serialization.hpp"

namespace invit {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct StartSpec {
  double gap_fraction = 0.5;
  std::uint64_t seed = 0;
  /// Overrides the constructed start when set.
  std::optional<std::filesystem::path> vector_file;
};

struct SweepSpec {
  std::vector<double> eta;
  std::vector<double> gap_fraction;
  std::vector<std::uint64_t> seeds;
};

struct RunManifest {
  GeneratorSpec generator;
  StartSpec start;
  RunConfig run;
  std::optional<SweepSpec> sweep;
  std::filesystem::path output_dir = "out";
  bool write_csv = true;
  bool write_json = true;
  int workers = 1;
};

/// Applies a `dotted.key=value` override to a manifest document. The value is
/// parsed as JSON when possible and kept as a string otherwise.
void apply_override(json& manifest, const std::string& assignment);

/// Parses and validates a manifest document; throws Error on any violation.
RunManifest manifest_from_json(const json& j);
json manifest_to_json(const RunManifest& m);

struct CommandOptions {
  std::filesystem::path manifest_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> workers;
  std::vector<std::string> overrides;
  bool verbose = false;
};

/// Loads the manifest file and applies --out, --workers and --override.
RunManifest load_manifest(const CommandOptions& opts);

int cmd_generate(const RunManifest& m, std::ostream& log);
int cmd_run(const RunManifest& m, std::ostream& log, bool verbose = false);
int cmd_sweep(const RunManifest& m, std::ostream& log);

struct VerifyOptions {
  std::filesystem::path trajectory_file;
  std::filesystem::path metadata_file;
  std::optional<double> eta;
  /// Directory for report.json; nothing is written when unset.
  std::optional<std::filesystem::path> out_dir;
  bool verbose = false;
};

int cmd_verify(const VerifyOptions& opts, std::ostream& log);

/// Runs `body`, mapping library errors to exit codes and reporting them on `err`.
template <class F>
int guarded(std::ostream& err, F&& body);

int exit_code_for(const Error& e);

/// Starting vector described by the manifest.
Vector make_start(const Eigenproblem& p, const StartSpec& start);

}  // namespace invit

#include <ostream>

template <class F>
int invit::guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const invit::Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
