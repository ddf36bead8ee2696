// invit: generate problems, run approximate inverse iteration, sweep eta and
// start gaps, and re-certify trajectories against the convergence bounds.

#include <iostream>

#include <CLI11.hpp>

#include "invit/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Approximate inverse iteration with per-step bound certification"};
  app.require_subcommand(1);

  invit::CommandOptions common;
  std::string out_dir;
  int workers = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--manifest", common.manifest_path, "JSON run manifest")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--workers", workers, "parallel sweep workers")->check(CLI::PositiveNumber);
    sub->add_option("--override", common.overrides, "manifest override key.path=value");
    sub->add_flag("-v,--verbose", common.verbose, "print the per-step check table");
  };

  auto* generate = app.add_subcommand("generate", "write A.mtx, M.mtx and metadata.json");
  auto* run = app.add_subcommand("run", "run the iteration and verify the trajectory");
  auto* sweep = app.add_subcommand("sweep", "run the eta x gap_fraction x seed grid");
  add_common(generate);
  add_common(run);
  add_common(sweep);

  invit::VerifyOptions verify_opts;
  std::string verify_out;
  double verify_eta = -1.0;
  auto* verify = app.add_subcommand("verify", "re-certify a serialized trajectory");
  verify->add_option("--trajectory", verify_opts.trajectory_file, "trajectory.csv or .json")
      ->required();
  verify->add_option("--metadata", verify_opts.metadata_file, "metadata.json")->required();
  verify->add_option("--eta", verify_eta, "eta for every step (default: per-step eta_used)");
  verify->add_option("--out", verify_out, "directory for report.json");
  verify->add_flag("-v,--verbose", verify_opts.verbose, "print the per-step check table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : invit::kExitUsage;
  }

  return invit::guarded(std::cerr, [&]() -> int {
    if (*verify) {
      if (verify->count("--eta")) verify_opts.eta = verify_eta;
      if (!verify_out.empty()) verify_opts.out_dir = verify_out;
      return invit::cmd_verify(verify_opts, std::cout);
    }
    if (!out_dir.empty()) common.out_dir = out_dir;
    if (workers > 0) common.workers = workers;
    const auto manifest = invit::load_manifest(common);
    if (*generate) return invit::cmd_generate(manifest, std::cout);
    if (*run) return invit::cmd_run(manifest, std::cout, common.verbose);
    return invit::cmd_sweep(manifest, std::cout);
  });
}
