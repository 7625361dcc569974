// Command line runner for the acousto-optic transport experiments.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "mfao/errors.hpp"
#include "mfao/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInvariantFailure = 2;

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::string> measurements;
};

mfao::ExperimentConfig resolve(const Flags& f) {
  mfao::ExperimentConfig c = mfao::load_config(f.config);
  if (f.out) c.output = *f.out;
  if (f.workers) c.workers = *f.workers;
  if (f.seed) c.seed = *f.seed;
  if (f.tol) c.tol = *f.tol;
  mfao::check_config(c);
  return c;
}

int finish(const mfao::ExperimentConfig& c, const mfao::StageReport& r) {
  mfao::write_manifest(c, r, c.output);
  for (const auto& line : r.checks) std::cout << line << '\n';
  for (const auto& [name, value] : r.metrics) std::printf("%s = %.6g\n", name.c_str(), value);
  std::cout << r.stage << ": wrote " << r.files.size() << " files to " << c.output << '\n';
  if (!r.ok()) {
    for (const auto& f : r.failures) std::cerr << "invariant failure: " << f << '\n';
    return kInvariantFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-frequency acousto-optic transport laboratory"};
  app.require_subcommand(1);
  Flags flags;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "Output directory (overrides the config)");
    sub->add_option("--workers", flags.workers, "Worker threads; results do not depend on it");
    sub->add_option("--seed", flags.seed, "Seed for randomized sampling");
    sub->add_option("--tol", flags.tol, "Neumann series tolerance");
  };
  auto* simulate = app.add_subcommand("simulate", "Solve the cascade over the probe lattice and record u01 on the boundary");
  auto* functional = app.add_subcommand("functional", "Recover the internal functional from recorded measurements");
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct sigma and k");
  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  auto* phantom = app.add_subcommand("phantom", "Sample and validate the phantom");
  for (auto* sub : {simulate, functional, reconstruct, verify, phantom}) common(sub);
  functional->add_option("--measurements", flags.measurements, "Measurement file (defaults to <out>/measurements.bin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }

  try {
    const mfao::ExperimentConfig c = resolve(flags);
    if (*phantom) return finish(c, mfao::run_phantom(c, c.output));
    if (*verify) return finish(c, mfao::run_verify(c, c.output));
    const mfao::Experiment e(c);
    if (*simulate) return finish(c, mfao::run_simulate(e, c.output));
    if (*functional) return finish(c, mfao::run_functional(e, c.output, flags.measurements));
    return finish(c, mfao::run_reconstruct(e, c.output));
  } catch (const mfao::ValidationError& e) {
    std::cerr << "invariant failure: " << e.what() << '\n';
    return kInvariantFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
}
