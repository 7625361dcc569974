#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfao/errors.hpp"
#include "mfao/experiment.hpp"
#include "mfao/io.hpp"

using namespace mfao;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfao_exp_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small() {
  return parse_config(R"({"grid": {"nodes": 17, "angles": 8}, "probes": {"max_index": 1}, "seed": 3})");
}

}  // namespace

TEST(Fnv1a, ReferenceVectors) {
  // Published FNV-1a 64-bit test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Config, RoundTripsIdentically) {
  ExperimentConfig c = small();
  c.phantom_params = {{"sigma0", 1.7}, {"kappa0", 0.05}};
  c.rotations = {0.0, 0.7853981633974483};
  c.source = {"point", 2.0, {1, 0, 0}, {0, 0.5, 0}, {1, 0, 0}};
  const std::string text = emit_config(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(emit_config(back), text);
}

TEST(Config, DefaultsFillMissingKeys) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c, ExperimentConfig{});
}

TEST(Config, RejectsUnknownKeysAndBadReferences) {
  EXPECT_THROW(parse_config(R"({"grid": {"nodez": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"phantom": {"name": "nope"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"grid": {"angles": 7}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"domain": {"dim": 3}, "reconstruction": {"pipeline": "measured"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"source": {"kind": "point"}})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"grid": {"nodes": "many"}})"), ConfigError);
}

TEST(Stages, ZeroCouplingGivesZeroMeasurementsAndField) {
  ExperimentConfig c = small();
  c.a = 0.0;
  const Experiment e(c);
  const fs::path dir = scratch("zero");
  const StageReport s = run_simulate(e, dir.string());
  EXPECT_EQ(s.metrics.at("measurement_sup"), 0.0);
  const StageReport f = run_functional(e, dir.string());
  EXPECT_EQ(f.metrics.at("degenerate"), 1.0);
  EXPECT_EQ(f.metrics.at("H_sup"), 0.0);
  const FunctionalField H = functional_from(read_field((dir / "H_measured.mfao").string()), e.disc());
  EXPECT_EQ(H.provenance, Provenance::FourierRecovered);
  EXPECT_EQ(functional_from(read_field((dir / "H_oracle.mfao").string()), e.disc()).provenance, Provenance::Oracle);
  fs::remove_all(dir);
}

TEST(Stages, VerifyPassesLibraryPhantomAndFlagsBrokenOnes) {
  const fs::path dir = scratch("verify");
  ExperimentConfig c = parse_config(R"({"grid": {"nodes": 33, "angles": 16}})");
  const StageReport ok = run_verify(c, dir.string());
  EXPECT_TRUE(ok.ok()) << (ok.failures.empty() ? "" : ok.failures.front());

  ExperimentConfig hot = c;
  hot.phantom = "homogeneous";
  hot.phantom_params = {{"sigma0", 0.5}, {"kappa0", 0.6}};
  const StageReport h = run_verify(hot, dir.string());
  ASSERT_FALSE(h.ok());
  EXPECT_EQ(h.failures.front().rfind("absorption", 0), 0u);

  ExperimentConfig skew = c;
  skew.kernel_skew = 0.05;
  const StageReport k = run_verify(skew, dir.string());
  ASSERT_FALSE(k.ok());
  EXPECT_EQ(k.failures.front().rfind("kernel-symmetry", 0), 0u);
  fs::remove_all(dir);
}

TEST(Stages, ManifestRecordsConfigHashAndFileHashes) {
  const fs::path dir = scratch("manifest");
  const ExperimentConfig c = small();
  const StageReport r = run_phantom(c, dir.string());
  write_manifest(c, r, dir.string());
  const std::string m = slurp(dir / "manifest-phantom.json");
  EXPECT_NE(m.find(hex64(fnv1a64(emit_config(c)))), std::string::npos);
  EXPECT_NE(m.find(hex64(fnv1a64(slurp(dir / "phantom.csv")))), std::string::npos);
  fs::remove_all(dir);
}

TEST(Stages, ReconstructionIsWorkerCountInvariant) {
  ExperimentConfig c = parse_config(R"({"grid": {"nodes": 33, "angles": 16}})");
  const fs::path a = scratch("w1"), b = scratch("w2");
  run_reconstruct(Experiment(c), a.string());
  c.workers = 2;
  run_reconstruct(Experiment(c), b.string());
  for (const char* f : {"sigma.mfao", "sigma.csv", "k.csv", "lines.csv", "metrics.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string metrics = slurp(a / "metrics.json");
  EXPECT_NE(metrics.find("\"rel_linf\""), std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}
