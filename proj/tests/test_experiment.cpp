#include <doctest.h>

#include <filesystem>

#include "sdmh/errors.hpp"
#include "sdmh/experiment.hpp"

using namespace sdmh;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sdmh_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

}  // namespace

TEST_CASE("linear config defaults and round trip") {
  const auto c = LinearRunConfig::from_json(Json::object(), ".");
  REQUIRE(c.synth.has_value());
  CHECK(c.synth->n == 200);
  CHECK(c.synth->predictors == 500);
  CHECK(c.sampler.adapt.t_end == c.sampler.iterations * 3 / 4);

  const Json j = Json::parse(R"({"seed": 9, "synth": {"n": 30, "predictors": 12, "n_active": 2},
    "sampler": {"iterations": 500, "burn_in": 100, "dissimilarity": "LR", "swap": true},
    "adapt": {"enabled": true, "window": 20, "t_end": 300}})");
  const auto d = LinearRunConfig::from_json(j, ".");
  CHECK(d.sampler.seed == 9);
  CHECK(d.sampler.kind == DissimilarityKind::LR);
  CHECK(d.sampler.swap_enabled);
  CHECK(d.sampler.adapt.window == 20);
  CHECK(d.sampler.adapt.t_end == 300);
  const Json r = d.to_json();
  const auto e = LinearRunConfig::from_json(r, ".");
  CHECK(e.to_json() == r);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(LinearRunConfig::from_json(Json::parse(R"({"sampler": {"iteratons": 5}})"), "."),
                  ConfigError);
  CHECK_THROWS_AS(LinearRunConfig::from_json(Json::parse(R"({"bogus": 1})"), "."), ConfigError);
  CHECK_THROWS_AS(LinearRunConfig::from_json(Json::parse(R"({"sampler": {"iterations": -3}})"), "."),
                  ConfigError);
  CHECK_THROWS_AS(LinearRunConfig::from_json(Json::parse(R"({"sampler": {"dissimilarity": "G"}})"), "."),
                  ConfigError);
  CHECK_THROWS_AS(
      LinearRunConfig::from_json(Json::parse(R"({"data": {"x": "nope.csv", "y": "nope.csv"}})"), "."),
      ConfigError);
  CHECK_THROWS_AS(LinearRunConfig::from_json(Json::parse(R"({"kind": "dm"})"), "."), ConfigError);
  CHECK_THROWS_AS(DMRunConfig::from_json(Json::parse(R"({"priors": {"s2": 0}})"), "."), ConfigError);
  CHECK_THROWS_AS(GenConfig::from_json(Json::parse(R"({"kind": "poisson"})")), ConfigError);
}

TEST_CASE("DM config defaults and round trip") {
  const auto c = DMRunConfig::from_json(Json::object(), ".");
  CHECK(c.sampler.iterations == 20000);
  CHECK(c.sampler.burn_in == 10000);
  CHECK(c.sampler.priors.a == 1.0);
  CHECK(c.sampler.priors.b == 9.0);
  CHECK(c.s2 == 10.0);
  CHECK(c.r2 == 10.0);
  CHECK(c.sampler.adapt.initial_lambda == 1.0);
  const Json r = c.to_json();
  CHECK(DMRunConfig::from_json(r, ".").to_json() == r);
}

TEST_CASE("hash, sweep spec and output directories") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  const auto s = parse_sweep("0.01:1.5:100");
  CHECK(s.size() == 100);
  CHECK(s.front() == 0.01);
  CHECK(s.back() == 1.5);
  CHECK(parse_sweep("0.5:0.5:1") == std::vector<double>{0.5});
  for (const char* bad : {"1:2", "a:1:3", "0:1:3", "2:1:3", "0.1:1:0", "0.1:1:3x"})
    CHECK_THROWS_AS(parse_sweep(bad), ConfigError);

  const auto dir = scratch("out");
  prepare_output_dir(dir, false);
  CHECK(fs::is_directory(dir));
  write_text_file(dir / "f.txt", "x");
  CHECK_THROWS_AS(prepare_output_dir(dir, false), ConfigError);
  CHECK_NOTHROW(prepare_output_dir(dir, true));
}

TEST_CASE("linear run summary is reproduced from its files") {
  const Json j = Json::parse(R"({"seed": 4, "synth": {"n": 40, "predictors": 10, "n_active": 2, "seed": 3},
    "sampler": {"iterations": 2000, "burn_in": 500, "swap": true},
    "diagnostics": {"acf_max_lag": 20}})");
  const auto cfg = LinearRunConfig::from_json(j, ".");
  const auto out = scratch("linear");
  prepare_output_dir(out, false);
  const Json summary = run_linear_experiment(cfg, LinearRunOptions{.exact = true, .sweep = {}}, out);
  for (const char* f : {"trace.csv", "configs.bin", "lambda.csv", "pip.csv", "hamming.csv", "acf.csv",
                        "summary.json", "exact.csv", "config.resolved"})
    CHECK(fs::exists(out / f));
  const auto again = scratch("linear_diag");
  const Json d = diagnose_run(out, again, std::nullopt);
  CHECK(d == summary);
  CHECK(read_numeric_csv(out / "acf.csv").values.rows() == 21);
}

TEST_CASE("DM run summary is reproduced from its files") {
  const Json j = Json::parse(R"({"seed": 2,
    "synth": {"n": 30, "predictors": 4, "categories": 3, "n_random": 1, "seed": 5},
    "sampler": {"iterations": 60, "burn_in": 20}})");
  const auto cfg = DMRunConfig::from_json(j, ".");
  const auto out = scratch("dm");
  prepare_output_dir(out, false);
  const Json summary = run_dm_experiment(cfg, out);
  for (const char* f : {"trace.csv", "configs.bin", "coefficients.csv", "lambda.csv", "pip.csv",
                        "selected.csv", "acf.csv", "summary.json"})
    CHECK(fs::exists(out / f));
  const auto again = scratch("dm_diag");
  CHECK(diagnose_run(out, again, std::nullopt) == summary);
  const auto lag = scratch("dm_lag5");
  diagnose_run(out, lag, 5);
  CHECK(read_numeric_csv(lag / "acf.csv").values.rows() == 6);
}
