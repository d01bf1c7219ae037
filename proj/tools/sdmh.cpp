// sdmh: data generation, samplers and diagnostics from the command line.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdmh/errors.hpp"
#include "sdmh/experiment.hpp"
#include "sdmh/log.hpp"

namespace fs = std::filesystem;
using namespace sdmh;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

fs::path output_dir(const std::string& flag) {
  if (const char* env = std::getenv("SDMH_OUTPUT_DIR"); env && *env) return env;
  if (flag.empty()) throw ConfigError("no output directory (use --out or SDMH_OUTPUT_DIR)");
  return flag;
}

Json config_or_empty(const std::string& path) {
  return path.empty() ? Json::object() : load_json_file(path);
}

fs::path config_base(const std::string& path) {
  return path.empty() ? fs::current_path() : fs::absolute(fs::path(path)).parent_path();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-driven MCMC variable selection"};
  app.require_subcommand(1);
  bool quiet = false;
  bool verbose = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.add_flag("-v,--verbose", verbose, "Progress messages");

  std::string config_path, out;
  bool force = false;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  std::string kind;
  gen->add_option("--config", config_path, "JSON configuration")->check(CLI::ExistingFile);
  gen->add_option("--kind", kind, "linear or dm (overrides the configuration)")
      ->check(CLI::IsMember({"linear", "dm"}));
  gen->add_option("--out", out, "Output directory");
  gen->add_flag("--force", force, "Overwrite a non-empty output directory");
  gen->add_option("--seed", seed, "Random seed");

  auto* lin = app.add_subcommand("run-linear", "Variable selection for the conjugate linear model");
  bool exact = false, no_swap = false;
  std::string sweep;
  std::optional<std::size_t> replicates;
  lin->add_option("--config", config_path, "JSON configuration")->check(CLI::ExistingFile);
  lin->add_option("--out", out, "Output directory");
  lin->add_flag("--force", force, "Overwrite a non-empty output directory");
  lin->add_option("--seed", seed, "Random seed");
  lin->add_flag("--exact", exact, "Enumerate the posterior and report the total-variation distance");
  lin->add_option("--sweep-lambda", sweep, "Acceptance-vs-lambda sweep a:b:n");
  lin->add_flag("--no-swap", no_swap, "Disable the graph-guided swap");
  lin->add_option("--replicates", replicates, "Independent chains");

  auto* dm = app.add_subcommand("run-dm", "Reversible-jump sampler for Dirichlet-Multinomial regression");
  bool local_move = false;
  dm->add_option("--config", config_path, "JSON configuration")->check(CLI::ExistingFile);
  dm->add_option("--out", out, "Output directory");
  dm->add_flag("--force", force, "Overwrite a non-empty output directory");
  dm->add_option("--seed", seed, "Random seed");
  dm->add_flag("--local-move", local_move, "Add the graph-guided swap after each category update");

  auto* diag = app.add_subcommand("diagnose", "Recompute diagnostics from stored traces");
  std::vector<std::string> runs;
  std::optional<std::size_t> acf_maxlag;
  diag->add_option("runs", runs, "Run directories or their trace.csv files")->required();
  diag->add_option("--out", out, "Output directory (default: <run>/diagnose)");
  diag->add_option("--acf-maxlag", acf_maxlag, "Maximum ACF lag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "sdmh: error: " << one_line(e.what()) << "\n";
    return kConfig;
  }
  set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warning);

  try {
    if (gen->parsed()) {
      GenConfig c = GenConfig::from_json(config_or_empty(config_path));
      if (!kind.empty()) c.kind = kind == "dm" ? GenConfig::Kind::DM : GenConfig::Kind::Linear;
      if (seed) {
        c.linear.seed = *seed;
        c.dm.seed = *seed;
      }
      const fs::path dir = output_dir(out);
      prepare_output_dir(dir, force);
      write_generated(c, dir);
      std::cout << "wrote dataset to " << dir.string() << "\n";
    } else if (lin->parsed()) {
      LinearRunConfig c = LinearRunConfig::from_json(config_or_empty(config_path), config_base(config_path));
      if (seed) c.sampler.seed = *seed;
      if (no_swap) c.sampler.swap_enabled = false;
      if (replicates) {
        if (*replicates == 0) throw ConfigError("--replicates must be positive");
        c.replicates = *replicates;
      }
      LinearRunOptions opts;
      opts.exact = exact;
      if (!sweep.empty()) opts.sweep = parse_sweep(sweep);
      const fs::path dir = output_dir(out);
      prepare_output_dir(dir, force);
      const Json s = run_linear_experiment(c, opts, dir);
      std::cout << s.dump(2) << "\n";
    } else if (dm->parsed()) {
      DMRunConfig c = DMRunConfig::from_json(config_or_empty(config_path), config_base(config_path));
      if (seed) c.sampler.seed = *seed;
      if (local_move) c.sampler.local_move = true;
      const fs::path dir = output_dir(out);
      prepare_output_dir(dir, force);
      const Json s = run_dm_experiment(c, dir);
      std::cout << s.dump(2) << "\n";
    } else if (diag->parsed()) {
      int status = kOk;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        fs::path run(runs[i]);
        if (fs::is_regular_file(run)) run = run.parent_path();
        if (!fs::is_directory(run)) throw DataError("no such run '" + runs[i] + "'");
        fs::path dest;
        if (const char* env = std::getenv("SDMH_OUTPUT_DIR"); env && *env) {
          dest = fs::path(env);
        } else if (!out.empty()) {
          dest = fs::path(out);
        } else {
          dest = run / "diagnose";
        }
        if (runs.size() > 1) dest /= "run_" + std::to_string(i);
        fs::create_directories(dest);
        const Json s = diagnose_run(run, dest, acf_maxlag);
        const fs::path stored = run / "summary.json";
        if (fs::is_regular_file(stored)) {
          const Json before = Json::parse(read_text_file(stored));
          if (before == s) {
            std::cout << run.string() << ": summary reproduced\n";
          } else {
            std::cerr << "sdmh: error: " << run.string() << ": recomputed summary differs from summary.json\n";
            status = kData;
          }
        } else {
          std::cout << run.string() << ": diagnostics written to " << dest.string() << "\n";
        }
      }
      return status;
    }
  } catch (const ConfigError& e) {
    std::cerr << "sdmh: error: " << one_line(e.what()) << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "sdmh: error: " << one_line(e.what()) << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "sdmh: error: " << one_line(e.what()) << "\n";
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "sdmh: error: " << one_line(e.what()) << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "sdmh: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return kOk;
}
