#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "polycal/properties.hpp"
#include "polycal/scenario.hpp"

namespace {

// Output directory precedence: --out flag, POLYCAL_OUT_DIR, output.dir from
// the config, then the working directory.
std::string resolve_out_dir(const polycal::ScenarioConfig& config, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("POLYCAL_OUT_DIR"); env != nullptr && *env != '\0')
    return env;
  return config.out_dir();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"singular heat-flow solver and identity checker"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::string filter = "*";
  int jobs = 1;
  long long seed = -1;

  CLI::App* solve = app.add_subcommand("solve", "evaluate the closed-form solution on a grid");
  solve->add_option("--config", config_path, "scenario config file")->required();
  solve->add_option("--out", out_flag, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "run the identity property suite");
  verify->add_option("--config", config_path, "scenario config file (tolerance overrides)");
  verify->add_option("--out", out_flag, "output directory");
  verify->add_option("--filter", filter, "glob over property names, e.g. 'kernel.*'");
  verify->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  verify->add_option("--seed", seed, "jitter probe grids (deterministic per seed)");

  CLI::App* compare = app.add_subcommand("compare", "cross-validate against the difference scheme");
  compare->add_option("--config", config_path, "scenario config file")->required();
  compare->add_option("--out", out_flag, "output directory");

  CLI::App* kernel = app.add_subcommand("kernel", "tabulate the averaging weight");
  kernel->add_option("--config", config_path, "scenario config file");
  kernel->add_option("--out", out_flag, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const polycal::ScenarioConfig config = config_path.empty()
                                               ? polycal::ScenarioConfig::defaults()
                                               : polycal::ScenarioConfig::load(config_path);
    const std::string out_dir = resolve_out_dir(config, out_flag);
    if (solve->parsed()) return polycal::run_solve(config, out_dir);
    if (compare->parsed()) return polycal::run_compare(config, out_dir);
    if (kernel->parsed()) return polycal::run_kernel(config, out_dir);
    polycal::SuiteOptions options;
    options.filter = filter;
    options.jobs = jobs;
    if (seed >= 0) options.seed = static_cast<std::uint64_t>(seed);
    return polycal::run_verify(config, options, out_dir);
  } catch (const polycal::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
