// Command-line front end: brownscene <simulate|persistence|molchan|tails|validate> [options]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "brownscene/error.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace bh = brownscene::harness;

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo campaigns for processes in Brownian scenery"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  bool print_config = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value experiment file");
    sub->add_option("--seed", seed, "master seed (overrides the file)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory");
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
  };
  auto* simulate = app.add_subcommand("simulate", "write path, local time and Delta CSVs per replica");
  auto* persistence = app.add_subcommand("persistence", "survival probabilities and fitted exponent");
  auto* molchan = app.add_subcommand("molchan", "Molchan functional against E[max Delta on [0,1]]");
  auto* tails = app.add_subcommand("tails", "tail envelopes of Delta_1 and V_1");
  auto* validate = app.add_subcommand("validate", "full check suite; exit 0 iff every check passes");
  for (auto* s : {simulate, persistence, molchan, tails, validate}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : bh::kExitInvalidConfig;
  }

  try {
    bh::ExperimentConfig config = config_path.empty() ? bh::ExperimentConfig{} : bh::load_config(config_path);
    if (seed) config.master_seed = *seed;
    if (workers) config.workers = *workers;
    if (out) config.out_dir = *out;
    config.validate();
    if (print_config) {
      std::cout << bh::serialize_config(config);
      return bh::kExitOk;
    }
    if (simulate->parsed()) return bh::cmd_simulate(config);
    if (persistence->parsed()) return bh::cmd_persistence(config);
    if (molchan->parsed()) return bh::cmd_molchan(config);
    if (tails->parsed()) return bh::cmd_tails(config);
    return bh::cmd_validate(config);
  } catch (const brownscene::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bh::kExitInvalidConfig;
  } catch (const brownscene::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bh::kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bh::kExitInternal;
  }
}
