// qfc-link: batch front end for the conversion, cavity, link and photon
// statistics models.
//
//   qfc-link efficiency|cavity|link|bell|g2 [--config FILE] [--out DIR]
//            [--seed N] [--mode table|analyze|simulate]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qfc/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantum frequency conversion link modeling and statistics"};
  app.require_subcommand(1);

  qfc::cli::CommandOptions opts;
  std::string config, out, mode;
  std::uint64_t seed = 0;

  const char* commands[][2] = {
      {"efficiency", "conversion efficiency curve and P_max fit"},
      {"cavity", "pump enhancement cavity figures"},
      {"link", "fiber link SNR sweep"},
      {"bell", "chained Bell inequality table, analysis or simulation"},
      {"g2", "g2 cross-correlation and Franson visibilities"}};
  for (auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config,
                    std::string("JSON config (default: $") + qfc::cli::kConfigEnv + ")");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "random seed, overrides the config");
    if (std::string(name) == "bell")
      sub->add_option("--mode", mode, "table, analyze or simulate");
    sub->callback([&opts, name = std::string(name)] { opts.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qfc::cli::kExitInput;
  }

  auto* sub = app.get_subcommands().front();
  if (!config.empty()) opts.config = config;
  if (!out.empty()) opts.out = out;
  if (sub->count("--seed")) opts.seed = seed;
  if (!mode.empty()) opts.mode = mode;
  return qfc::cli::run_command(opts, std::cout, std::cerr);
}
