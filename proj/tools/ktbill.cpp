#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ktb/errors.hpp"

using ktb::cli::ExperimentConfig;
using ktb::cli::RunOptions;

int main(int argc, char** argv) {
  CLI::App app{"Billiards in convex bodies: reflections, projectivity tests, osculation and capacities"};
  app.require_subcommand(1);

  using Command = std::function<void(const ExperimentConfig&, const RunOptions&, std::ostream&)>;
  const std::map<std::string, std::pair<Command, std::string>> commands = {
      {"reflect", {ktb::cli::cmd_reflect, "T-billiard reflections of random lines"}},
      {"trace", {ktb::cli::cmd_trace, "iterate the T-billiard map from a line"}},
      {"projtest", {ktb::cli::cmd_projtest, "projectivity residuals of chord involutions"}},
      {"osculate", {ktb::cli::cmd_osculate, "osculating conics and quadrics"}},
      {"capacity", {ktb::cli::cmd_capacity, "minimal-action closed orbits"}},
      {"sweep", {ktb::cli::cmd_sweep, "residual along the superellipse family"}},
  };

  std::string config_path;
  std::uint64_t seed = 0;
  double tol = 0.0;
  RunOptions opts;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--tol", tol, "tolerance");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed") > 0) opts.seed = seed;
      if (sub->count("--tol") > 0) opts.tol = tol;
      const ExperimentConfig cfg = ExperimentConfig::load(config_path);
      commands.at(name).first(cfg, opts, std::cout);
    }
  } catch (const ktb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ktb::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
