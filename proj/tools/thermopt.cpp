#include "thermopt/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Steady thermistor solver and boundary heat-transfer control"};
  app.require_subcommand(1, 1);
  thermopt::CommandOptions opts;
  std::string out_dir;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    return sub;
  };
  add("solve", "solve the state system for the configured control");
  add("optimize", "compute an optimal control");
  add("verify", "run a property suite")
      ->add_option("--suite", opts.suite, "gradient | maxprinciple | substitution | lemma1")
      ->check(CLI::IsMember({"gradient", "maxprinciple", "substitution", "lemma1"}));
  add("convergence", "self-convergence study over uniform refinements")
      ->add_option("--levels", opts.levels, "number of meshes (>= 2)")
      ->check(CLI::Range(2, 12));
  add("certificate", "evaluate the a-priori bound certificate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : thermopt::kExitConfig;
  }
  opts.command = app.get_subcommands().front()->get_name();
  if (!out_dir.empty()) opts.out = out_dir;
  return thermopt::run_command(opts, std::cout, std::cerr);
}
