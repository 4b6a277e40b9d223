#include <CLI11.hpp>

#include <iostream>

#include "coop/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cooperative overtaking simulator: lane detection, risk sweeps and V2V scenarios"};
  app.require_subcommand(1);

  coop::CliOptions opt;
  std::uint64_t seed = 0;
  int refine = 0, frames = 0;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config, "YAML configuration file");
    sub->add_option("-o,--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the configured seed");
  };

  auto* detect = app.add_subcommand("detect", "run lane detection over a PGM corpus with truth sidecars");
  common(detect);
  detect->add_option("corpus", opt.input, "corpus directory")->required();
  detect->add_option("-j,--jobs", opt.jobs, "worker threads (0 = hardware count)");

  auto* render = app.add_subcommand("render", "write a synthetic corpus of PGM frames and truth CSVs");
  common(render);
  render->add_option("-n,--frames", frames, "number of frames");

  auto* risk = app.add_subcommand("risk", "conflict-area and collision-mode S_cp sweeps");
  common(risk);
  risk->add_option("--refine", refine, "maximum integration grid refinements");

  auto* simulate = app.add_subcommand("simulate", "run a scenario file and write traces");
  common(simulate);
  simulate->add_option("scenario", opt.input, "scenario YAML")->required();
  simulate->add_option("--refine", refine, "maximum integration grid refinements");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : coop::kExitValidation;
  }

  for (auto* sub : {detect, render, risk, simulate}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->get_option_no_throw("--refine") && sub->count("--refine")) opt.refine = refine;
    if (sub->get_option_no_throw("--frames") && sub->count("--frames")) opt.frames = frames;
  }

  coop::RunReport rep;
  if (detect->parsed()) rep = coop::cmd_detect(opt);
  else if (render->parsed()) rep = coop::cmd_render(opt);
  else if (risk->parsed()) rep = coop::cmd_risk(opt);
  else rep = coop::cmd_simulate(opt);

  coop::write_report(rep, opt.out);
  std::cout << rep.to_json().dump(2) << '\n';
  for (const auto& e : rep.errors) std::cerr << "error: " << e << '\n';
  return rep.exit_code;
}
