#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vesselnet/cli.hpp"

int main(int argc, char** argv) {
  using namespace vesselnet;

  CLI::App app{"Characteristic finite-difference solver for 1D hyperbolic networks"};
  app.require_subcommand(1);

  CliOptions opts;
  double sigma = 0.0, dt = 0.0, horizon = 0.0;
  int stride = 1;
  std::string levels;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "configuration document")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    auto* s = sub->add_option("--sigma", sigma, "k/h ratio");
    auto* d = sub->add_option("--dt", dt, "time step k");
    s->excludes(d);
    sub->add_option("--horizon", horizon, "final time T");
    sub->add_option("--levels", levels, "comma-separated cell counts, each doubling the previous");
    sub->add_option("--stride", stride, "write probes every s-th step");
    sub->add_option("--probe", opts.probes, "BRANCH:X (repeatable)");
  };

  auto* check = app.add_subcommand("check", "validate a configuration");
  auto* run = app.add_subcommand("run", "run a simulation");
  auto* converge = app.add_subcommand("converge", "convergence study");
  auto* stability = app.add_subcommand("stability", "perturbation stability probe");
  auto* compare = app.add_subcommand("compare-windkessel", "trapezoidal vs explicit windkessel closure");
  for (auto* sub : {check, run, converge, stability, compare}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--sigma")) opts.sigma = sigma;
  if (sub->count("--dt")) opts.dt = dt;
  if (sub->count("--horizon")) opts.horizon = horizon;
  if (sub->count("--stride")) opts.stride = stride;
  if (sub->count("--levels")) {
    try {
      opts.levels = parse_levels(levels);
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  if (sub == check) return cmd_check(opts, std::cout, std::cerr);
  if (sub == run) return cmd_run(opts, std::cout, std::cerr);
  if (sub == converge) return cmd_converge(opts, std::cout, std::cerr);
  if (sub == stability) return cmd_stability(opts, std::cout, std::cerr);
  return cmd_compare_windkessel(opts, std::cout, std::cerr);
}
