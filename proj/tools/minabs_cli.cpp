// Command-line front end for the minabs experiment runner.
//
// Subcommands: count, interf, bound-audit, hadamard, grover, afm, sweep.
// Each subcommand assembles an ExperimentConfig from an optional key=value
// config file plus command-line flags (flags win) and prints or writes a
// csv/json report. Exit codes: 0 ok, 1 usage, 2 audit failure, 3 resource.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "minabs/experiment.hpp"

namespace {

struct SubArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

// Registers a flag that lands in the override map only when the user sets it,
// so file-provided values survive unless explicitly overridden.
void add_param(CLI::App* app, SubArgs& args, const std::string& flag,
               const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
         flag, [&args, key](const std::string& value) { args.overrides[key] = value; }, help)
      ->type_name("TEXT");
}

void add_common(CLI::App* app, SubArgs& args) {
  add_param(app, args, "--seed", "seed", "master seed (mandatory)");
  add_param(app, args, "--trials", "trials", "Monte Carlo trials (0 = analytic only)");
  add_param(app, args, "--pe", "pe", "target error probability");
  add_param(app, args, "--out", "out", "output file path (default: stdout)");
  add_param(app, args, "--format", "format", "report format: csv | json");
  app->add_option("--config", args.config_path, "key=value config file");
  add_param(app, args, "--sweep", "sweep", "sweep axis, e.g. eps:0.01,0.02,0.04");
}

minabs::ExperimentConfig assemble(const std::string& kind, const SubArgs& args) {
  minabs::ExperimentConfig config;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw minabs::UsageError("cannot open config file: " + args.config_path);
    config = minabs::load_config(in, args.overrides);
  } else {
    config.params = args.overrides;
  }
  if (!kind.empty()) config.kind = kind;
  if (config.kind.empty()) throw minabs::UsageError("experiment kind missing");
  config.params.erase("");
  return config;
}

int run(const minabs::ExperimentConfig& config) {
  const minabs::ProtocolReport report = minabs::run_experiment(config);
  const std::string format = config.get("format", "csv");
  const std::string out_path = config.get("out");
  if (out_path.empty())
    minabs::emit_report(report, format, std::cout);
  else
    minabs::emit_report_file(report, format, out_path);
  if (!report.all_audits_pass()) {
    for (const auto& audit : report.audits)
      if (!audit.pass)
        std::cerr << "audit failed: " << audit.name
                  << " margin=" << minabs::format_double(audit.margin) << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimal-absorption measurement simulator and bound auditor"};
  app.require_subcommand(1);

  struct Sub {
    std::string kind;
    SubArgs args;
  };
  std::map<std::string, Sub> subs;
  auto make_sub = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    Sub& entry = subs[name];
    entry.kind = (name == "sweep") ? "" : name;
    add_common(sub, entry.args);
    return sub;
  };

  {
    CLI::App* sub = make_sub("count", "photon-counting discrimination of two transparencies");
    add_param(sub, subs["count"].args, "--alpha1", "alpha1", "transparency 1, re[,im]");
    add_param(sub, subs["count"].args, "--alpha2", "alpha2", "transparency 2, re[,im]");
    add_param(sub, subs["count"].args, "--source", "source", "photon source: fock | poisson");
  }
  {
    CLI::App* sub = make_sub("interf", "k-pass interferometer phase discrimination");
    add_param(sub, subs["interf"].args, "--alpha", "alpha", "common transparency modulus");
    add_param(sub, subs["interf"].args, "--eps", "eps", "amplitude half-separation");
    add_param(sub, subs["interf"].args, "--k", "k", "passes per photon (0 = auto)");
  }
  {
    CLI::App* sub = make_sub("bound-audit", "audit random scripted protocols against the bound");
    add_param(sub, subs["bound-audit"].args, "--alpha1", "alpha1", "transparency 1, re[,im]");
    add_param(sub, subs["bound-audit"].args, "--alpha2", "alpha2", "transparency 2, re[,im]");
    add_param(sub, subs["bound-audit"].args, "--scripts", "scripts", "number of random scripts");
    add_param(sub, subs["bound-audit"].args, "--smax", "smax", "max ancilla levels above ground");
    add_param(sub, subs["bound-audit"].args, "--nmax", "nmax", "max photon count");
    add_param(sub, subs["bound-audit"].args, "--kmax", "kmax", "max rounds");
    add_param(sub, subs["bound-audit"].args, "--script", "script", "explicit script file");
  }
  {
    CLI::App* sub = make_sub("hadamard", "multi-pixel row identification");
    add_param(sub, subs["hadamard"].args, "--m", "m", "pixel count (power of 2)");
    add_param(sub, subs["hadamard"].args, "--alpha", "alpha", "base transparency");
    add_param(sub, subs["hadamard"].args, "--eps", "eps", "pixel modulation depth");
    add_param(sub, subs["hadamard"].args, "--p", "p", "hidden row index (1-based)");
    add_param(sub, subs["hadamard"].args, "--mode", "mode", "collective | individual");
    add_param(sub, subs["hadamard"].args, "--n", "n", "photon budget (individual mode)");
  }
  {
    CLI::App* sub = make_sub("grover", "damped search with absorbing oracle");
    add_param(sub, subs["grover"].args, "--m", "m", "search-space size");
    add_param(sub, subs["grover"].args, "--beta2", "beta2", "absorption probability per passage");
    add_param(sub, subs["grover"].args, "--phase", "phase", "oracle phase per call: pi | number");
    add_param(sub, subs["grover"].args, "--t", "t", "iterations (0 = auto)");
    add_param(sub, subs["grover"].args, "--x0", "x0", "marked item (1-based)");
  }
  {
    CLI::App* sub = make_sub("afm", "repeated-interaction absorption lower bound");
    add_param(sub, subs["afm"].args, "--alpha1", "alpha1", "transparency 1, re[,im]");
    add_param(sub, subs["afm"].args, "--alpha2", "alpha2", "transparency 2, re[,im]");
  }
  {
    CLI::App* sub = make_sub("sweep", "run a config-file experiment (kind from file)");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&subs](const std::vector<std::string>& pairs) {
          for (const auto& pair : pairs) {
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos)
              throw CLI::ValidationError("--set expects key=value, got: " + pair);
            subs["sweep"].args.overrides[pair.substr(0, eq)] = pair.substr(eq + 1);
          }
        },
        "extra key=value override (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (app.get_subcommand(name)->parsed()) return run(assemble(sub.kind, sub.args));
    }
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const minabs::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const minabs::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const minabs::CountingFailsError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
