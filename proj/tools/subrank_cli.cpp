// subrank: generate, prepare, train, evaluate, ablate and score.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subrank/config.hpp"
#include "subrank/error.hpp"
#include "subrank/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string seed;
  std::string model;
  std::string out;
  bool oracle = false;
  std::vector<std::string> sets;
};

subrank::RunConfig resolve(const Options& o) {
  subrank::ConfigMap base;
  if (!o.config_path.empty()) base = subrank::read_config_file(o.config_path);
  subrank::ConfigMap overrides;
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw subrank::Error(subrank::ErrorKind::config, "--set expects key=value, got '" + kv + "'");
    }
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  // Dedicated flags win over --set.
  if (!o.seed.empty()) overrides["seed"] = o.seed;
  if (!o.model.empty()) overrides["model"] = o.model;
  if (!o.out.empty()) overrides["out"] = o.out;
  return subrank::make_run_config(base, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Substitute-recommendation ranking toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // subcommands inherit this; global flags may follow them
  Options opts;
  app.add_option("--config", opts.config_path, "Config file (key = value lines)");
  app.add_option("--seed", opts.seed, "Global seed");
  app.add_option("--model", opts.model, "gbdt or crossenc");
  app.add_option("--out", opts.out, "Working directory for inputs and outputs");
  app.add_option("--set", opts.sets, "Config override key=value (repeatable)");
  app.add_flag("--debug-oracle-scorer", opts.oracle, "eval: score with the ground-truth categories");
  app.add_subcommand("gen", "Generate a synthetic world, traffic, embeddings and the functionality set");
  app.add_subcommand("prepare", "Label, augment and split the traffic; build the ranking set");
  app.add_subcommand("train", "Train the configured model");
  app.add_subcommand("eval", "Evaluate the trained model");
  app.add_subcommand("ablate", "Run the label/loss grid and write a comparison table");
  app.add_subcommand("score", "Rank candidate pairs from score.pairs");
  app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : subrank::exit_code(subrank::ErrorKind::config);
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const auto config = resolve(opts);
    if (opts.oracle && cmd != "eval") {
      throw subrank::Error(subrank::ErrorKind::config, "--debug-oracle-scorer only applies to eval");
    }
    if (cmd == "gen") {
      subrank::cmd_gen(config, std::cout);
    } else if (cmd == "prepare") {
      subrank::cmd_prepare(config, std::cout);
    } else if (cmd == "train") {
      subrank::cmd_train(config, std::cout);
    } else if (cmd == "eval") {
      subrank::cmd_eval(config, opts.oracle, std::cout);
    } else if (cmd == "ablate") {
      const auto table = subrank::cmd_ablate(config, std::cout);
      std::cout << table.to_tsv();
    } else if (cmd == "score") {
      subrank::cmd_score(config, std::cout);
    } else if (cmd == "config") {
      std::cout << config.to_text();
    }
  } catch (const subrank::Error& e) {
    std::cerr << "subrank " << cmd << ": " << subrank::to_string(e.kind()) << ": " << e.what() << "\n";
    return subrank::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "subrank " << cmd << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
