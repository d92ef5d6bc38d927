#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "occlab/cli.hpp"

namespace {

namespace oc = occlab::cli;

int execute(const oc::KeyValues& kv) {
  oc::ResolvedConfig cfg = oc::resolve(kv);
  oc::ExperimentResult r = oc::run_experiment(cfg);
  auto files = oc::write_result(r);
  std::cout << r.summary.dump(2) << '\n';
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
  return oc::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occlab: occupation time experiments for intermittent maps and renewal chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(oc::version));

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [kind, schema] : oc::schemas()) {
    auto* sub = app.add_subcommand(kind, schema.summary);
    subs[kind] = sub;
    auto& values = flag_values[kind];
    std::vector<std::string> keys = schema.required;
    for (const auto& d : schema.defaults) keys.push_back(d.first);
    keys.push_back("checkpoints");
    keys.push_back("output");
    for (const auto& k : keys) sub->add_option("--" + k, values[k], k);
  }

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a key = value config file");
  run->add_option("--config", config_path, "config file")->required();

  std::string describe_kind;
  auto* desc = app.add_subcommand("describe", "print the experiment card for a kind");
  desc->add_option("kind", describe_kind, "experiment kind")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? oc::ok : oc::validation;
  }

  try {
    if (desc->parsed()) {
      std::cout << oc::describe(describe_kind);
      return oc::ok;
    }
    if (run->parsed()) return execute(oc::read_config_file(config_path));
    for (const auto& [kind, sub] : subs) {
      if (!sub->parsed()) continue;
      oc::KeyValues kv{{"kind", kind}};
      for (const auto& [k, v] : flag_values[kind])
        if (sub->count("--" + k) > 0) kv[k] = v;
      return execute(kv);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return oc::exit_code_for(e);
  }
  return oc::validation;
}
