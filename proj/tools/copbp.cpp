// Command-line front end. Every pipeline command reads one JSON config:
//
//   copbp simulate --config run.json
//   copbp select-copula --config run.json
//   copbp rerun out/manifest-fit.json
//   copbp transform lag-diff --input panel.csv --output panel2.csv --column imr --group dyad --time year

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "copbp/commands.hpp"

namespace {

int run_with_config(const std::string& command, const std::string& path) {
  copbp::RunConfig cfg;
  try {
    cfg = copbp::load_config(path);
  } catch (const std::exception& e) {
    copbp::Json err{{"error", {{"command", command}, {"kind", "user_error"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return copbp::kExitUserError;
  }
  return copbp::run(command, cfg, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive bivariate probit with copula-linked errors"};
  app.set_version_flag("--version", std::string(copbp::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  for (const std::string& name : copbp::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "JSON config or a manifest from an earlier run")
        ->required()
        ->check(CLI::ExistingFile);
  }

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "Repeat the command recorded in a manifest");
  rerun->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);

  copbp::TransformRequest tr;
  auto* transform = app.add_subcommand("transform", "Append a derived column to a CSV panel");
  transform->add_option("kind", tr.kind, "lag-diff or peace-years")
      ->required()
      ->check(CLI::IsMember({"lag-diff", "peace-years"}));
  transform->add_option("-i,--input", tr.input)->required()->check(CLI::ExistingFile);
  transform->add_option("-o,--output", tr.output)->required();
  transform->add_option("--column", tr.column, "column to difference, or the event indicator")->required();
  transform->add_option("--group", tr.group, "panel unit, e.g. dyad")->required();
  transform->add_option("--time", tr.time, "time index, e.g. year")->required();
  transform->add_option("--name", tr.name, "name of the new column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : copbp::kExitUserError;
  }

  if (transform->parsed()) return copbp::run_transform(tr, std::cout, std::cerr);
  if (rerun->parsed()) {
    std::string command;
    try {
      std::ifstream in(manifest_path);
      command = copbp::Json::parse(in).at("command").get<std::string>();
    } catch (const std::exception& e) {
      copbp::Json err{{"error", {{"command", "rerun"}, {"kind", "user_error"}, {"message", e.what()}}}};
      std::cerr << err.dump() << "\n";
      return copbp::kExitUserError;
    }
    return run_with_config(command, manifest_path);
  }
  for (auto* sub : app.get_subcommands()) return run_with_config(sub->get_name(), config_path);
  return copbp::kExitUserError;
}
