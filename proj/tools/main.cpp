#include <sgtomo/cli.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"sgtomo: self-guided and standard quantum tomography simulation lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "JSON experiment config")->required();
  std::string out_value;
  CLI::Option* out_opt =
      run->add_option("--out", out_value, "output directory (overrides the config)");

  std::string dir_a, dir_b;
  CLI::App* compare = app.add_subcommand("compare", "compare two run directories");
  compare->add_option("dir_a", dir_a, "candidate run directory")->required();
  compare->add_option("dir_b", dir_b, "baseline run directory")->required();

  app.add_subcommand("list-experiments", "list the available experiment kinds");

  // Worker-count cap honored via the SGTOMO_MAX_WORKERS environment variable.
  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (*out_opt) out_dir = out_value;
    return sgtomo::cli::cmd_run(config_path, out_dir, std::cout, std::cerr);
  }
  if (compare->parsed()) {
    return sgtomo::cli::cmd_compare(dir_a, dir_b, std::cout, std::cerr);
  }
  return sgtomo::cli::cmd_list_experiments(std::cout);
}
