// Copyright 2026 The dcc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "dcc/error.hpp"
#include "dcc/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dcc::InputError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep copula classifier experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir, modes;
  std::int64_t seed = -1;

  for (const char* name : {"synthetic", "pima"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed (overrides the config)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--modes", modes, "comma-separated marginal modes: oracle_normal,pooled,per_class");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string experiment = app.get_subcommands().front()->get_name();

  try {
    nlohmann::json doc = config_path.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_file(config_path));
    if (!doc.is_object()) throw dcc::InputError("config must be a JSON object");
    if (doc.contains("experiment") && doc["experiment"] != experiment)
      throw dcc::InputError("config key \"experiment\" disagrees with the subcommand");
    doc["experiment"] = experiment;
    if (seed >= 0) doc["seed"] = seed;
    if (!out_dir.empty()) doc["output_dir"] = out_dir;
    if (!modes.empty()) doc["modes"] = split_commas(modes);

    const dcc::ExperimentConfig config = dcc::validate_config(doc.dump());
    const auto result = dcc::run_experiment(config);
    const auto& report = config.n_seeds == 1 ? result.runs.front().metrics : result.summary;
    std::cout << report.dump(2) << '\n';
    return 0;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: config is not valid JSON: " << e.what() << '\n';
    return 2;
  } catch (const dcc::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
