// Command-line front end: `cluster` runs the leak-proof clustering protocol
// on archive-style train/test files, `fraud` runs the account-level anomaly
// pipeline on a transactions CSV. A JSON --config file supplies defaults;
// explicit flags win. Exit codes: 0 ok, 2 config/schema, 3 data, 4 numerics.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccsd/run.hpp"

namespace {

using nlohmann::json;

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw ccsd::ConfigError("--seeds: empty seed list");
  return seeds;
}

json load_config_file(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc)
      path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0)
      path = arg.substr(9);
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in) throw ccsd::ConfigError("cannot open config file: " + path);
      json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        throw ccsd::ConfigError("config file " + path + ": " + e.what());
      }
      return j;
    }
  }
  return json::object();
}

template <typename T>
void from_config(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<ccsd::fraud::Variant> resolve_variants(const std::string& name) {
  if (name == "all")
    return {ccsd::fraud::Variant::full, ccsd::fraud::Variant::no_rarity,
            ccsd::fraud::Variant::no_decay, ccsd::fraud::Variant::no_flag};
  return {ccsd::fraud::variant_from_name(name)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional Cauchy-Schwarz divergence pipelines"};
  app.require_subcommand(1);

  json file_cfg;
  try {
    file_cfg = load_config_file(argc, argv);
  } catch (const ccsd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  // cluster subcommand
  ccsd::run::ClusterRunConfig ccfg;
  std::string method = "ccsd";
  std::string seed_csv;
  from_config(file_cfg, "train", ccfg.train_path);
  from_config(file_cfg, "test", ccfg.test_path);
  from_config(file_cfg, "method", method);
  from_config(file_cfg, "cap", ccfg.cap);
  from_config(file_cfg, "out", ccfg.out_dir);
  from_config(file_cfg, "threads", ccfg.threads);
  from_config(file_cfg, "epsilon", ccfg.ccsd.epsilon);
  from_config(file_cfg, "keep_fraction", ccfg.ccsd.keep_fraction);
  if (file_cfg.contains("seeds"))
    ccfg.seeds = file_cfg.at("seeds").get<std::vector<std::uint64_t>>();

  CLI::App* cluster = app.add_subcommand("cluster", "leak-proof clustering protocol");
  cluster->add_option("--config", config_path, "JSON config file (flags override it)");
  cluster->add_option("--train", ccfg.train_path, "training split file");
  cluster->add_option("--test", ccfg.test_path, "test split file");
  cluster->add_option("--method", method, "dissimilarity: ccsd or dtw")
      ->check(CLI::IsMember({"ccsd", "dtw"}));
  cluster->add_option("--cap", ccfg.cap, "stratified cap per split");
  cluster->add_option("--seeds", seed_csv, "comma-separated k-medoids seeds");
  cluster->add_option("--out", ccfg.out_dir, "output directory");
  cluster->add_option("--threads", ccfg.threads, "worker threads (0 = all cores)");
  cluster->add_option("--epsilon", ccfg.ccsd.epsilon, "score ridge");
  cluster->add_option("--keep-fraction", ccfg.ccsd.keep_fraction,
                      "self-Gram spectrum kept");

  // fraud subcommand
  ccsd::run::FraudRunConfig fcfg;
  std::string variant = "full";
  from_config(file_cfg, "data", fcfg.data_path);
  from_config(file_cfg, "variant", variant);
  from_config(file_cfg, "seed", fcfg.seed);
  from_config(file_cfg, "out", fcfg.out_dir);
  from_config(file_cfg, "threads", fcfg.threads);
  from_config(file_cfg, "window", fcfg.params.window);
  from_config(file_cfg, "stride_normal", fcfg.params.stride_normal);
  from_config(file_cfg, "stride_fraud", fcfg.params.stride_fraud);
  from_config(file_cfg, "local_history", fcfg.params.local_history);
  from_config(file_cfg, "top_j", fcfg.params.top_j);
  from_config(file_cfg, "half_life", fcfg.params.half_life);
  from_config(file_cfg, "epsilon", fcfg.params.epsilon);
  from_config(file_cfg, "scores_csv", fcfg.write_scores_csv);

  CLI::App* fraudc = app.add_subcommand("fraud", "account-level anomaly pipeline");
  fraudc->add_option("--config", config_path, "JSON config file (flags override it)");
  fraudc->add_option("--data", fcfg.data_path, "transactions CSV");
  fraudc->add_option("--variant", variant, "full, no_rarity, no_decay, no_flag or all")
      ->check(CLI::IsMember({"full", "no_rarity", "no_decay", "no_flag", "all"}));
  fraudc->add_option("--seed", fcfg.seed, "split seed");
  fraudc->add_option("--out", fcfg.out_dir, "output directory");
  fraudc->add_option("--threads", fcfg.threads, "worker threads (0 = all cores)");
  fraudc->add_option("--window", fcfg.params.window, "window length K");
  fraudc->add_option("--top-j", fcfg.params.top_j, "global mixture truncation");
  fraudc->add_option("--local-history", fcfg.params.local_history,
                     "past windows kept in the local mixture");
  fraudc->add_flag("--scores-csv", fcfg.write_scores_csv,
                   "also write per-account scores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cluster->parsed()) {
      if (ccfg.train_path.empty() || ccfg.test_path.empty())
        throw ccsd::ConfigError("cluster: --train and --test are required");
      if (!seed_csv.empty()) ccfg.seeds = parse_seed_list(seed_csv);
      ccfg.method = method == "dtw" ? ccsd::cluster::Method::dtw
                                    : ccsd::cluster::Method::ccsd;
      const json report = ccsd::run::run_cluster(ccfg);
      std::cout << report.dump(2) << "\n";
    } else {
      if (fcfg.data_path.empty())
        throw ccsd::ConfigError("fraud: --data is required");
      fcfg.variants = resolve_variants(variant);
      const json report = ccsd::run::run_fraud(fcfg);
      std::cout << report.dump(2) << "\n";
    }
  } catch (const ccsd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
