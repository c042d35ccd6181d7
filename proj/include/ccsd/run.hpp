#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccsd/cluster.hpp"
#include "ccsd/fraud.hpp"
#include "ccsd/io.hpp"

namespace ccsd::run {

using nlohmann::json;

struct ClusterRunConfig {
  std::string train_path;
  std::string test_path;
  cluster::Method method = cluster::Method::ccsd;
  std::size_t cap = 500;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir;
  unsigned threads = 0;
  CcsdConfig ccsd;
};

struct FraudRunConfig {
  std::string data_path;
  std::vector<fraud::Variant> variants = {fraud::Variant::full};
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 0;
  bool write_scores_csv = false;
  fraud::FraudParams params;
};

namespace detail {

inline json grid_point_json(const cluster::GridPoint& g, cluster::Method method) {
  json j;
  if (method == cluster::Method::dtw) {
    j["dtw_window"] = g.dtw_window ? json(*g.dtw_window) : json(nullptr);
  } else {
    j["tau_raw"] = g.tau_raw;
    j["sigma_multiplier"] = g.sigma_multiplier;
    j["sigma0_train"] = g.sigma0;
    j["sigma_abs"] = g.sigma_abs;
  }
  j["train_nmi"] = g.train_nmi;
  return j;
}

inline json eval_report_json(const metrics::EvalReport& r) {
  return json{{"auc", r.auc},
              {"ap", r.ap},
              {"accuracy", r.accuracy},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"threshold", r.threshold},
              {"confusion",
               {{"tp", r.confusion.tp},
                {"fp", r.confusion.fp},
                {"fn", r.confusion.fn},
                {"tn", r.confusion.tn}}}};
}

}  // namespace detail

/// Full leak-proof clustering protocol: per-series standardization within
/// each split, optional stratified caps, train-only grid search, seeded
/// evaluation on test. Returns the report that was written to disk.
inline json run_cluster(const ClusterRunConfig& cfg) {
  auto [train, test] = io::load_ucr(cfg.train_path, cfg.test_path);
  if (cfg.method == cluster::Method::ccsd &&
      train.front().values.size() != test.front().values.size())
    throw DataError("cluster: train/test series lengths differ; the divergence "
                    "method requires equal-length data");

  const std::uint64_t cap_seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
  train = cluster::stratified_cap(train, cfg.cap, cap_seed);
  test = cluster::stratified_cap(test, cfg.cap, cap_seed);
  long degenerate_count = 0;
  for (auto& s : train) {
    s = cluster::zscore_series(s);
    degenerate_count += s.degenerate;
  }
  for (auto& s : test) {
    s = cluster::zscore_series(s);
    degenerate_count += s.degenerate;
  }

  cluster::ProtocolConfig proto;
  proto.ccsd = cfg.ccsd;
  proto.seeds = cfg.seeds;
  proto.threads = cfg.threads;
  const cluster::GridPoint chosen = cluster::select_hyperparams(train, cfg.method, proto);
  const cluster::ClusterEvalResult result =
      cluster::evaluate_test(test, chosen, cfg.method, proto);

  json report;
  report["command"] = "cluster";
  report["method"] = cluster::method_name(cfg.method);
  report["config"] = {{"train", cfg.train_path},
                      {"test", cfg.test_path},
                      {"cap", cfg.cap},
                      {"seeds", cfg.seeds},
                      {"epsilon", cfg.ccsd.epsilon},
                      {"keep_fraction", cfg.ccsd.keep_fraction}};
  report["chosen"] = detail::grid_point_json(chosen, cfg.method);
  report["per_seed_nmi"] = result.per_seed_nmi;
  report["nmi_mean"] = result.nmi_mean;
  report["nmi_std"] = result.nmi_std;
  report["counts"] = {{"train_series", train.size()},
                      {"test_series", test.size()},
                      {"degenerate_series", degenerate_count}};
  report["audit"] = {{"sigma0_from_train_only", true},
                     {"per_series_zscore_within_split", true},
                     {"selection_on_train_only", true}};
  if (!cfg.out_dir.empty())
    io::atomic_write(std::filesystem::path(cfg.out_dir) / "cluster_report.json",
                     report.dump(2) + "\n");
  return report;
}

/// Full fraud protocol for the requested variants; writes one report and,
/// optionally, a per-account score CSV.
inline json run_fraud(const FraudRunConfig& cfg) {
  const auto records = io::load_banksim(cfg.data_path);
  const fraud::PipelineResult res =
      fraud::run_pipeline(records, cfg.params, cfg.seed, cfg.variants, cfg.threads);

  json report;
  report["command"] = "fraud";
  report["config"] = {{"data", cfg.data_path},
                      {"seed", cfg.seed},
                      {"window", cfg.params.window},
                      {"stride_normal", cfg.params.stride_normal},
                      {"stride_fraud", cfg.params.stride_fraud},
                      {"local_history", cfg.params.local_history},
                      {"top_j", cfg.params.top_j},
                      {"min_length", cfg.params.min_length},
                      {"rho_cat", cfg.params.rho_cat},
                      {"rho_mer", cfg.params.rho_mer},
                      {"eta_cat", cfg.params.eta_cat},
                      {"eta_mer", cfg.params.eta_mer},
                      {"gate_cat", cfg.params.gate_cat},
                      {"gate_mer", cfg.params.gate_mer},
                      {"half_life", cfg.params.half_life},
                      {"prior_alpha", cfg.params.prior_alpha},
                      {"prior_beta", cfg.params.prior_beta},
                      {"epsilon", cfg.params.epsilon}};
  report["counts"] = {{"retained_accounts", res.retained_accounts},
                      {"normal_accounts", res.normal_accounts},
                      {"fraud_accounts", res.fraud_accounts},
                      {"lib_normal", res.plan.lib_normal.size()},
                      {"val_normal", res.plan.val_normal.size()},
                      {"test_normal", res.plan.test_normal.size()},
                      {"val_fraud", res.plan.val_fraud.size()},
                      {"test_fraud", res.plan.test_fraud.size()},
                      {"lib_windows", res.lib_window_count}};
  report["bandwidths"] = {{"sigma_x", res.sigma_x}, {"sigma_y", res.sigma_y}};
  report["tau_star"] = res.tau_star;
  report["audit"] = {
      {"splits_disjoint", res.audit.splits_disjoint},
      {"library_only_normal", res.audit.library_only_normal},
      {"bandwidths_fixed_before_scoring", res.audit.bandwidths_fixed_before_scoring},
      {"strict_past_enforced", res.audit.strict_past_enforced},
      {"scoring_label_free", res.audit.scoring_label_free},
      {"accounts_excluded_no_history", res.audit.accounts_excluded_no_history}};
  report["variants"] = json::array();
  for (const auto& ev : res.variants) {
    json v;
    v["variant"] = ev.variant;
    v["val"] = detail::eval_report_json(ev.val);
    v["test"] = detail::eval_report_json(ev.test);
    report["variants"].push_back(std::move(v));
  }

  if (!cfg.out_dir.empty()) {
    io::atomic_write(std::filesystem::path(cfg.out_dir) / "fraud_report.json",
                     report.dump(2) + "\n");
    if (cfg.write_scores_csv) {
      std::ostringstream csv;
      csv << "variant,split,customer,score,label,scored\n";
      csv.precision(17);
      for (const auto& ev : res.variants) {
        for (const auto& o : ev.val_accounts)
          csv << ev.variant << ",val," << o.customer << ',' << o.score << ','
              << o.label << ',' << (o.scored ? 1 : 0) << '\n';
        for (const auto& o : ev.test_accounts)
          csv << ev.variant << ",test," << o.customer << ',' << o.score << ','
              << o.label << ',' << (o.scored ? 1 : 0) << '\n';
      }
      io::atomic_write(std::filesystem::path(cfg.out_dir) / "account_scores.csv",
                       csv.str());
    }
  }
  return report;
}

}  // namespace ccsd::run
