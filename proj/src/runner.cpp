#include "bayesgcn/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "bayesgcn/gcn_target.hpp"
#include "bayesgcn/graph_data.hpp"
#include "bayesgcn/posterior.hpp"
#include "bayesgcn/tempering.hpp"

namespace bayesgcn {

namespace fs = std::filesystem;

ProposalKind parse_proposal(const std::string& name) {
  if (name == "rw") return ProposalKind::random_walk;
  if (name == "lg") return ProposalKind::lg;
  if (name == "adapt-lg") return ProposalKind::adapt_lg;
  throw std::invalid_argument("proposal: unknown kind '" + name +
                              "' (expected rw, lg, or adapt-lg)");
}

double resolved_lr(const CliConfig& cfg) {
  if (cfg.lr >= 0.0) return cfg.lr;
  return default_nu1(parse_proposal(cfg.proposal));
}

double resolved_burn_in(const CliConfig& cfg) {
  return cfg.burn_in >= 0.0 ? cfg.burn_in : cfg.switch_fraction;
}

std::vector<std::string> validate(const CliConfig& cfg) {
  std::vector<std::string> errors;
  auto bad = [&](const std::string& msg) { errors.push_back(msg); };

  if (cfg.replicas < 1) bad("replicas: must be >= 1");
  if (cfg.max_samples < 1) bad("max-samples: must be >= 1");
  if (!(cfg.tmax >= 1.0)) bad("tmax: must be >= 1");
  if (cfg.swap_interval < 1) bad("swap-interval: must be >= 1");
  if (!(cfg.switch_fraction > 0.0 && cfg.switch_fraction < 1.0))
    bad("switch-fraction: must lie in (0, 1)");
  if (cfg.proposal != "rw" && cfg.proposal != "lg" && cfg.proposal != "adapt-lg")
    bad("proposal: must be one of rw, lg, adapt-lg");
  if (!(cfg.lg_rate >= 0.0 && cfg.lg_rate <= 1.0)) bad("lg-rate: must lie in [0, 1]");
  if (cfg.lr >= 0.0 && cfg.lr == 0.0) bad("lr: must be > 0");
  if (!(cfg.rw_std > 0.0)) bad("rw-std: must be > 0");
  if (!(cfg.prior_var > 0.0)) bad("prior-var: must be > 0");
  if (cfg.hidden < 1) bad("hidden: must be >= 1");
  if (cfg.thin < 1) bad("thin: must be >= 1");
  if (cfg.q_correction != "none" && cfg.q_correction != "exact")
    bad("q-correction: must be one of none, exact");
  if (cfg.burn_in >= 0.0 && !(cfg.burn_in < 1.0)) bad("burn-in: must lie in [0, 1)");
  if (cfg.hist_bins < 1) bad("hist-bins: must be >= 1");
  for (long id : cfg.trace_weights)
    if (id < 0) {
      bad("trace-weights: ids must be >= 0");
      break;
    }

  if (cfg.replicas >= 1 && cfg.max_samples >= 1) {
    const long budget = cfg.max_samples / cfg.replicas;
    if (budget < 1) {
      bad("max-samples: per-replica budget is zero (fewer samples than replicas)");
    } else if (cfg.switch_fraction > 0.0 && cfg.switch_fraction < 1.0 &&
               std::llround(cfg.switch_fraction * static_cast<double>(budget)) >= budget) {
      bad("max-samples: no post-switch samples left at this switch-fraction");
    }
  }
  return errors;
}

namespace {

nlohmann::ordered_json rhat_json(double value) {
  if (std::isinf(value)) return "inf";
  return value;
}

}  // namespace

void run_experiment(const CliConfig& cfg, std::ostream& table) {
  {
    const auto errors = validate(cfg);
    if (!errors.empty()) {
      std::string joined = "invalid configuration:";
      for (const auto& e : errors) joined += "\n  " + e;
      throw std::invalid_argument(joined);
    }
  }
  if (cfg.dataset_dir.empty()) throw std::invalid_argument("dataset-dir: must be set");
  if (cfg.out_dir.empty()) throw std::invalid_argument("out-dir: must be set");

  const Dataset ds = load_dataset(cfg.dataset_dir);
  const NormalizedGraph graph = normalize(ds);
  const Topology topo{ds.num_features, cfg.hidden, ds.num_classes};
  const GcnTarget target(graph, ds.features, ds.labels, ds.train_mask, ds.test_mask, topo,
                         cfg.prior_var, cfg.grad_prior);

  RunConfig rc;
  rc.replicas = cfg.replicas;
  rc.max_samples = cfg.max_samples;
  rc.t_max = cfg.tmax;
  rc.swap_interval = cfg.swap_interval;
  rc.switch_fraction = cfg.switch_fraction;
  rc.seed = cfg.seed;
  rc.thin = cfg.thin;
  rc.proposal.kind = parse_proposal(cfg.proposal);
  rc.proposal.nu1 = resolved_lr(cfg);
  rc.proposal.nu2 = cfg.rw_std;
  rc.proposal.lg_rate = cfg.lg_rate;
  rc.proposal.exact_q = cfg.q_correction == "exact";

  const RunResult rr = coordinate(target, rc);
  const double burn = resolved_burn_in(cfg);
  const long p_total = param_count(topo);

  // Weight ids past the parameter count are skipped (small graphs, default ids).
  std::vector<long> weight_ids;
  for (long id : cfg.trace_weights)
    if (id < p_total) weight_ids.push_back(id);

  fs::create_directories(cfg.out_dir);
  std::vector<fs::path> written;
  try {
    written = write_chain_outputs(cfg.out_dir, rr.chains, weight_ids, cfg.hist_bins, burn);

    const auto train = summarize(pool_trace(rr.chains, TraceKind::train_acc, burn));
    const auto pooled_test = pool_trace(rr.chains, TraceKind::test_acc, burn);
    const auto test = summarize(pooled_test);
    const long pooled_count = static_cast<long>(pooled_test.size());
    const double accept_pct =
        rr.total_proposals > 0 ? 100.0 * rr.total_accepted / rr.total_proposals : 0.0;
    const double swap_pct_attempts =
        rr.swap_attempts > 0 ? 100.0 * rr.swap_accepts / rr.swap_attempts : 0.0;
    const long total_steps = rr.per_replica_budget * cfg.replicas;
    const double swap_pct_samples =
        total_steps > 0 ? 100.0 * rr.swap_accepts / total_steps : 0.0;
    const double minutes = rr.wall_seconds / 60.0;

    nlohmann::ordered_json summary;
    summary["config"] = {{"dataset-dir", cfg.dataset_dir},
                         {"out-dir", cfg.out_dir},
                         {"replicas", cfg.replicas},
                         {"max-samples", cfg.max_samples},
                         {"tmax", cfg.tmax},
                         {"swap-interval", cfg.swap_interval},
                         {"switch-fraction", cfg.switch_fraction},
                         {"proposal", cfg.proposal},
                         {"lg-rate", cfg.lg_rate},
                         {"lr", resolved_lr(cfg)},
                         {"rw-std", cfg.rw_std},
                         {"prior-var", cfg.prior_var},
                         {"hidden", cfg.hidden},
                         {"seed", cfg.seed},
                         {"thin", cfg.thin},
                         {"q-correction", cfg.q_correction},
                         {"grad-prior", cfg.grad_prior},
                         {"burn-in", burn},
                         {"trace-weights", weight_ids},
                         {"hist-bins", cfg.hist_bins}};
    summary["dataset"] = {{"nodes", ds.num_nodes},
                          {"edges", static_cast<long>(ds.edges.size())},
                          {"features", ds.num_features},
                          {"classes", ds.num_classes},
                          {"train", static_cast<long>(ds.train_mask.size())},
                          {"test", static_cast<long>(ds.test_mask.size())},
                          {"parameters", p_total}};
    summary["run"] = {{"per-replica-budget", rr.per_replica_budget},
                      {"switch-index", rr.switch_index},
                      {"dropped-samples", cfg.max_samples - rr.per_replica_budget * cfg.replicas},
                      {"ladder", rr.ladder.temps}};
    summary["summary"] = {
        {"train-acc", {{"mean", train.mean}, {"max", train.max}, {"std", train.std_dev}}},
        {"test-acc", {{"mean", test.mean}, {"max", test.max}, {"std", test.std_dev}}},
        {"accept-pct", accept_pct},
        {"swap-pct-of-attempts", swap_pct_attempts},
        {"swap-pct-of-samples", swap_pct_samples},
        {"pooled-values", pooled_count}};
    nlohmann::ordered_json per_replica = nlohmann::ordered_json::array();
    for (const auto& c : rr.chains)
      per_replica.push_back({{"replica", c.replica_id},
                             {"temperature", c.base_temperature},
                             {"proposals", c.proposals},
                             {"accepted", c.accepted},
                             {"swaps-attempted", c.swaps_attempted},
                             {"swaps-accepted", c.swaps_accepted},
                             {"retained-samples", c.sample_count}});
    summary["counters"] = {{"proposals", rr.total_proposals},
                           {"accepted", rr.total_accepted},
                           {"swap-rounds", rr.swap_rounds},
                           {"swap-attempts", rr.swap_attempts},
                           {"swap-accepts", rr.swap_accepts},
                           {"per-replica", per_replica}};
    nlohmann::ordered_json rhat = nlohmann::ordered_json::object();
    for (long id : weight_ids) {
      const std::string key = "w" + std::to_string(id);
      if (cfg.replicas < 2) {
        rhat[key] = "n/a";
        continue;
      }
      rhat[key] = rhat_json(gelman_rubin(rr.chains, id, burn));
    }
    summary["rhat"] = rhat;
    summary["timing"] = {{"wall-seconds", rr.wall_seconds}, {"minutes", minutes}};

    const fs::path summary_path = fs::path(cfg.out_dir) / "run_summary.json";
    written.push_back(summary_path);
    std::ofstream out(summary_path, std::ios::out | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + summary_path.string());
    out << summary.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + summary_path.string());

    char line[128];
    std::snprintf(line, sizeof(line), "%-21s %8s %8s %8s\n", "metric", "mean", "max", "std");
    table << line;
    std::snprintf(line, sizeof(line), "%-21s %8.2f %8.2f %8.2f\n", "train acc", train.mean,
                  train.max, train.std_dev);
    table << line;
    std::snprintf(line, sizeof(line), "%-21s %8.2f %8.2f %8.2f\n", "test acc", test.mean,
                  test.max, test.std_dev);
    table << line;
    std::snprintf(line, sizeof(line), "%-21s %8.2f\n", "accept %", accept_pct);
    table << line;
    std::snprintf(line, sizeof(line), "%-21s %8.2f\n", "swap % (of attempts)",
                  swap_pct_attempts);
    table << line;
    std::snprintf(line, sizeof(line), "%-21s %8.2f\n", "swap % (of samples)", swap_pct_samples);
    table << line;
    std::snprintf(line, sizeof(line), "%-21s %8.2f\n", "time (min)", minutes);
    table << line;
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
}

}  // namespace bayesgcn
