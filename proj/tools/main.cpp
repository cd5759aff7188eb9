// bayesgcn: train a Bayesian graph convolutional network by sampling its
// posterior with parallel-tempered MCMC. Subcommands: run, validate, gen-data.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bayesgcn/graph_data.hpp"
#include "bayesgcn/runner.hpp"
#include "bayesgcn/synthetic.hpp"

namespace {

void add_config_options(CLI::App* cmd, bayesgcn::CliConfig& cfg) {
  cmd->add_option("--dataset-dir", cfg.dataset_dir, "Dataset directory");
  cmd->add_option("--out-dir", cfg.out_dir, "Output directory for run artifacts")
      ->envname("BAYESGCN_OUT_ROOT");
  cmd->add_option("--replicas", cfg.replicas, "Number of tempered replicas")
      ->capture_default_str();
  cmd->add_option("--max-samples", cfg.max_samples,
                  "Total sample budget, divided across replicas")
      ->capture_default_str();
  cmd->add_option("--tmax", cfg.tmax, "Top of the geometric temperature ladder")
      ->capture_default_str();
  cmd->add_option("--swap-interval", cfg.swap_interval, "Steps between swap rounds")
      ->capture_default_str();
  cmd->add_option("--switch-fraction", cfg.switch_fraction,
                  "Fraction of the budget run tempered before dropping to temperature 1")
      ->capture_default_str();
  cmd->add_option("--proposal", cfg.proposal, "Proposal kernel: rw, lg, or adapt-lg")
      ->capture_default_str();
  cmd->add_option("--lg-rate", cfg.lg_rate, "Per-step probability of the gradient kernel")
      ->capture_default_str();
  cmd->add_option("--lr", cfg.lr,
                  "Gradient step scale (default 0.01 for adapt-lg, 0.1 for lg)");
  cmd->add_option("--rw-std", cfg.rw_std, "Proposal noise standard deviation")
      ->capture_default_str();
  cmd->add_option("--prior-var", cfg.prior_var, "Gaussian prior variance")
      ->capture_default_str();
  cmd->add_option("--hidden", cfg.hidden, "Hidden layer width")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Master RNG seed")->capture_default_str();
  cmd->add_option("--thin", cfg.thin, "Stride between retained parameter vectors")
      ->capture_default_str();
  cmd->add_option("--q-correction", cfg.q_correction,
                  "Proposal-density ratio in the acceptance test: none or exact")
      ->capture_default_str();
  cmd->add_flag("--grad-prior,!--no-grad-prior", cfg.grad_prior,
                "Include the prior term in proposal gradients");
  cmd->add_option("--burn-in", cfg.burn_in,
                  "Burn-in fraction for pooled statistics (default: switch-fraction)");
  cmd->add_option("--trace-weights", cfg.trace_weights,
                  "Weight ids exported as traces/histograms")
      ->delimiter(',');
  cmd->add_option("--hist-bins", cfg.hist_bins, "Histogram bin count")->capture_default_str();
  cmd->set_config("--config", "", "Flat key=value configuration file; flags override it");
}

int do_run(const bayesgcn::CliConfig& cfg) {
  const auto errors = bayesgcn::validate(cfg);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    return 1;
  }
  if (cfg.dataset_dir.empty()) {
    std::cerr << "error: dataset-dir: must be set\n";
    return 1;
  }
  if (cfg.out_dir.empty()) {
    std::cerr << "error: out-dir: must be set (flag or BAYESGCN_OUT_ROOT)\n";
    return 1;
  }
  bayesgcn::run_experiment(cfg, std::cout);
  std::cout << "outputs written to " << cfg.out_dir << '\n';
  return 0;
}

int do_validate(const bayesgcn::CliConfig& cfg) {
  const auto errors = bayesgcn::validate(cfg);
  if (errors.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& e : errors) std::cout << e << '\n';
  return 1;
}

int do_gen_data(const std::string& name, const std::string& out, std::uint64_t seed) {
  auto spec = bayesgcn::benchmark_spec(name);
  const auto ds = bayesgcn::generate_dataset(spec, seed);
  bayesgcn::write_dataset(ds, out);
  std::cout << "wrote " << name << " (" << ds.num_nodes << " nodes, " << ds.edges.size()
            << " edges) to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian graph convolutional networks via parallel-tempered MCMC"};
  app.require_subcommand(1);

  bayesgcn::CliConfig cfg;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment end to end");
  add_config_options(run_cmd, cfg);

  bayesgcn::CliConfig check_cfg;
  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration and exit");
  add_config_options(validate_cmd, check_cfg);

  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic benchmark dataset");
  std::string gen_name;
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--name", gen_name, "Preset: cora, citeseer, or pubmed")->required();
  gen_cmd->add_option("--out", gen_out, "Destination directory")->required();
  gen_cmd->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(cfg);
    if (validate_cmd->parsed()) return do_validate(check_cfg);
    if (gen_cmd->parsed()) return do_gen_data(gen_name, gen_out, gen_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
