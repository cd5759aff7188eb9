#pragma once

// End-to-end experiment driver behind the command-line front end: checked
// configuration, dataset loading, the tempered run, and every report artifact
// written under one output directory.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bayesgcn/proposals.hpp"

namespace bayesgcn {

struct CliConfig {
  std::string dataset_dir;
  std::string out_dir;
  int replicas = 8;
  long max_samples = 48000;  // total across replicas
  double tmax = 2.0;
  long swap_interval = 2;
  double switch_fraction = 0.6;
  std::string proposal = "adapt-lg";  // rw | lg | adapt-lg
  double lg_rate = 0.5;
  double lr = -1.0;     // negative means unset: 0.01 for adapt-lg, 0.1 for lg
  double rw_std = 0.005;
  double prior_var = 25.0;
  int hidden = 16;
  std::uint64_t seed = 1;
  long thin = 1;
  std::string q_correction = "none";  // none | exact
  bool grad_prior = true;             // differentiate prior as well as likelihood
  double burn_in = -1.0;              // negative means unset: switch_fraction
  std::vector<long> trace_weights = {0, 100, 1000, 5000, 8000};
  int hist_bins = 50;
};

// Every violated invariant as a "field: problem" line; empty means runnable.
std::vector<std::string> validate(const CliConfig& cfg);

// Throws std::invalid_argument on names other than rw, lg, adapt-lg.
ProposalKind parse_proposal(const std::string& name);

double resolved_lr(const CliConfig& cfg);
double resolved_burn_in(const CliConfig& cfg);

// Runs the experiment and writes run_summary.json, per-replica trace CSVs,
// per-weight trace/histogram CSVs, and per-replica sample binaries under
// cfg.out_dir; prints the accuracy/acceptance table to `table`. On failure,
// removes whatever files it had written and rethrows.
void run_experiment(const CliConfig& cfg, std::ostream& table);

}  // namespace bayesgcn
