#pragma once

// Parallel-tempered MCMC driver: a geometric temperature ladder, one worker
// per replica, and barrier-synchronized swap rounds handled by a manager
// stream. Only the likelihood is tempered; after the configured fraction of
// the budget every replica samples at temperature 1 and exchanges stop.
//
// Determinism contract: for a fixed master seed and replica count the results
// are bit-identical regardless of thread scheduling. All randomness lives in
// per-replica streams plus one manager stream, and replicas only interact at
// the swap barriers.

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "bayesgcn/proposals.hpp"
#include "bayesgcn/rng.hpp"
#include "bayesgcn/target.hpp"

namespace bayesgcn {

struct Ladder {
  std::vector<double> temps;  // temps[i] = t_max^(i/(M-1)); temps[0] = 1
};

Ladder build_ladder(int replicas, double t_max);

// log of the swap acceptance probability for replicas at temperatures t_i and
// t_j with cached log-likelihoods: min{0, (1/t_i - 1/t_j) (log_lik_j - log_lik_i)}.
double swap_log_prob(double log_lik_i, double log_lik_j, double t_i, double t_j);

struct ReplicaState {
  int id = 0;
  double base_temperature = 1.0;  // ladder position, fixed for the run
  double temperature = 1.0;       // effective value for the current step
  Rng rng;
  std::vector<double> theta;
  AdamMoments moments;
  double log_lik = 0.0;
  double log_prior = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::vector<double> grad;  // cached gradient at theta, when grad_valid
  bool grad_valid = false;
  long proposals = 0;
  long accepted = 0;
  long swaps_attempted = 0;
  long swaps_accepted = 0;

  explicit ReplicaState(Rng r) : rng(r) {}
};

struct RunConfig {
  int replicas = 8;
  long max_samples = 48000;  // total across replicas; per-replica budget = floor
  double t_max = 2.0;
  long swap_interval = 2;
  double switch_fraction = 0.6;
  ProposalConfig proposal;
  std::uint64_t seed = 1;
  long thin = 1;  // stride for retained post-switch parameter vectors
};

// Everything one replica records: full-length scalar traces plus thinned
// post-switch parameter vectors (flat, sample_count x dim row-major).
struct ChainStore {
  int replica_id = 0;
  double base_temperature = 1.0;
  long budget = 0;
  long switch_index = 0;
  long thin = 1;
  std::vector<double> log_lik_trace;
  std::vector<double> train_acc_trace;
  std::vector<double> test_acc_trace;
  std::vector<long> sample_steps;
  std::vector<double> sample_data;
  long sample_count = 0;
  long param_dim = 0;
  long proposals = 0;
  long accepted = 0;
  long swaps_attempted = 0;
  long swaps_accepted = 0;

  const double* sample_row(long s) const { return sample_data.data() + s * param_dim; }
};

// Attempts one exchange between adjacent replicas: draws from the manager
// stream, and on acceptance swaps theta, moments, cached log-densities,
// metrics and gradient cache. Temperatures stay with the ladder positions.
bool swap_event(ReplicaState& a, ReplicaState& b, Rng& manager_rng);

// Barrier shared by all workers. The last replica to arrive runs the swap
// pass (sequential adjacent pairs, manager stream) while the others wait.
class SwapChannel {
 public:
  SwapChannel(std::vector<ReplicaState*> states, Rng manager_rng, long switch_index,
              long swap_interval);

  // Blocks until every replica has arrived; throws ChannelAborted if the run
  // was aborted while waiting.
  void rendezvous();

  // Wakes all waiters and poisons the channel after a worker failure.
  void abort();

  long rounds() const { return rounds_; }
  long swap_attempts() const { return attempts_; }
  long swap_accepts() const { return accepts_; }

 private:
  void swap_pass();

  std::vector<ReplicaState*> states_;
  Rng manager_rng_;
  long switch_index_;
  long swap_interval_;
  std::mutex mu_;
  std::condition_variable cv_;
  int arrived_ = 0;
  long generation_ = 0;
  bool aborted_ = false;
  long rounds_ = 0;
  long attempts_ = 0;
  long accepts_ = 0;
};

class ChannelAborted : public std::runtime_error {
 public:
  ChannelAborted() : std::runtime_error("swap channel aborted: a replica worker failed") {}
};

// Runs one replica for `budget` steps: initializes theta from the replica's
// own stream, chooses the kernel per step (Bernoulli lg_rate for gradient
// kinds), applies the tempered MH test, re-records the previous state on
// rejection, and synchronizes with the swap channel every swap_interval
// steps. channel may be null (single chain, no exchanges).
ChainStore run_replica(ReplicaState& state, const Target& target, const RunConfig& cfg,
                       long budget, long switch_index, SwapChannel* channel);

struct RunResult {
  std::vector<ChainStore> chains;
  Ladder ladder;
  long per_replica_budget = 0;
  long switch_index = 0;
  long swap_rounds = 0;
  long swap_attempts = 0;
  long swap_accepts = 0;
  long total_proposals = 0;
  long total_accepted = 0;
  double wall_seconds = 0.0;
};

// Spawns one worker per replica plus the shared swap barrier, joins them, and
// aggregates counters. Worker failures abort the whole run and rethrow.
RunResult coordinate(const Target& target, const RunConfig& cfg);

}  // namespace bayesgcn
