#include "bayesgcn/tempering.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace bayesgcn {

Ladder build_ladder(int replicas, double t_max) {
  if (replicas < 1) throw std::invalid_argument("build_ladder: need at least one replica");
  if (!(t_max >= 1.0)) throw std::invalid_argument("build_ladder: t_max must be >= 1");
  Ladder ladder;
  ladder.temps.resize(replicas);
  ladder.temps[0] = 1.0;
  if (replicas == 1) return ladder;
  for (int i = 1; i + 1 < replicas; ++i)
    ladder.temps[i] = std::pow(t_max, static_cast<double>(i) / (replicas - 1));
  ladder.temps[replicas - 1] = t_max;
  return ladder;
}

double swap_log_prob(double log_lik_i, double log_lik_j, double t_i, double t_j) {
  if (std::isnan(log_lik_i) || std::isnan(log_lik_j))
    throw std::invalid_argument("swap_log_prob: NaN log-likelihood");
  if (!(t_i >= 1.0) || !(t_j >= 1.0))
    throw std::invalid_argument("swap_log_prob: temperatures must be >= 1");
  if (t_i == t_j) return 0.0;
  const double x = (1.0 / t_i - 1.0 / t_j) * (log_lik_j - log_lik_i);
  return x < 0.0 ? x : 0.0;
}

bool swap_event(ReplicaState& a, ReplicaState& b, Rng& manager_rng) {
  const double lp = swap_log_prob(a.log_lik, b.log_lik, a.temperature, b.temperature);
  ++a.swaps_attempted;
  ++b.swaps_attempted;
  const double u = manager_rng.uniform();
  if (!(std::log(u) < lp)) return false;
  std::swap(a.theta, b.theta);
  std::swap(a.moments, b.moments);
  std::swap(a.log_lik, b.log_lik);
  std::swap(a.log_prior, b.log_prior);
  std::swap(a.train_acc, b.train_acc);
  std::swap(a.test_acc, b.test_acc);
  std::swap(a.grad, b.grad);
  std::swap(a.grad_valid, b.grad_valid);
  ++a.swaps_accepted;
  ++b.swaps_accepted;
  return true;
}

SwapChannel::SwapChannel(std::vector<ReplicaState*> states, Rng manager_rng, long switch_index,
                         long swap_interval)
    : states_(std::move(states)),
      manager_rng_(manager_rng),
      switch_index_(switch_index),
      swap_interval_(swap_interval) {}

void SwapChannel::swap_pass() {
  ++rounds_;
  // Steps completed by every replica so far; exchanges only act while the
  // next step is still tempered.
  const long next_step = rounds_ * swap_interval_;
  if (next_step >= switch_index_) return;
  for (std::size_t i = 0; i + 1 < states_.size(); ++i) {
    ++attempts_;
    if (swap_event(*states_[i], *states_[i + 1], manager_rng_)) ++accepts_;
  }
}

void SwapChannel::rendezvous() {
  std::unique_lock<std::mutex> lk(mu_);
  if (aborted_) throw ChannelAborted();
  ++arrived_;
  if (arrived_ == static_cast<int>(states_.size())) {
    swap_pass();
    arrived_ = 0;
    ++generation_;
    cv_.notify_all();
    return;
  }
  const long gen = generation_;
  cv_.wait(lk, [&] { return generation_ != gen || aborted_; });
  if (aborted_) throw ChannelAborted();
}

void SwapChannel::abort() {
  std::lock_guard<std::mutex> lk(mu_);
  aborted_ = true;
  cv_.notify_all();
}

ChainStore run_replica(ReplicaState& st, const Target& target, const RunConfig& cfg,
                       long budget, long switch_index, SwapChannel* channel) {
  const long dim = target.dim();
  ChainStore out;
  out.replica_id = st.id;
  out.base_temperature = st.base_temperature;
  out.budget = budget;
  out.switch_index = switch_index;
  out.thin = cfg.thin;
  out.param_dim = dim;
  out.log_lik_trace.reserve(budget);
  out.train_acc_trace.reserve(budget);
  out.test_acc_trace.reserve(budget);

  st.theta = target.init_position(st.rng);
  if (static_cast<long>(st.theta.size()) != dim)
    throw std::logic_error("target init_position size does not match dim");
  st.moments = make_moments(dim);
  const Evaluation init = target.evaluate(st.theta);
  st.log_lik = init.log_lik;
  st.log_prior = init.log_prior;
  st.train_acc = init.train_acc;
  st.test_acc = init.test_acc;
  st.grad_valid = false;

  for (long s = 0; s < budget; ++s) {
    st.temperature = (s < switch_index) ? st.base_temperature : 1.0;

    bool use_grad = false;
    if (cfg.proposal.kind != ProposalKind::random_walk)
      use_grad = st.rng.uniform() < cfg.proposal.lg_rate;

    Proposal prop;
    Evaluation eval_star;
    std::vector<double> grad_star;
    bool have_grad_star = false;
    if (use_grad) {
      int call = 0;
      const GradFn fn = [&](const std::vector<double>& x, std::vector<double>& gout) {
        if (++call == 1) {
          if (st.grad_valid) {
            gout = st.grad;
            return;
          }
          target.evaluate_with_grad(x, gout);
          st.grad = gout;
          st.grad_valid = true;
        } else {
          eval_star = target.evaluate_with_grad(x, gout);
          grad_star = gout;
          have_grad_star = true;
        }
      };
      prop = propose_lg(st.theta, fn, cfg.proposal, st.moments, st.rng);
    } else {
      prop = propose_rw(st.theta, cfg.proposal, st.rng);
      eval_star = target.evaluate(prop.theta_star);
    }

    const double log_q_ratio =
        cfg.proposal.exact_q ? prop.log_q_reverse - prop.log_q_forward : 0.0;
    const bool accept = mh_accept(eval_star.log_lik, st.log_lik, eval_star.log_prior,
                                  st.log_prior, log_q_ratio, st.temperature, st.rng);
    ++st.proposals;
    if (accept) {
      ++st.accepted;
      st.theta = std::move(prop.theta_star);
      st.log_lik = eval_star.log_lik;
      st.log_prior = eval_star.log_prior;
      st.train_acc = eval_star.train_acc;
      st.test_acc = eval_star.test_acc;
      if (have_grad_star) {
        st.grad = std::move(grad_star);
        st.grad_valid = true;
      } else {
        st.grad_valid = false;
      }
    }

    out.log_lik_trace.push_back(st.log_lik);
    out.train_acc_trace.push_back(st.train_acc);
    out.test_acc_trace.push_back(st.test_acc);
    if (s >= switch_index && (s - switch_index) % cfg.thin == 0) {
      out.sample_steps.push_back(s);
      out.sample_data.insert(out.sample_data.end(), st.theta.begin(), st.theta.end());
      ++out.sample_count;
    }

    if (channel && (s + 1) % cfg.swap_interval == 0 && (s + 1) < budget)
      channel->rendezvous();
  }

  out.proposals = st.proposals;
  out.accepted = st.accepted;
  out.swaps_attempted = st.swaps_attempted;
  out.swaps_accepted = st.swaps_accepted;
  return out;
}

RunResult coordinate(const Target& target, const RunConfig& cfg) {
  if (cfg.replicas < 1) throw std::invalid_argument("coordinate: replicas must be >= 1");
  if (cfg.max_samples < 0) throw std::invalid_argument("coordinate: max_samples must be >= 0");
  if (cfg.swap_interval < 1) throw std::invalid_argument("coordinate: swap_interval must be >= 1");
  if (!(cfg.switch_fraction > 0.0 && cfg.switch_fraction < 1.0))
    throw std::invalid_argument("coordinate: switch_fraction must lie in (0, 1)");
  if (cfg.thin < 1) throw std::invalid_argument("coordinate: thin must be >= 1");

  RunResult result;
  result.ladder = build_ladder(cfg.replicas, cfg.t_max);
  const long budget = cfg.max_samples / cfg.replicas;
  long switch_index = std::llround(cfg.switch_fraction * static_cast<double>(budget));
  if (switch_index < 0) switch_index = 0;
  if (switch_index > budget) switch_index = budget;
  result.per_replica_budget = budget;
  result.switch_index = switch_index;

  const int m = cfg.replicas;
  std::vector<ReplicaState> states;
  states.reserve(m);
  for (int i = 0; i < m; ++i) {
    ReplicaState st(Rng::stream(cfg.seed, static_cast<std::uint64_t>(i) + 1));
    st.id = i;
    st.base_temperature = result.ladder.temps[i];
    st.temperature = st.base_temperature;
    states.push_back(std::move(st));
  }
  std::vector<ReplicaState*> state_ptrs;
  for (auto& st : states) state_ptrs.push_back(&st);
  SwapChannel channel(state_ptrs, Rng::stream(cfg.seed, 0), switch_index, cfg.swap_interval);

  result.chains.resize(m);
  std::vector<std::exception_ptr> errors(m);
  const auto t0 = std::chrono::steady_clock::now();
  {
    std::vector<std::thread> workers;
    workers.reserve(m);
    for (int i = 0; i < m; ++i)
      workers.emplace_back([&, i] {
        try {
          result.chains[i] = run_replica(states[i], target, cfg, budget, switch_index,
                                         m > 1 ? &channel : nullptr);
        } catch (...) {
          errors[i] = std::current_exception();
          channel.abort();
        }
      });
    for (auto& w : workers) w.join();
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Prefer the root cause over barrier-abort fallout.
  for (int i = 0; i < m; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ChannelAborted&) {
      continue;
    } catch (...) {
      throw;
    }
  }
  for (int i = 0; i < m; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);

  result.swap_rounds = channel.rounds();
  result.swap_attempts = channel.swap_attempts();
  result.swap_accepts = channel.swap_accepts();
  for (const auto& c : result.chains) {
    result.total_proposals += c.proposals;
    result.total_accepted += c.accepted;
  }
  return result;
}

}  // namespace bayesgcn
