#pragma once

// Proposal kernels and the tempered Metropolis-Hastings decision. Gradient
// proposals draw around a Langevin mean (plain scaled gradient, or an Adam
// direction with bias correction); the forward/reverse proposal log-densities
// are computed exactly, up to the shared Gaussian normalization constant,
// which cancels in the ratio and is omitted.

#include <functional>
#include <vector>

#include "bayesgcn/rng.hpp"

namespace bayesgcn {

enum class ProposalKind { random_walk, lg, adapt_lg };

struct ProposalConfig {
  ProposalKind kind = ProposalKind::adapt_lg;
  double nu1 = 0.01;    // gradient step scale (0.1 is the usual plain-lg value)
  double nu2 = 0.005;   // proposal noise standard deviation
  double lg_rate = 0.5; // per-step probability of the gradient kernel
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // When true the MH test applies the exact forward/reverse density ratio;
  // when false the gradient proposal is treated as symmetric, which is what
  // the reference results reflect at these step sizes.
  bool exact_q = false;
};

double default_nu1(ProposalKind kind);

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};
AdamMoments make_moments(long dim);

struct Proposal {
  std::vector<double> theta_star;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  bool used_gradient = false;
};

Proposal propose_rw(const std::vector<double>& theta, const ProposalConfig& cfg, Rng& rng);

// theta + nu1 * grad. Throws on non-finite gradient entries.
std::vector<double> langevin_mean(const std::vector<double>& theta,
                                  const std::vector<double>& grad, double nu1);

// One bias-corrected Adam update: moments absorb grad, and the returned
// direction is nu1 * m_hat / (sqrt(v_hat) + eps).
std::vector<double> adapt_step(const std::vector<double>& grad, AdamMoments& moments,
                               double nu1, const ProposalConfig& cfg);

using GradFn = std::function<void(const std::vector<double>& x, std::vector<double>& grad)>;

// Gradient proposal. Evaluates grad at theta for the forward mean and at
// theta_star for the reverse mean; for adapt_lg the reverse direction comes
// from a snapshot of the post-forward moment buffers, and `moments` keeps the
// post-forward update regardless of what the MH test later decides.
Proposal propose_lg(const std::vector<double>& theta, const GradFn& grad_fn,
                    const ProposalConfig& cfg, AdamMoments& moments, Rng& rng);

// Tempered MH: accept with probability
//   min{1, exp[(log_lik_star - log_lik)/temperature
//              + (log_prior_star - log_prior) + log_q_ratio]}.
// The prior is never tempered. Throws on NaN inputs or temperature < 1.
bool mh_accept(double log_lik_star, double log_lik, double log_prior_star, double log_prior,
               double log_q_ratio, double temperature, Rng& rng);

}  // namespace bayesgcn
