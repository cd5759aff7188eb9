#include "bayesgcn/proposals.hpp"

#include <cmath>
#include <stdexcept>

namespace bayesgcn {
namespace {

void check_finite(const std::vector<double>& g, const char* what) {
  for (double v : g)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

// Gaussian log-density of x around mean with per-coordinate sd nu2, dropping
// the normalization constant shared by forward and reverse.
double log_q(const std::vector<double>& x, const std::vector<double>& mean, double nu2) {
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[i];
    ss += d * d;
  }
  return -ss / (2.0 * nu2 * nu2);
}

}  // namespace

double default_nu1(ProposalKind kind) {
  return kind == ProposalKind::lg ? 0.1 : 0.01;
}

AdamMoments make_moments(long dim) {
  AdamMoments m;
  m.m.assign(dim, 0.0);
  m.v.assign(dim, 0.0);
  return m;
}

Proposal propose_rw(const std::vector<double>& theta, const ProposalConfig& cfg, Rng& rng) {
  if (!(cfg.nu2 > 0.0)) throw std::invalid_argument("propose_rw: nu2 must be positive");
  Proposal p;
  p.theta_star.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) p.theta_star[i] = theta[i] + cfg.nu2 * rng.normal();
  return p;
}

std::vector<double> langevin_mean(const std::vector<double>& theta,
                                  const std::vector<double>& grad, double nu1) {
  if (grad.size() != theta.size()) throw std::invalid_argument("langevin_mean: size mismatch");
  check_finite(grad, "langevin_mean");
  std::vector<double> mean(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) mean[i] = theta[i] + nu1 * grad[i];
  return mean;
}

std::vector<double> adapt_step(const std::vector<double>& grad, AdamMoments& moments,
                               double nu1, const ProposalConfig& cfg) {
  if (grad.size() != moments.m.size()) throw std::invalid_argument("adapt_step: size mismatch");
  check_finite(grad, "adapt_step");
  moments.step += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(moments.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(moments.step));
  std::vector<double> dir(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    moments.m[i] = b1 * moments.m[i] + (1.0 - b1) * grad[i];
    moments.v[i] = b2 * moments.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    dir[i] = nu1 * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
  return dir;
}

Proposal propose_lg(const std::vector<double>& theta, const GradFn& grad_fn,
                    const ProposalConfig& cfg, AdamMoments& moments, Rng& rng) {
  if (cfg.kind == ProposalKind::random_walk)
    throw std::invalid_argument("propose_lg: config selects the random-walk kernel");
  if (!(cfg.nu2 > 0.0)) throw std::invalid_argument("propose_lg: nu2 must be positive");

  std::vector<double> grad;
  grad_fn(theta, grad);
  check_finite(grad, "propose_lg: gradient at theta");

  std::vector<double> dir;
  if (cfg.kind == ProposalKind::adapt_lg)
    dir = adapt_step(grad, moments, cfg.nu1, cfg);
  else {
    dir.resize(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) dir[i] = cfg.nu1 * grad[i];
  }

  Proposal p;
  p.used_gradient = true;
  std::vector<double> mean_f(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) mean_f[i] = theta[i] + dir[i];
  p.theta_star.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) p.theta_star[i] = mean_f[i] + cfg.nu2 * rng.normal();
  p.log_q_forward = log_q(p.theta_star, mean_f, cfg.nu2);

  std::vector<double> grad_star;
  grad_fn(p.theta_star, grad_star);
  check_finite(grad_star, "propose_lg: gradient at theta_star");

  std::vector<double> dir_r;
  if (cfg.kind == ProposalKind::adapt_lg) {
    AdamMoments snapshot = moments;  // post-forward buffers, not persisted
    dir_r = adapt_step(grad_star, snapshot, cfg.nu1, cfg);
  } else {
    dir_r.resize(grad_star.size());
    for (std::size_t i = 0; i < grad_star.size(); ++i) dir_r[i] = cfg.nu1 * grad_star[i];
  }
  std::vector<double> mean_r(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) mean_r[i] = p.theta_star[i] + dir_r[i];
  p.log_q_reverse = log_q(theta, mean_r, cfg.nu2);
  return p;
}

bool mh_accept(double log_lik_star, double log_lik, double log_prior_star, double log_prior,
               double log_q_ratio, double temperature, Rng& rng) {
  for (double v : {log_lik_star, log_lik, log_prior_star, log_prior, log_q_ratio})
    if (std::isnan(v)) throw std::invalid_argument("mh_accept: NaN input");
  if (!(temperature >= 1.0)) throw std::invalid_argument("mh_accept: temperature must be >= 1");
  const double log_alpha = (log_lik_star - log_lik) / temperature +
                           (log_prior_star - log_prior) + log_q_ratio;
  const double u = rng.uniform();
  return std::log(u) < log_alpha;
}

}  // namespace bayesgcn
