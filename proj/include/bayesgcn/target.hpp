#pragma once

// What the tempered sampler needs from a distribution: likelihood and prior
// log-densities (only the likelihood is tempered), the gradient of their sum,
// per-state metrics for the traces, and an initial position.

#include <vector>

#include "bayesgcn/rng.hpp"

namespace bayesgcn {

struct Evaluation {
  double log_lik = 0.0;
  double log_prior = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

class Target {
 public:
  virtual ~Target() = default;
  virtual long dim() const = 0;
  virtual Evaluation evaluate(const std::vector<double>& theta) const = 0;
  // Same as evaluate but also fills grad with d(log_lik + log_prior)/d theta.
  virtual Evaluation evaluate_with_grad(const std::vector<double>& theta,
                                        std::vector<double>& grad) const = 0;
  virtual std::vector<double> init_position(Rng& rng) const = 0;
};

}  // namespace bayesgcn
