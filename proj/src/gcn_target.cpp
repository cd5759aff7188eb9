#include "bayesgcn/gcn_target.hpp"

#include <stdexcept>

namespace bayesgcn {

GcnTarget::GcnTarget(const NormalizedGraph& graph, const CsrMatrix& features,
                     std::vector<int> labels, std::vector<int> train_mask,
                     std::vector<int> test_mask, Topology topology, double sigma2,
                     bool grad_includes_prior)
    : graph_(graph),
      features_(features),
      labels_(std::move(labels)),
      train_mask_(std::move(train_mask)),
      test_mask_(std::move(test_mask)),
      topology_(topology),
      sigma2_(sigma2),
      grad_includes_prior_(grad_includes_prior) {
  if (!(sigma2_ > 0.0)) throw std::invalid_argument("GcnTarget: sigma2 must be positive");
  if (train_mask_.empty()) throw std::invalid_argument("GcnTarget: empty train mask");
  if (test_mask_.empty()) throw std::invalid_argument("GcnTarget: empty test mask");
}

long GcnTarget::dim() const { return param_count(topology_); }

Evaluation GcnTarget::evaluate(const std::vector<double>& theta) const {
  const ModelOutput out = forward(graph_, features_, theta, topology_);
  Evaluation e;
  e.log_lik = log_likelihood(out, labels_, train_mask_);
  e.log_prior = log_prior(theta, sigma2_);
  e.train_acc = accuracy(out, labels_, train_mask_);
  e.test_acc = accuracy(out, labels_, test_mask_);
  return e;
}

Evaluation GcnTarget::evaluate_with_grad(const std::vector<double>& theta,
                                         std::vector<double>& grad) const {
  const ModelOutput out = forward(graph_, features_, theta, topology_);
  Evaluation e;
  e.log_lik = log_likelihood(out, labels_, train_mask_);
  e.log_prior = log_prior(theta, sigma2_);
  e.train_acc = accuracy(out, labels_, train_mask_);
  e.test_acc = accuracy(out, labels_, test_mask_);
  grad = backward(graph_, features_, labels_, train_mask_, theta, topology_, out, sigma2_,
                  grad_includes_prior_);
  return e;
}

std::vector<double> GcnTarget::init_position(Rng& rng) const {
  return glorot_init(topology_, rng);
}

}  // namespace bayesgcn
