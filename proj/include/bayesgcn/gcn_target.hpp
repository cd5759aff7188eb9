#pragma once

// Bayesian node-classification posterior: the GCN likelihood over the train
// mask plus the isotropic Gaussian prior, adapted to the sampler interface.
// Holds references to the caller-owned graph and features.

#include "bayesgcn/gcn_model.hpp"
#include "bayesgcn/target.hpp"

namespace bayesgcn {

class GcnTarget : public Target {
 public:
  GcnTarget(const NormalizedGraph& graph, const CsrMatrix& features,
            std::vector<int> labels, std::vector<int> train_mask, std::vector<int> test_mask,
            Topology topology, double sigma2, bool grad_includes_prior = true);

  long dim() const override;
  Evaluation evaluate(const std::vector<double>& theta) const override;
  Evaluation evaluate_with_grad(const std::vector<double>& theta,
                                std::vector<double>& grad) const override;
  std::vector<double> init_position(Rng& rng) const override;

  const Topology& topology() const { return topology_; }
  double sigma2() const { return sigma2_; }

 private:
  const NormalizedGraph& graph_;
  const CsrMatrix& features_;
  std::vector<int> labels_;
  std::vector<int> train_mask_;
  std::vector<int> test_mask_;
  Topology topology_;
  double sigma2_;
  bool grad_includes_prior_;
};

}  // namespace bayesgcn
