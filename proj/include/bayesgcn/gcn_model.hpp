#pragma once

// Two-layer graph convolutional network over the normalized adjacency, with
// the masked multinomial log-likelihood, Gaussian log-prior, and the exact
// reverse-mode gradient of the log-posterior. All parameters live in one flat
// vector laid out as [W0 | b0 | W1 | b1], row-major per matrix.

#include <span>
#include <vector>

#include "bayesgcn/graph_data.hpp"
#include "bayesgcn/linalg.hpp"
#include "bayesgcn/rng.hpp"

namespace bayesgcn {

struct Topology {
  long in_features = 0;
  int hidden = 0;
  int out_classes = 0;
};

long param_count(const Topology& t);

// Offsets of each block inside the flat parameter vector.
struct ParamLayout {
  long w0 = 0, b0 = 0, w1 = 0, b1 = 0, total = 0;
};
ParamLayout param_layout(const Topology& t);

struct GcnParams {
  Matrix w0;               // in_features x hidden
  std::vector<double> b0;  // hidden
  Matrix w1;               // hidden x out_classes
  std::vector<double> b1;  // out_classes
};

std::vector<double> flatten(const GcnParams& p);
GcnParams unflatten(std::span<const double> theta, const Topology& t);

struct ModelOutput {
  Matrix log_probs;  // nodes x out_classes, rows are log softmax outputs
  Matrix hidden;     // nodes x hidden, post-relu activations
};

// log_probs = log softmax(A_hat * relu(A_hat * X * W0 + b0) * W1 + b1).
ModelOutput forward(const NormalizedGraph& g, const CsrMatrix& x,
                    std::span<const double> theta, const Topology& t);

// Sum of log_probs[i][labels[i]] over the mask. Throws on an empty mask.
double log_likelihood(const ModelOutput& out, const std::vector<int>& labels,
                      const std::vector<int>& mask);

// Isotropic Gaussian: -(P/2) log(2 pi sigma2) - sum(theta^2) / (2 sigma2).
double log_prior(std::span<const double> theta, double sigma2);

// Percentage of masked nodes whose argmax class (ties to the lowest index)
// matches the label.
double accuracy(const ModelOutput& out, const std::vector<int>& labels,
                const std::vector<int>& mask);

// Gradient of log_likelihood (+ log_prior unless include_prior is false) with
// respect to theta, evaluated from the cached activations in `out`.
std::vector<double> backward(const NormalizedGraph& g, const CsrMatrix& x,
                             const std::vector<int>& labels, const std::vector<int>& mask,
                             std::span<const double> theta, const Topology& t,
                             const ModelOutput& out, double sigma2, bool include_prior = true);

std::vector<double> grad_log_posterior(const NormalizedGraph& g, const CsrMatrix& x,
                                       const std::vector<int>& labels, const std::vector<int>& mask,
                                       std::span<const double> theta, const Topology& t,
                                       double sigma2, bool include_prior = true);

// Symmetric-uniform fan scaling per weight matrix (limit sqrt(6/(fan_in+fan_out)));
// biases start at zero.
std::vector<double> glorot_init(const Topology& t, Rng& rng);

}  // namespace bayesgcn
