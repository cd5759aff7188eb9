#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "bayesgcn/gcn_model.hpp"
#include "bayesgcn/graph_data.hpp"
#include "bayesgcn/rng.hpp"

using namespace bayesgcn;

namespace {

struct Instance {
  Dataset ds;
  NormalizedGraph g;
  Topology topo;
  std::vector<double> theta;
};

Instance random_instance(long nodes, long features, int hidden, int classes, Rng& rng) {
  Instance inst;
  Dataset& ds = inst.ds;
  ds.num_nodes = nodes;
  ds.num_features = features;
  ds.num_classes = classes;

  for (int a = 0; a < nodes; ++a)
    for (int b = a + 1; b < nodes; ++b)
      if (rng.uniform() < 0.25) ds.edges.emplace_back(a, b);

  ds.features.rows = nodes;
  ds.features.cols = features;
  ds.features.row_start.assign(nodes + 1, 0);
  for (long i = 0; i < nodes; ++i) {
    for (long f = 0; f < features; ++f)
      if (rng.uniform() < 0.5) {
        ds.features.col_index.push_back(static_cast<int>(f));
        ds.features.values.push_back(rng.uniform(0.0, 2.0));
      }
    ds.features.row_start[i + 1] = static_cast<long>(ds.features.col_index.size());
  }

  ds.labels.resize(nodes);
  for (long i = 0; i < nodes; ++i) ds.labels[i] = static_cast<int>(rng.uniform_int(classes));
  for (int i = 0; i < nodes; ++i)
    (i % 2 == 0 ? ds.train_mask : ds.test_mask).push_back(i);

  inst.g = normalize(ds);
  inst.topo = Topology{features, hidden, classes};
  inst.theta.resize(param_count(inst.topo));
  for (double& v : inst.theta) v = rng.uniform(-0.8, 0.8);
  return inst;
}

Matrix densify_graph(const NormalizedGraph& g) {
  Matrix dense(g.n, g.n);
  for (long i = 0; i < g.n; ++i)
    for (long k = g.row_start[i]; k < g.row_start[i + 1]; ++k)
      dense.at(i, g.col_index[k]) = g.values[k];
  return dense;
}

Matrix densify_features(const CsrMatrix& x) {
  Matrix dense(x.rows, x.cols);
  for (long i = 0; i < x.rows; ++i)
    for (long k = x.row_start[i]; k < x.row_start[i + 1]; ++k)
      dense.at(i, x.col_index[k]) = x.values[k];
  return dense;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (long i = 0; i < a.rows; ++i)
    for (long k = 0; k < a.cols; ++k) {
      const double av = a.at(i, k);
      if (av == 0.0) continue;
      for (long j = 0; j < b.cols; ++j) out.at(i, j) += av * b.at(k, j);
    }
  return out;
}

// Straight-line dense reimplementation of the forward pass.
Matrix dense_forward(const Instance& inst) {
  const auto p = unflatten(inst.theta, inst.topo);
  const Matrix a_hat = densify_graph(inst.g);
  const Matrix x = densify_features(inst.ds.features);
  Matrix h = matmul(a_hat, matmul(x, p.w0));
  for (long i = 0; i < h.rows; ++i)
    for (long j = 0; j < h.cols; ++j) h.at(i, j) = std::max(0.0, h.at(i, j) + p.b0[j]);
  Matrix logits = matmul(a_hat, matmul(h, p.w1));
  for (long i = 0; i < logits.rows; ++i)
    for (long j = 0; j < logits.cols; ++j) logits.at(i, j) += p.b1[j];
  for (long i = 0; i < logits.rows; ++i) {
    double mx = logits.at(i, 0);
    for (long j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (long j = 0; j < logits.cols; ++j) sum += std::exp(logits.at(i, j) - mx);
    const double lse = mx + std::log(sum);
    for (long j = 0; j < logits.cols; ++j) logits.at(i, j) -= lse;
  }
  return logits;
}

double log_posterior_at(const Instance& inst, const std::vector<double>& theta, double sigma2) {
  const auto out = forward(inst.g, inst.ds.features, theta, inst.topo);
  return log_likelihood(out, inst.ds.labels, inst.ds.train_mask) + log_prior(theta, sigma2);
}

}  // namespace

TEST_CASE("param_count matches the benchmark topologies") {
  CHECK(param_count({1433, 16, 7}) == 23063);
  CHECK(param_count({3703, 16, 6}) == 59366);
  CHECK(param_count({500, 16, 3}) == 8067);
  CHECK(param_count({1, 1, 1}) == 4);
}

TEST_CASE("flatten and unflatten are bit-exact inverses") {
  const Topology t{7, 5, 3};
  Rng rng(2);
  std::vector<double> theta(param_count(t));
  for (double& v : theta) v = rng.uniform(-10.0, 10.0);
  const auto p = unflatten(theta, t);
  CHECK(p.w0.rows == 7);
  CHECK(p.w0.cols == 5);
  CHECK(p.b0.size() == 5);
  CHECK(p.w1.rows == 5);
  CHECK(p.w1.cols == 3);
  CHECK(p.b1.size() == 3);
  const auto back = flatten(p);
  REQUIRE(back.size() == theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) CHECK(back[i] == theta[i]);

  const auto layout = param_layout(t);
  CHECK(layout.w0 == 0);
  CHECK(layout.b0 == 35);
  CHECK(layout.w1 == 40);
  CHECK(layout.b1 == 55);
  CHECK(layout.total == 58);
}

TEST_CASE("zero parameters give a uniform predictive distribution") {
  Rng rng(3);
  auto inst = random_instance(6, 4, 3, 5, rng);
  std::fill(inst.theta.begin(), inst.theta.end(), 0.0);
  const auto out = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
  for (long i = 0; i < out.log_probs.rows; ++i)
    for (long j = 0; j < out.log_probs.cols; ++j)
      CHECK(out.log_probs.at(i, j) == doctest::Approx(std::log(1.0 / 5.0)).epsilon(1e-14));
}

TEST_CASE("forward matches a dense reference implementation") {
  Rng rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = random_instance(5 + rep, 3 + rep, 4, 3, rng);
    const auto out = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
    const auto want = dense_forward(inst);
    REQUIRE(out.log_probs.rows == want.rows);
    for (long i = 0; i < want.rows; ++i)
      for (long j = 0; j < want.cols; ++j)
        CHECK(std::abs(out.log_probs.at(i, j) - want.at(i, j)) <= 1e-12);
  }
}

TEST_CASE("softmax rows stay normalized even for huge logits") {
  Rng rng(5);
  auto inst = random_instance(6, 4, 3, 4, rng);
  const auto layout = param_layout(inst.topo);
  // Output biases at +-1e3 dominate the logits.
  for (int j = 0; j < inst.topo.out_classes; ++j)
    inst.theta[layout.b1 + j] = (j % 2 == 0 ? 1.0 : -1.0) * 1e3;
  const auto out = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
  for (long i = 0; i < out.log_probs.rows; ++i) {
    double sum = 0.0;
    for (long j = 0; j < out.log_probs.cols; ++j) {
      CHECK(std::isfinite(out.log_probs.at(i, j)));
      sum += std::exp(out.log_probs.at(i, j));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("forward rejects non-finite parameters") {
  Rng rng(6);
  auto inst = random_instance(4, 3, 2, 2, rng);
  inst.theta[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(inst.g, inst.ds.features, inst.theta, inst.topo),
                  std::invalid_argument);
}

TEST_CASE("log_likelihood worked examples") {
  SUBCASE("uniform output over 7 classes and 140 masked nodes") {
    ModelOutput out;
    out.log_probs = Matrix(150, 7);
    for (double& v : out.log_probs.data) v = std::log(1.0 / 7.0);
    std::vector<int> labels(150, 3);
    std::vector<int> mask(140);
    for (int i = 0; i < 140; ++i) mask[i] = i;
    const double got = log_likelihood(out, labels, mask);
    CHECK(got == doctest::Approx(140.0 * std::log(1.0 / 7.0)).epsilon(1e-13));
    CHECK(got == doctest::Approx(-272.43).epsilon(1e-4));
  }
  SUBCASE("perfect fit scores zero") {
    ModelOutput out;
    out.log_probs = Matrix(3, 2);
    std::vector<int> labels = {1, 0, 1};
    for (long i = 0; i < 3; ++i)
      for (long j = 0; j < 2; ++j) out.log_probs.at(i, j) = (j == labels[i]) ? 0.0 : -40.0;
    CHECK(log_likelihood(out, labels, {0, 1, 2}) == 0.0);
  }
  SUBCASE("empty mask throws") {
    ModelOutput out;
    out.log_probs = Matrix(2, 2);
    CHECK_THROWS_AS(log_likelihood(out, {0, 1}, {}), std::invalid_argument);
  }
  SUBCASE("matches a brute-force indicator sum") {
    Rng rng(7);
    const auto inst = random_instance(8, 4, 3, 3, rng);
    const auto out = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
    double want = 0.0;
    for (int i : inst.ds.train_mask)
      for (int k = 0; k < inst.topo.out_classes; ++k)
        if (inst.ds.labels[i] == k) want += out.log_probs.at(i, k);
    CHECK(log_likelihood(out, inst.ds.labels, inst.ds.train_mask) ==
          doctest::Approx(want).epsilon(1e-14));
    CHECK(log_likelihood(out, inst.ds.labels, inst.ds.train_mask) <= 0.0);
  }
  SUBCASE("invariant under a constant shift of every output bias") {
    Rng rng(8);
    auto inst = random_instance(7, 3, 3, 4, rng);
    const auto base = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
    const double ll0 = log_likelihood(base, inst.ds.labels, inst.ds.train_mask);
    const auto layout = param_layout(inst.topo);
    for (int j = 0; j < inst.topo.out_classes; ++j) inst.theta[layout.b1 + j] += 17.5;
    const auto shifted = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
    CHECK(log_likelihood(shifted, inst.ds.labels, inst.ds.train_mask) ==
          doctest::Approx(ll0).epsilon(1e-9));
  }
}

TEST_CASE("log_prior worked examples") {
  SUBCASE("zero vector, four parameters, unit variance") {
    const std::vector<double> theta(4, 0.0);
    CHECK(log_prior(theta, 1.0) ==
          doctest::Approx(-2.0 * std::log(2.0 * 3.14159265358979323846)).epsilon(1e-14));
  }
  SUBCASE("any nonzero vector scores below the mode") {
    Rng rng(9);
    std::vector<double> theta(10);
    for (double& v : theta) v = rng.uniform(-1.0, 1.0);
    theta[3] = 0.5;
    const std::vector<double> zero(10, 0.0);
    CHECK(log_prior(theta, 25.0) < log_prior(zero, 25.0));
  }
  SUBCASE("closed form at benchmark scale") {
    std::vector<double> theta(23063, 0.0);
    theta[0] = 10.0;  // norm-squared 100
    const double p = 23063.0;
    const double want = -(p / 2.0) * std::log(2.0 * 3.14159265358979323846 * 25.0) - 100.0 / 50.0;
    CHECK(log_prior(theta, 25.0) == doctest::Approx(want).epsilon(1e-14));
  }
  SUBCASE("nonpositive variance throws") {
    CHECK_THROWS_AS(log_prior(std::vector<double>(3, 0.0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(log_prior(std::vector<double>(3, 0.0), -1.0), std::invalid_argument);
  }
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(10);
  const double h = 1e-5;
  const double sigma2 = 25.0;
  for (int rep = 0; rep < 6; ++rep) {
    auto inst = random_instance(6 + 2 * rep, 5, 4, 3, rng);
    REQUIRE(param_count(inst.topo) <= 600);
    const auto grad = grad_log_posterior(inst.g, inst.ds.features, inst.ds.labels,
                                         inst.ds.train_mask, inst.theta, inst.topo, sigma2);
    auto theta = inst.theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + h;
      const double up = log_posterior_at(inst, theta, sigma2);
      theta[i] = keep - h;
      const double down = log_posterior_at(inst, theta, sigma2);
      theta[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double err = std::abs(grad[i] - fd);
      CHECK(err <= std::max(1e-8, 1e-5 * std::abs(fd)));
    }
  }
}

TEST_CASE("prior contribution to the gradient is exactly -theta/sigma2") {
  Rng rng(11);
  const auto inst = random_instance(6, 4, 3, 3, rng);
  const double sigma2 = 4.0;
  const auto out = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
  const auto with = backward(inst.g, inst.ds.features, inst.ds.labels, inst.ds.train_mask,
                             inst.theta, inst.topo, out, sigma2, true);
  const auto without = backward(inst.g, inst.ds.features, inst.ds.labels, inst.ds.train_mask,
                                inst.theta, inst.topo, out, sigma2, false);
  for (std::size_t i = 0; i < with.size(); ++i)
    CHECK(with[i] - without[i] == doctest::Approx(-inst.theta[i] / sigma2).epsilon(1e-12));

  SUBCASE("at theta = 0 the prior term vanishes") {
    std::vector<double> zero(inst.theta.size(), 0.0);
    const auto out0 = forward(inst.g, inst.ds.features, zero, inst.topo);
    const auto g1 = backward(inst.g, inst.ds.features, inst.ds.labels, inst.ds.train_mask, zero,
                             inst.topo, out0, sigma2, true);
    const auto g0 = backward(inst.g, inst.ds.features, inst.ds.labels, inst.ds.train_mask, zero,
                             inst.topo, out0, sigma2, false);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g0[i]);
  }
}

TEST_CASE("accuracy counts argmax hits with lowest-index tie-breaking") {
  SUBCASE("perfect predictor") {
    ModelOutput out;
    out.log_probs = Matrix(4, 3);
    std::vector<int> labels = {2, 0, 1, 2};
    for (long i = 0; i < 4; ++i)
      for (long j = 0; j < 3; ++j) out.log_probs.at(i, j) = (j == labels[i]) ? -0.1 : -5.0;
    CHECK(accuracy(out, labels, {0, 1, 2, 3}) == 100.0);
  }
  SUBCASE("uniform output resolves to class zero") {
    ModelOutput out;
    out.log_probs = Matrix(5, 7);
    for (double& v : out.log_probs.data) v = std::log(1.0 / 7.0);
    CHECK(accuracy(out, std::vector<int>(5, 0), {0, 1, 2, 3, 4}) == 100.0);
    CHECK(accuracy(out, std::vector<int>(5, 3), {0, 1, 2, 3, 4}) == 0.0);
  }
  SUBCASE("matches a naive recount") {
    Rng rng(12);
    const auto inst = random_instance(9, 4, 3, 4, rng);
    const auto out = forward(inst.g, inst.ds.features, inst.theta, inst.topo);
    long hits = 0;
    for (int i : inst.ds.test_mask) {
      int best = 0;
      for (int j = 1; j < inst.topo.out_classes; ++j)
        if (out.log_probs.at(i, j) > out.log_probs.at(i, best)) best = j;
      if (best == inst.ds.labels[i]) ++hits;
    }
    const double want = 100.0 * static_cast<double>(hits) / inst.ds.test_mask.size();
    CHECK(accuracy(out, inst.ds.labels, inst.ds.test_mask) == doctest::Approx(want));
  }
  SUBCASE("empty mask throws") {
    ModelOutput out;
    out.log_probs = Matrix(2, 2);
    CHECK_THROWS_AS(accuracy(out, {0, 1}, {}), std::invalid_argument);
  }
}

TEST_CASE("fan-scaled initialization: weights bounded, biases zero, stream-deterministic") {
  const Topology t{20, 8, 5};
  Rng a = Rng::stream(42, 1);
  Rng b = Rng::stream(42, 1);
  const auto theta1 = glorot_init(t, a);
  const auto theta2 = glorot_init(t, b);
  REQUIRE(theta1.size() == static_cast<std::size_t>(param_count(t)));
  for (std::size_t i = 0; i < theta1.size(); ++i) CHECK(theta1[i] == theta2[i]);

  const auto layout = param_layout(t);
  const double lim0 = std::sqrt(6.0 / (20 + 8));
  const double lim1 = std::sqrt(6.0 / (8 + 5));
  for (long i = layout.w0; i < layout.b0; ++i) CHECK(std::abs(theta1[i]) <= lim0);
  for (long i = layout.b0; i < layout.w1; ++i) CHECK(theta1[i] == 0.0);
  for (long i = layout.w1; i < layout.b1; ++i) CHECK(std::abs(theta1[i]) <= lim1);
  for (long i = layout.b1; i < layout.total; ++i) CHECK(theta1[i] == 0.0);

  bool any_nonzero = false;
  for (long i = layout.w0; i < layout.b0; ++i) any_nonzero |= theta1[i] != 0.0;
  CHECK(any_nonzero);
}
