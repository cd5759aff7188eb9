#include "bayesgcn/gcn_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bayesgcn {
namespace {

void check_topology(const Topology& t) {
  if (t.in_features <= 0 || t.hidden <= 0 || t.out_classes <= 0)
    throw std::invalid_argument("topology dimensions must be positive");
}

// x (CSR, n x f) times w (f x c), accumulated densely.
Matrix sparse_dense(const CsrMatrix& x, const double* w, long c) {
  Matrix out(x.rows, c);
  for (long i = 0; i < x.rows; ++i) {
    double* oi = out.row(i);
    for (long k = x.row_start[i]; k < x.row_start[i + 1]; ++k) {
      const double v = x.values[k];
      const double* wr = w + static_cast<std::size_t>(x.col_index[k]) * c;
      for (long t = 0; t < c; ++t) oi[t] += v * wr[t];
    }
  }
  return out;
}

}  // namespace

long param_count(const Topology& t) {
  check_topology(t);
  return t.in_features * t.hidden + t.hidden +
         static_cast<long>(t.hidden) * t.out_classes + t.out_classes;
}

ParamLayout param_layout(const Topology& t) {
  ParamLayout l;
  l.w0 = 0;
  l.b0 = l.w0 + t.in_features * t.hidden;
  l.w1 = l.b0 + t.hidden;
  l.b1 = l.w1 + static_cast<long>(t.hidden) * t.out_classes;
  l.total = l.b1 + t.out_classes;
  return l;
}

std::vector<double> flatten(const GcnParams& p) {
  std::vector<double> theta;
  theta.reserve(p.w0.data.size() + p.b0.size() + p.w1.data.size() + p.b1.size());
  theta.insert(theta.end(), p.w0.data.begin(), p.w0.data.end());
  theta.insert(theta.end(), p.b0.begin(), p.b0.end());
  theta.insert(theta.end(), p.w1.data.begin(), p.w1.data.end());
  theta.insert(theta.end(), p.b1.begin(), p.b1.end());
  return theta;
}

GcnParams unflatten(std::span<const double> theta, const Topology& t) {
  const ParamLayout l = param_layout(t);
  if (static_cast<long>(theta.size()) != l.total)
    throw std::invalid_argument("parameter vector has wrong length");
  GcnParams p;
  p.w0 = Matrix(t.in_features, t.hidden);
  std::copy_n(theta.begin() + l.w0, p.w0.data.size(), p.w0.data.begin());
  p.b0.assign(theta.begin() + l.b0, theta.begin() + l.b0 + t.hidden);
  p.w1 = Matrix(t.hidden, t.out_classes);
  std::copy_n(theta.begin() + l.w1, p.w1.data.size(), p.w1.data.begin());
  p.b1.assign(theta.begin() + l.b1, theta.begin() + l.b1 + t.out_classes);
  return p;
}

ModelOutput forward(const NormalizedGraph& g, const CsrMatrix& x,
                    std::span<const double> theta, const Topology& t) {
  const ParamLayout l = param_layout(t);
  if (static_cast<long>(theta.size()) != l.total)
    throw std::invalid_argument("parameter vector has wrong length");
  if (x.rows != g.n) throw std::invalid_argument("feature row count does not match graph");
  if (x.cols != t.in_features) throw std::invalid_argument("feature columns do not match topology");
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite parameter value");

  const double* w0 = theta.data() + l.w0;
  const double* b0 = theta.data() + l.b0;
  const double* w1 = theta.data() + l.w1;
  const double* b1 = theta.data() + l.b1;
  const long h = t.hidden;
  const long k = t.out_classes;

  Matrix xw = sparse_dense(x, w0, h);
  Matrix pre1 = spmm(g, xw);
  for (long i = 0; i < g.n; ++i) {
    double* row = pre1.row(i);
    for (long a = 0; a < h; ++a) {
      const double v = row[a] + b0[a];
      row[a] = v > 0.0 ? v : 0.0;
    }
  }

  Matrix u(g.n, k);
  for (long i = 0; i < g.n; ++i) {
    const double* hi = pre1.row(i);
    double* ui = u.row(i);
    for (long a = 0; a < h; ++a) {
      const double v = hi[a];
      if (v == 0.0) continue;
      const double* w1a = w1 + a * k;
      for (long c = 0; c < k; ++c) ui[c] += v * w1a[c];
    }
  }
  Matrix logits = spmm(g, u);

  ModelOutput out;
  out.hidden = std::move(pre1);
  out.log_probs = Matrix(g.n, k);
  for (long i = 0; i < g.n; ++i) {
    double* row = logits.row(i);
    for (long c = 0; c < k; ++c) row[c] += b1[c];
    double m = row[0];
    for (long c = 1; c < k; ++c) m = std::max(m, row[c]);
    double sum = 0.0;
    for (long c = 0; c < k; ++c) sum += std::exp(row[c] - m);
    const double lse = m + std::log(sum);
    double* lp = out.log_probs.row(i);
    for (long c = 0; c < k; ++c) lp[c] = row[c] - lse;
  }
  return out;
}

double log_likelihood(const ModelOutput& out, const std::vector<int>& labels,
                      const std::vector<int>& mask) {
  if (mask.empty()) throw std::invalid_argument("log_likelihood: empty mask");
  double sum = 0.0;
  for (int i : mask) sum += out.log_probs.at(i, labels[i]);
  return sum;
}

double log_prior(std::span<const double> theta, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("log_prior: sigma2 must be positive");
  double ss = 0.0;
  for (double v : theta) ss += v * v;
  const double p = static_cast<double>(theta.size());
  return -0.5 * p * std::log(2.0 * 3.14159265358979323846 * sigma2) - ss / (2.0 * sigma2);
}

double accuracy(const ModelOutput& out, const std::vector<int>& labels,
                const std::vector<int>& mask) {
  if (mask.empty()) throw std::invalid_argument("accuracy: empty mask");
  long hits = 0;
  const long k = out.log_probs.cols;
  for (int i : mask) {
    const double* row = out.log_probs.row(i);
    int best = 0;
    for (long c = 1; c < k; ++c)
      if (row[c] > row[best]) best = static_cast<int>(c);
    if (best == labels[i]) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(mask.size());
}

std::vector<double> backward(const NormalizedGraph& g, const CsrMatrix& x,
                             const std::vector<int>& labels, const std::vector<int>& mask,
                             std::span<const double> theta, const Topology& t,
                             const ModelOutput& out, double sigma2, bool include_prior) {
  if (mask.empty()) throw std::invalid_argument("backward: empty mask");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("backward: sigma2 must be positive");
  const ParamLayout l = param_layout(t);
  const long h = t.hidden;
  const long k = t.out_classes;
  const double* w1 = theta.data() + l.w1;

  std::vector<double> grad(l.total, 0.0);
  double* gw0 = grad.data() + l.w0;
  double* gb0 = grad.data() + l.b0;
  double* gw1 = grad.data() + l.w1;
  double* gb1 = grad.data() + l.b1;

  // d log_lik / d logits: one-hot minus softmax on masked rows, zero elsewhere.
  Matrix dlogits(g.n, k);
  for (int i : mask) {
    const double* lp = out.log_probs.row(i);
    double* di = dlogits.row(i);
    for (long c = 0; c < k; ++c) di[c] = -std::exp(lp[c]);
    di[labels[i]] += 1.0;
  }

  for (int i : mask) {
    const double* di = dlogits.row(i);
    for (long c = 0; c < k; ++c) gb1[c] += di[c];
  }

  // logits = A_hat * (H1 W1) + b1, and A_hat is symmetric, so the adjoint of
  // the aggregation is another spmm.
  Matrix du = spmm(g, dlogits);

  Matrix dh1(g.n, h);
  for (long i = 0; i < g.n; ++i) {
    const double* hi = out.hidden.row(i);
    const double* dui = du.row(i);
    double* dhi = dh1.row(i);
    bool any = false;
    for (long c = 0; c < k; ++c)
      if (dui[c] != 0.0) {
        any = true;
        break;
      }
    if (!any) continue;
    for (long a = 0; a < h; ++a) {
      const double hv = hi[a];
      if (hv > 0.0) {
        const double* w1a = w1 + a * k;
        double acc = 0.0;
        for (long c = 0; c < k; ++c) acc += dui[c] * w1a[c];
        dhi[a] = acc;
        double* gw1a = gw1 + a * k;
        for (long c = 0; c < k; ++c) gw1a[c] += hv * dui[c];
      }
    }
  }

  for (long i = 0; i < g.n; ++i) {
    const double* dhi = dh1.row(i);
    for (long a = 0; a < h; ++a) gb0[a] += dhi[a];
  }

  Matrix dxw = spmm(g, dh1);
  for (long i = 0; i < x.rows; ++i) {
    const double* dxi = dxw.row(i);
    bool any = false;
    for (long a = 0; a < h; ++a)
      if (dxi[a] != 0.0) {
        any = true;
        break;
      }
    if (!any) continue;
    for (long p = x.row_start[i]; p < x.row_start[i + 1]; ++p) {
      const double v = x.values[p];
      double* gw0f = gw0 + static_cast<std::size_t>(x.col_index[p]) * h;
      for (long a = 0; a < h; ++a) gw0f[a] += v * dxi[a];
    }
  }

  if (include_prior)
    for (long i = 0; i < l.total; ++i) grad[i] -= theta[i] / sigma2;
  return grad;
}

std::vector<double> grad_log_posterior(const NormalizedGraph& g, const CsrMatrix& x,
                                       const std::vector<int>& labels, const std::vector<int>& mask,
                                       std::span<const double> theta, const Topology& t,
                                       double sigma2, bool include_prior) {
  const ModelOutput out = forward(g, x, theta, t);
  return backward(g, x, labels, mask, theta, t, out, sigma2, include_prior);
}

std::vector<double> glorot_init(const Topology& t, Rng& rng) {
  const ParamLayout l = param_layout(t);
  std::vector<double> theta(l.total, 0.0);
  const double a0 = std::sqrt(6.0 / static_cast<double>(t.in_features + t.hidden));
  for (long i = l.w0; i < l.b0; ++i) theta[i] = rng.uniform(-a0, a0);
  const double a1 = std::sqrt(6.0 / static_cast<double>(t.hidden + t.out_classes));
  for (long i = l.w1; i < l.b1; ++i) theta[i] = rng.uniform(-a1, a1);
  return theta;
}

}  // namespace bayesgcn
