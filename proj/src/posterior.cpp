#include "bayesgcn/posterior.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace bayesgcn {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

long burn_cut(long budget, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw std::invalid_argument("burn_in_fraction must lie in [0, 1)");
  return std::llround(fraction * static_cast<double>(budget));
}

std::ofstream open_out(const std::filesystem::path& file, std::ios::openmode mode) {
  std::ofstream out(file, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  return out;
}

void finish_out(std::ofstream& out, const std::filesystem::path& file) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

}  // namespace

MetricSummary summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty value set");
  MetricSummary s;
  s.max = values[0];
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    if (v > s.max) s.max = v;
  }
  s.mean = sum / values.size();
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(sq / values.size());
  return s;
}

std::vector<double> pool_trace(const std::vector<ChainStore>& chains, TraceKind kind,
                               double burn_in_fraction) {
  std::vector<double> pooled;
  for (const auto& c : chains) {
    const std::vector<double>& trace = kind == TraceKind::log_lik    ? c.log_lik_trace
                                       : kind == TraceKind::train_acc ? c.train_acc_trace
                                                                       : c.test_acc_trace;
    const long cut = burn_cut(c.budget, burn_in_fraction);
    for (long i = cut; i < static_cast<long>(trace.size()); ++i) pooled.push_back(trace[i]);
  }
  if (pooled.empty()) throw std::invalid_argument("pool_trace: burn-in leaves no values");
  return pooled;
}

std::vector<double> pool_coordinate(const std::vector<ChainStore>& chains, long weight_id,
                                    double burn_in_fraction) {
  std::vector<double> pooled;
  for (const auto& c : chains) {
    if (weight_id < 0 || weight_id >= c.param_dim)
      throw std::invalid_argument("pool_coordinate: weight_id out of range");
    const long cut = burn_cut(c.budget, burn_in_fraction);
    for (long s = 0; s < c.sample_count; ++s)
      if (c.sample_steps[s] >= cut) pooled.push_back(c.sample_row(s)[weight_id]);
  }
  if (pooled.empty()) throw std::invalid_argument("pool_coordinate: burn-in leaves no samples");
  return pooled;
}

double gelman_rubin_scalar(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw std::invalid_argument("gelman_rubin: need at least two chains");
  const std::size_t n = chains[0].size();
  if (n < 2) throw std::invalid_argument("gelman_rubin: need at least two samples per chain");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("gelman_rubin: chains must share one length");

  std::vector<double> means(m);
  double grand = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (double x : chains[j]) sum += x;
    means[j] = sum / n;
    grand += means[j];
  }
  grand /= m;

  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double sq = 0.0;
    for (double x : chains[j]) sq += (x - means[j]) * (x - means[j]);
    w += sq / (n - 1);
  }
  w /= m;

  double b = 0.0;
  for (std::size_t j = 0; j < m; ++j) b += (means[j] - grand) * (means[j] - grand);
  b *= static_cast<double>(n) / (m - 1);

  if (w == 0.0) {
    if (b == 0.0) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
  const double var_hat = (static_cast<double>(n) - 1.0) / n * w + b / n;
  return std::sqrt(var_hat / w);
}

double gelman_rubin(const std::vector<ChainStore>& chains, long weight_id,
                    double burn_in_fraction) {
  std::vector<std::vector<double>> scalar_chains;
  scalar_chains.reserve(chains.size());
  for (const auto& c : chains) {
    if (weight_id < 0 || weight_id >= c.param_dim)
      throw std::invalid_argument("gelman_rubin: weight_id out of range");
    const long cut = burn_cut(c.budget, burn_in_fraction);
    std::vector<double> values;
    for (long s = 0; s < c.sample_count; ++s)
      if (c.sample_steps[s] >= cut) values.push_back(c.sample_row(s)[weight_id]);
    if (values.size() < 10)
      throw std::invalid_argument("gelman_rubin: need at least 10 post-burn-in samples per chain");
    scalar_chains.push_back(std::move(values));
  }
  return gelman_rubin_scalar(scalar_chains);
}

void export_trace(const std::vector<ChainStore>& chains, long weight_id,
                  const std::filesystem::path& file) {
  auto out = open_out(file, std::ios::out | std::ios::trunc);
  out << "step,value,replica\n";
  for (const auto& c : chains) {
    if (weight_id < 0 || weight_id >= c.param_dim)
      throw std::invalid_argument("export_trace: weight_id out of range");
    for (long s = 0; s < c.sample_count; ++s)
      out << c.sample_steps[s] << ',' << fmt_double(c.sample_row(s)[weight_id]) << ','
          << c.replica_id << '\n';
  }
  finish_out(out, file);
}

void export_histogram(const std::vector<double>& pooled, int bins,
                      const std::filesystem::path& file) {
  if (pooled.empty()) throw std::invalid_argument("export_histogram: empty sample set");
  if (bins < 1) throw std::invalid_argument("export_histogram: bins must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(pooled.begin(), pooled.end());
  const double lo = *lo_it, hi = *hi_it;

  auto out = open_out(file, std::ios::out | std::ios::trunc);
  out << "bin_center,count\n";
  if (lo == hi) {
    out << fmt_double(lo) << ',' << pooled.size() << '\n';
    finish_out(out, file);
    return;
  }
  const double width = (hi - lo) / bins;
  std::vector<long> counts(bins, 0);
  for (double x : pooled) {
    long i = static_cast<long>((x - lo) / width);
    if (i >= bins) i = bins - 1;
    if (i < 0) i = 0;
    ++counts[i];
  }
  for (int i = 0; i < bins; ++i)
    out << fmt_double(lo + (i + 0.5) * width) << ',' << counts[i] << '\n';
  finish_out(out, file);
}

namespace {

void write_samples_bin(const ChainStore& c, const std::filesystem::path& bin_file,
                       const std::filesystem::path& sidecar_file) {
  auto out = open_out(bin_file, std::ios::out | std::ios::trunc | std::ios::binary);
  std::vector<unsigned char> buf;
  buf.reserve(c.sample_data.size() * 8);
  for (double x : c.sample_data) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  finish_out(out, bin_file);

  nlohmann::ordered_json side;
  side["replica"] = c.replica_id;
  side["rows"] = c.sample_count;
  side["cols"] = c.param_dim;
  side["start_step"] = c.switch_index;
  side["stride"] = c.thin;
  side["dtype"] = "float64";
  side["byte_order"] = "little";
  auto js = open_out(sidecar_file, std::ios::out | std::ios::trunc);
  js << side.dump(2) << '\n';
  finish_out(js, sidecar_file);
}

}  // namespace

std::vector<std::filesystem::path> write_chain_outputs(const std::filesystem::path& out_dir,
                                                       const std::vector<ChainStore>& chains,
                                                       const std::vector<long>& weight_ids,
                                                       int hist_bins, double burn_in_fraction) {
  std::vector<std::filesystem::path> written;
  auto track = [&](std::filesystem::path p) {
    written.push_back(p);
    return written.back();
  };

  for (const auto& c : chains) {
    const std::string id = std::to_string(c.replica_id);
    {
      auto path = track(out_dir / ("accuracy_trace_r" + id + ".csv"));
      auto out = open_out(path, std::ios::out | std::ios::trunc);
      out << "step,train_acc,test_acc\n";
      for (std::size_t s = 0; s < c.train_acc_trace.size(); ++s)
        out << s << ',' << fmt_double(c.train_acc_trace[s]) << ','
            << fmt_double(c.test_acc_trace[s]) << '\n';
      finish_out(out, path);
    }
    {
      auto path = track(out_dir / ("loglik_trace_r" + id + ".csv"));
      auto out = open_out(path, std::ios::out | std::ios::trunc);
      out << "step,log_lik\n";
      for (std::size_t s = 0; s < c.log_lik_trace.size(); ++s)
        out << s << ',' << fmt_double(c.log_lik_trace[s]) << '\n';
      finish_out(out, path);
    }
    write_samples_bin(c, track(out_dir / ("samples_r" + id + ".bin")),
                      track(out_dir / ("samples_r" + id + ".json")));
  }

  for (long id : weight_ids) {
    export_trace(chains, id, track(out_dir / ("trace_w" + std::to_string(id) + ".csv")));
    export_histogram(pool_coordinate(chains, id, burn_in_fraction), hist_bins,
                     track(out_dir / ("hist_w" + std::to_string(id) + ".csv")));
  }
  return written;
}

}  // namespace bayesgcn
