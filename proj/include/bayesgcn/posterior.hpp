#pragma once

// Post-processing over replica chains: pooling post-burn-in values, accuracy
// summaries, the Gelman-Rubin potential scale reduction factor, and the
// on-disk trace/histogram/sample exports.

#include <filesystem>
#include <string>
#include <vector>

#include "bayesgcn/tempering.hpp"

namespace bayesgcn {

struct MetricSummary {
  double mean = 0.0;
  double max = 0.0;
  double std_dev = 0.0;  // population standard deviation
};

// Mean/max/population-std of a pooled value set. Throws on empty input.
MetricSummary summarize(const std::vector<double>& values);

enum class TraceKind { log_lik, train_acc, test_acc };

// Concatenates, across chains, the tail of the chosen full-length trace
// starting at step llround(burn_in_fraction * budget). Throws if the fraction
// leaves nothing.
std::vector<double> pool_trace(const std::vector<ChainStore>& chains, TraceKind kind,
                               double burn_in_fraction);

// Concatenates, across chains, coordinate weight_id of every retained
// parameter vector whose step index is >= llround(burn_in_fraction * budget).
// Throws on weight_id outside [0, param_dim) or if nothing survives the cut.
std::vector<double> pool_coordinate(const std::vector<ChainStore>& chains, long weight_id,
                                    double burn_in_fraction);

// Classic potential scale reduction factor over equal-length scalar chains:
// rhat = sqrt(((n-1)/n * W + B/n) / W). All chains constant and identical
// gives exactly 1; zero within-chain variance with between-chain spread gives
// +infinity. Requires >= 2 chains of equal length >= 2.
double gelman_rubin_scalar(const std::vector<std::vector<double>>& chains);

// gelman_rubin_scalar applied to coordinate weight_id of each chain's
// retained samples past the burn-in cut. Requires >= 10 samples per chain.
double gelman_rubin(const std::vector<ChainStore>& chains, long weight_id,
                    double burn_in_fraction);

// CSV "step,value,replica": every retained sample of the coordinate, chains
// in replica order, steps ascending within a chain.
void export_trace(const std::vector<ChainStore>& chains, long weight_id,
                  const std::filesystem::path& file);

// CSV "bin_center,count" over `bins` equal-width bins spanning [min, max];
// constant input collapses to a single bin holding every sample.
void export_histogram(const std::vector<double>& pooled, int bins,
                      const std::filesystem::path& file);

// Writes per-replica artifacts under out_dir and returns the paths written:
//   accuracy_trace_r<id>.csv   step,train_acc,test_acc (full budget)
//   loglik_trace_r<id>.csv     step,log_lik (full budget)
//   samples_r<id>.bin          retained parameter vectors, little-endian
//                              64-bit reals, row-major sample_count x dim
//   samples_r<id>.json         sidecar with the binary layout
// plus trace_w<id>.csv and hist_w<id>.csv for each requested weight id.
std::vector<std::filesystem::path> write_chain_outputs(const std::filesystem::path& out_dir,
                                                       const std::vector<ChainStore>& chains,
                                                       const std::vector<long>& weight_ids,
                                                       int hist_bins, double burn_in_fraction);

}  // namespace bayesgcn
