#pragma once

// Deterministic generator for benchmark-shaped citation datasets: a planted
// partition graph plus class-signature bag-of-words features, sized to match
// the usual Cora / CiteSeer / PubMed statistics.

#include <cstdint>
#include <string>

#include "bayesgcn/graph_data.hpp"

namespace bayesgcn {

struct SyntheticSpec {
  std::string name;
  long nodes = 0;
  long edges = 0;
  int classes = 0;
  long features = 0;
  int train_per_class = 20;
  long test_nodes = 1000;

  // Fraction of edges forced to join same-class endpoints.
  double homophily = 0.84;
  // Nonzero features drawn per node (before deduplication).
  int words_per_node = 120;
  // Probability a drawn word comes from the node's signature block.
  double signal_frac = 0.60;
  // Fraction of nodes whose signature block belongs to a different class,
  // which caps attainable accuracy the way overlapping topics do.
  double confusion = 0.10;
  // Fraction of nodes relabeled away from their community after edges and
  // words are committed. These are irreducibly mislabeled, so the attainable
  // test accuracy tops out the way real citation data does.
  double label_noise = 0.05;
  // Every feature row sums to this value, mimicking length-normalized
  // bag-of-words rows whose per-word weight shrinks as the row widens.
  double feature_scale = 32.0;
  // Pairs of training nodes built as exact twins: identical feature rows,
  // both isolated from the graph, but different labels. A pair can never be
  // separated, so its likelihood term keeps a permanent optimum at a split
  // prediction. With enough pairs the training slots are filled entirely by
  // twins, every training row keeps live curvature in the posterior instead
  // of saturating, and the sampled weights stay genuinely uncertain the way
  // noisy real-world labels keep them. Test nodes are untouched, so accuracy
  // still measures community recovery.
  int conflict_pairs = 70;
};

// Known presets: "cora", "citeseer", "pubmed". Throws on unknown names.
SyntheticSpec benchmark_spec(const std::string& name);

Dataset generate_dataset(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace bayesgcn
