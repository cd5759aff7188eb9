#include "bayesgcn/synthetic.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "bayesgcn/rng.hpp"

namespace bayesgcn {
namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

}  // namespace

SyntheticSpec benchmark_spec(const std::string& name) {
  SyntheticSpec s;
  s.name = name;
  if (name == "cora") {
    s.nodes = 2708;
    s.edges = 5429;
    s.classes = 7;
    s.features = 1433;
  } else if (name == "citeseer") {
    s.nodes = 3327;
    s.edges = 4732;
    s.classes = 6;
    s.features = 3703;
  } else if (name == "pubmed") {
    s.nodes = 19717;
    s.edges = 44338;
    s.classes = 3;
    s.features = 500;
  } else {
    throw std::invalid_argument("unknown benchmark preset: " + name);
  }
  return s;
}

Dataset generate_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.nodes < 2 || spec.classes < 2 || spec.features < spec.classes)
    throw std::invalid_argument("synthetic spec is degenerate");
  const long max_edges = spec.nodes * (spec.nodes - 1) / 2;
  if (spec.edges < 0 || spec.edges > max_edges)
    throw std::invalid_argument("synthetic spec asks for more edges than node pairs");

  Rng rng(seed);
  Dataset ds;
  ds.num_nodes = spec.nodes;
  ds.num_features = spec.features;
  ds.num_classes = spec.classes;

  // Communities drive edges and vocabulary; labels mostly follow them.
  std::vector<int> community(spec.nodes);
  std::vector<std::vector<int>> members(spec.classes);
  for (long i = 0; i < spec.nodes; ++i) {
    const int c = static_cast<int>(rng.uniform_int(spec.classes));
    community[i] = c;
    members[c].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < spec.classes; ++c)
    if (members[c].empty())
      throw std::runtime_error("class " + std::to_string(c) + " has no members");

  std::vector<char> is_twin(spec.nodes, 0);

  // Planted-partition edges: homophilous pairs within a community, the rest anywhere.
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(spec.edges) * 2);
  auto fill_edges = [&](bool avoid_twins) {
    while (static_cast<long>(ds.edges.size()) < spec.edges) {
      long u, v;
      if (rng.uniform() < spec.homophily) {
        const auto& pool = members[community[rng.uniform_int(spec.nodes)]];
        u = pool[rng.uniform_int(pool.size())];
        v = pool[rng.uniform_int(pool.size())];
      } else {
        u = static_cast<long>(rng.uniform_int(spec.nodes));
        v = static_cast<long>(rng.uniform_int(spec.nodes));
      }
      if (u == v) continue;
      if (avoid_twins && (is_twin[u] || is_twin[v])) continue;
      const int lo = static_cast<int>(std::min(u, v));
      const int hi = static_cast<int>(std::max(u, v));
      const std::uint64_t key = static_cast<std::uint64_t>(lo) * spec.nodes + hi;
      if (seen.insert(key).second) ds.edges.emplace_back(lo, hi);
    }
  };
  fill_edges(false);

  // Conflict pairs: two isolated nodes with identical feature rows but
  // different labels, both pinned into the training split. Identical inputs
  // produce identical logits under every weight vector, so no amount of
  // fitting separates a pair; the training likelihood keeps a permanent floor
  // whose optimum has live curvature instead of a saturated plateau.
  const long pair_cap = spec.train_per_class;
  std::vector<int> label_override(spec.nodes, -1);
  std::vector<int> copy_from(spec.nodes, -1);
  std::vector<std::pair<int, int>> pairs;
  std::vector<long> forced(spec.classes, 0);
  const long requested = std::max<long>(0, spec.conflict_pairs);
  for (long attempt = 0; attempt < 400 * requested; ++attempt) {
    if (static_cast<long>(pairs.size()) >= requested) break;
    int cu = -1;
    for (int c = 0; c < spec.classes; ++c) {
      if (forced[c] >= pair_cap) continue;
      if (cu < 0 || forced[c] < forced[cu]) cu = c;
    }
    if (cu < 0) break;
    const auto& pool = members[cu];
    const int u = pool[rng.uniform_int(pool.size())];
    const int v = static_cast<int>(rng.uniform_int(spec.nodes));
    int eligible[64];
    int n_eligible = 0;
    for (int c = 0; c < spec.classes && c < 64; ++c) {
      if (c != cu && forced[c] < pair_cap) eligible[n_eligible++] = c;
    }
    if (n_eligible == 0) break;
    const int lv = eligible[rng.uniform_int(n_eligible)];
    if (u == v || is_twin[u] || is_twin[v]) continue;
    is_twin[u] = is_twin[v] = 1;
    label_override[u] = cu;
    label_override[v] = lv;
    copy_from[v] = u;
    pairs.emplace_back(u, v);
    ++forced[cu];
    ++forced[lv];
  }

  // Twins stay isolated so their rows depend on their own words alone; the
  // edges they lose are redrawn elsewhere to keep the edge count on target.
  if (!pairs.empty()) {
    std::vector<std::pair<int, int>> kept;
    kept.reserve(ds.edges.size());
    for (const auto& e : ds.edges)
      if (!is_twin[e.first] && !is_twin[e.second]) kept.push_back(e);
    ds.edges.swap(kept);
    fill_edges(true);
  }
  std::sort(ds.edges.begin(), ds.edges.end());

  // Binary bag-of-words: each class owns a block of signature words. A
  // confused node writes with another class's vocabulary, so its features
  // alone point the wrong way and only the neighborhood can correct them.
  const long block = spec.features / spec.classes;
  ds.features.rows = spec.nodes;
  ds.features.cols = spec.features;
  ds.features.row_start.assign(spec.nodes + 1, 0);
  std::set<int> words;
  std::vector<std::vector<int>> node_words(spec.nodes);
  for (long i = 0; i < spec.nodes; ++i) {
    if (copy_from[i] >= 0) continue;
    long sig = community[i];
    if (rng.uniform() < spec.confusion)
      sig = (sig + 1 + static_cast<long>(rng.uniform_int(spec.classes - 1))) % spec.classes;
    words.clear();
    for (int w = 0; w < spec.words_per_node; ++w) {
      long f;
      if (rng.uniform() < spec.signal_frac)
        f = block * sig + static_cast<long>(rng.uniform_int(block));
      else
        f = static_cast<long>(rng.uniform_int(spec.features));
      words.insert(static_cast<int>(f));
    }
    node_words[i].assign(words.begin(), words.end());
  }
  for (const auto& pr : pairs) node_words[pr.second] = node_words[pr.first];
  for (long i = 0; i < spec.nodes; ++i)
    ds.features.row_start[i + 1] =
        ds.features.row_start[i] + static_cast<long>(node_words[i].size());
  ds.features.col_index.reserve(ds.features.row_start[spec.nodes]);
  ds.features.values.reserve(ds.features.row_start[spec.nodes]);
  for (long i = 0; i < spec.nodes; ++i)
    for (int f : node_words[i]) {
      ds.features.col_index.push_back(f);
      ds.features.values.push_back(spec.feature_scale /
                                   static_cast<double>(node_words[i].size()));
    }

  // Labels follow the community except for the irreducibly mislabeled slice.
  // Twin labels were fixed above and are exempt from the noise.
  ds.labels.resize(spec.nodes);
  for (long i = 0; i < spec.nodes; ++i) {
    if (label_override[i] >= 0) {
      ds.labels[i] = label_override[i];
      continue;
    }
    int label = community[i];
    if (rng.uniform() < spec.label_noise)
      label = static_cast<int>((label + 1 + rng.uniform_int(spec.classes - 1)) % spec.classes);
    ds.labels[i] = label;
  }

  // Splits: twins first, then train_per_class per observed class, then
  // test_nodes from the remainder.
  std::vector<std::vector<int>> by_label(spec.classes);
  for (long i = 0; i < spec.nodes; ++i)
    if (!is_twin[i]) by_label[ds.labels[i]].push_back(static_cast<int>(i));
  for (int c = 0; c < spec.classes; ++c)
    if (static_cast<long>(by_label[c].size()) < (spec.train_per_class - forced[c]) + 2)
      throw std::runtime_error("class " + std::to_string(c) + " too small for the requested split");
  std::vector<char> in_train(spec.nodes, 0);
  for (const auto& pr : pairs) {
    ds.train_mask.push_back(pr.first);
    ds.train_mask.push_back(pr.second);
    in_train[pr.first] = in_train[pr.second] = 1;
  }
  for (int c = 0; c < spec.classes; ++c) {
    shuffle(by_label[c], rng);
    for (long k = 0; k < spec.train_per_class - forced[c]; ++k) {
      ds.train_mask.push_back(by_label[c][k]);
      in_train[by_label[c][k]] = 1;
    }
  }
  std::vector<int> rest;
  rest.reserve(spec.nodes);
  for (long i = 0; i < spec.nodes; ++i)
    if (!in_train[i]) rest.push_back(static_cast<int>(i));
  if (static_cast<long>(rest.size()) < spec.test_nodes)
    throw std::runtime_error("not enough nodes left for the test split");
  shuffle(rest, rng);
  ds.test_mask.assign(rest.begin(), rest.begin() + spec.test_nodes);
  std::sort(ds.train_mask.begin(), ds.train_mask.end());
  std::sort(ds.test_mask.begin(), ds.test_mask.end());

  validate_dataset(ds);
  return ds;
}

}  // namespace bayesgcn
