#pragma once

// LO-feature datasets for the four channel classes and a CART decision tree
// (Gini impurity) to tell them apart.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {

struct FeatureVector {
  double e_t = 0.0;
  double e_sqrt_t = 0.0;

  static constexpr std::size_t kDims = 2;
  double operator[](std::size_t i) const { return i == 0 ? e_t : e_sqrt_t; }
};

inline FeatureVector extract_features(std::span<const double> samples) {
  detail::require(!samples.empty(), "extract_features: empty sample set");
  double st = 0.0, ss = 0.0;
  for (double t : samples) {
    st += t;
    ss += std::sqrt(t);
  }
  const double n = static_cast<double>(samples.size());
  return {st / n, ss / n};
}

inline FeatureVector extract_features(const TransmittanceSamples& samples) {
  return extract_features(std::span<const double>(samples.values));
}

/// Per-class attack configurations for one classification experiment.
struct AttackScenario {
  std::string name = "custom";
  double loss_db_per_km = 0.2;
  std::array<AttackConfig, kNumClasses> configs{};
  std::size_t samples_per_vector = 1000;
  std::size_t vectors_per_class = 800;
  std::size_t test_per_class = 160;

  void validate() const {
    detail::require(samples_per_vector > 0 && vectors_per_class > 0,
                    "scenario: sample counts must be positive");
    detail::require(test_per_class < vectors_per_class,
                    "scenario: test partition must leave training data");
    for (std::size_t k = 0; k < kNumClasses; ++k)
      detail::require(configs[k].kind == static_cast<AttackKind>(k),
                      "scenario: configs must be ordered Normal, CA, CADoS, DoS");
  }

  /// Classes built from explicit (g, p) pairs on a D-km link with Eve's
  /// patch of length d_eve.
  static AttackScenario build(std::string name, double total_km, double d_eve_km, double sigma,
                              double g_ca, double g_cados, double p_cados, double g_dos,
                              double p_dos, double loss = 0.2) {
    const double d_bob = total_km - d_eve_km;
    AttackScenario s;
    s.name = std::move(name);
    s.loss_db_per_km = loss;
    s.configs = {AttackConfig::normal(d_eve_km, d_bob, sigma),
                 AttackConfig::ca(g_ca, d_eve_km, d_bob, sigma),
                 AttackConfig::ca_dos(g_cados, p_cados, d_eve_km, d_bob, sigma),
                 AttackConfig::dos(g_dos, p_dos, d_eve_km, d_bob, sigma)};
    return s;
  }

  /// Confusion-matrix experiments: (a) Eve at 10 km, low RIN; (b) high RIN;
  /// (c) Eve at 1 km, low RIN; (d) high RIN.
  static AttackScenario figure3(char panel) {
    switch (panel) {
      case 'a': return build("fig3a", 40.0, 10.0, 0.01, 1.12, 1.12, 0.94, 0.9, 0.9);
      case 'b': return build("fig3b", 40.0, 10.0, 0.1, 1.12, 1.12, 0.94, 0.9, 0.9);
      case 'c': return build("fig3c", 40.0, 1.0, 0.01, 1.01, 1.01, 0.99, 0.9, 0.9);
      case 'd': return build("fig3d", 40.0, 1.0, 0.1, 1.01, 1.01, 0.99, 0.9, 0.9);
      default: throw invalid_input(std::string("unknown figure-3 panel '") + panel + "'");
    }
  }
};

struct LabeledDataset {
  std::vector<FeatureVector> features;
  std::vector<AttackKind> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  std::array<std::size_t, kNumClasses> class_counts() const {
    std::array<std::size_t, kNumClasses> c{};
    for (AttackKind k : labels) ++c[static_cast<std::size_t>(k)];
    return c;
  }

  void push_back(const FeatureVector& f, AttackKind k) {
    features.push_back(f);
    labels.push_back(k);
  }
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset test;
  std::uint64_t seed = 0;
};

namespace detail {

template <class T>
void shuffle_in_place(std::vector<T>& v, Engine& eng) {
  // Fisher-Yates with an explicit index draw so the permutation does not
  // depend on the standard library's std::shuffle implementation.
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(eng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

inline void shuffle_dataset(LabeledDataset& d, Engine& eng) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle_in_place(idx, eng);
  LabeledDataset out;
  out.features.reserve(d.size());
  out.labels.reserve(d.size());
  for (std::size_t i : idx) out.push_back(d.features[i], d.labels[i]);
  d = std::move(out);
}

}  // namespace detail

/// Feature vectors for every class, each from `samples_per_vector` LO draws,
/// split per class into train/test and shuffled. Each (class, vector) uses its
/// own RNG stream, so the result does not depend on `threads`.
inline DatasetSplit generate_dataset(const AttackScenario& scenario, std::uint64_t seed,
                                     unsigned threads = 1) {
  scenario.validate();
  std::array<std::vector<FeatureVector>, kNumClasses> per_class;
  const auto work = [&](std::size_t k) {
    auto& out = per_class[k];
    out.resize(scenario.vectors_per_class);
    for (std::size_t j = 0; j < scenario.vectors_per_class; ++j) {
      const std::uint64_t stream = k * scenario.vectors_per_class + j;
      out[j] = extract_features(sample_transmittance(scenario.configs[k], scenario.loss_db_per_km,
                                                     scenario.samples_per_vector, seed, stream));
    }
  };
  if (threads <= 1) {
    for (std::size_t k = 0; k < kNumClasses; ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < kNumClasses; ++k) pool.emplace_back(work, k);
  }

  DatasetSplit split;
  split.seed = seed;
  constexpr std::uint64_t kSplitStream = 1ULL << 40;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    Engine eng = make_engine(seed, kSplitStream + k);
    auto vecs = per_class[k];
    detail::shuffle_in_place(vecs, eng);
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      auto& dst = j < scenario.test_per_class ? split.test : split.train;
      dst.push_back(vecs[j], static_cast<AttackKind>(k));
    }
  }
  Engine eng = make_engine(seed, kSplitStream + kNumClasses);
  detail::shuffle_dataset(split.train, eng);
  detail::shuffle_dataset(split.test, eng);
  return split;
}

struct TreeParams {
  int max_depth = 8;
  std::size_t min_samples_leaf = 5;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::size_t, kNumClasses> counts{};

  bool is_leaf() const { return feature < 0; }

  // Ties go to the lowest class index.
  AttackKind majority() const {
    return static_cast<AttackKind>(std::max_element(counts.begin(), counts.end()) -
                                   counts.begin());
  }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, TreeParams params)
      : nodes_(std::move(nodes)), params_(params) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeParams& params() const { return params_; }
  bool empty() const { return nodes_.empty(); }

  /// Samples with feature <= threshold go left.
  AttackKind predict(const FeatureVector& fv) const {
    if (nodes_.empty()) throw invalid_input("predict: untrained model");
    int i = 0;
    while (!nodes_[i].is_leaf()) {
      const TreeNode& n = nodes_[i];
      i = fv[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].majority();
  }

  int depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

  /// Plain-text dump: versioned header, then one node per line
  /// `id feature threshold left right c0 c1 c2 c3`.
  void write(std::ostream& os) const {
    os << "# cvqkd-decision-tree v1\n";
    os << "max_depth " << params_.max_depth << "\n";
    os << "min_samples_leaf " << params_.min_samples_leaf << "\n";
    os << "nodes " << nodes_.size() << "\n";
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const TreeNode& n = nodes_[i];
      os << i << ' ' << n.feature << ' ' << n.threshold << ' ' << n.left << ' ' << n.right;
      for (std::size_t c : n.counts) os << ' ' << c;
      os << '\n';
    }
    os.precision(old);
  }

  std::string dump() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static DecisionTree read(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "# cvqkd-decision-tree v1")
      throw invalid_input("tree: missing or unsupported header");
    TreeParams params;
    std::size_t count = 0;
    std::string key;
    if (!(is >> key >> params.max_depth) || key != "max_depth")
      throw invalid_input("tree: expected max_depth");
    if (!(is >> key >> params.min_samples_leaf) || key != "min_samples_leaf")
      throw invalid_input("tree: expected min_samples_leaf");
    if (!(is >> key >> count) || key != "nodes") throw invalid_input("tree: expected nodes");
    std::vector<TreeNode> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t id = 0;
      TreeNode& n = nodes[i];
      if (!(is >> id >> n.feature >> n.threshold >> n.left >> n.right) || id != i)
        throw invalid_input("tree: malformed node line");
      for (auto& c : n.counts)
        if (!(is >> c)) throw invalid_input("tree: malformed class counts");
      const int sz = static_cast<int>(count);
      if (!n.is_leaf() && (n.feature > 1 || n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                           n.left >= sz || n.right >= sz))
        throw invalid_input("tree: invalid child index");
    }
    return DecisionTree(std::move(nodes), params);
  }

  static DecisionTree parse(const std::string& text) {
    std::istringstream is(text);
    return read(is);
  }

 private:
  int depth_from(int i) const {
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  std::vector<TreeNode> nodes_;
  TreeParams params_;
};

namespace detail {

inline double gini(const std::array<std::size_t, kNumClasses>& c, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t v : c) {
    const double p = static_cast<double>(v) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

class TreeBuilder {
 public:
  TreeBuilder(const LabeledDataset& data, TreeParams params) : data_(data), params_(params) {}

  std::vector<TreeNode> build() {
    std::vector<std::size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  int grow(std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    for (std::size_t i : idx) ++nodes_[id].counts[static_cast<std::size_t>(data_.labels[i])];
    const double parent = gini(nodes_[id].counts, idx.size());
    if (parent == 0.0 || depth >= params_.max_depth || idx.size() < 2 * params_.min_samples_leaf)
      return id;

    const Split best = best_split(idx, parent);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (data_.features[i][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right)
          .push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Exhaustive search over midpoints of consecutive distinct values. Ties keep
  // the first candidate found (lower feature, then lower threshold).
  Split best_split(std::vector<std::size_t> idx, double parent) const {
    Split best;
    best.impurity = parent - 1e-12;
    const std::size_t n = idx.size();
    for (std::size_t f = 0; f < FeatureVector::kDims; ++f) {
      std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        const double a = data_.features[x][f], b = data_.features[y][f];
        return a < b || (a == b && x < y);
      });
      std::array<std::size_t, kNumClasses> lc{}, rc{};
      for (std::size_t i : idx) ++rc[static_cast<std::size_t>(data_.labels[i])];
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const auto k = static_cast<std::size_t>(data_.labels[idx[pos]]);
        ++lc[k];
        --rc[k];
        const std::size_t nl = pos + 1, nr = n - nl;
        const double v0 = data_.features[idx[pos]][f];
        const double v1 = data_.features[idx[pos + 1]][f];
        if (!(v0 < v1) || nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const double imp = (static_cast<double>(nl) * gini(lc, nl) +
                            static_cast<double>(nr) * gini(rc, nr)) /
                           static_cast<double>(n);
        if (imp < best.impurity) {
          double thr = 0.5 * (v0 + v1);
          if (!(thr < v1)) thr = v0;
          best = {static_cast<int>(f), thr, imp};
        }
      }
    }
    return best;
  }

  const LabeledDataset& data_;
  TreeParams params_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

inline DecisionTree train_tree(const LabeledDataset& train, TreeParams params = {}) {
  detail::require(!train.empty(), "train_tree: empty training set");
  detail::require(train.features.size() == train.labels.size(), "train_tree: size mismatch");
  detail::require(params.max_depth >= 0 && params.min_samples_leaf >= 1,
                  "train_tree: invalid hyper-parameters");
  return DecisionTree(detail::TreeBuilder(train, params).build(), params);
}

inline AttackKind predict(const DecisionTree& model, const FeatureVector& fv) {
  return model.predict(fv);
}

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return t;
  }
  std::size_t correct() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) t += counts[i][i];
    return t;
  }
  double accuracy() const {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
  }
  double recall(AttackKind k) const {
    const auto i = static_cast<std::size_t>(k);
    const std::size_t row = std::accumulate(counts[i].begin(), counts[i].end(), std::size_t{0});
    return row == 0 ? 0.0 : static_cast<double>(counts[i][i]) / static_cast<double>(row);
  }
  double precision(AttackKind k) const {
    const auto j = static_cast<std::size_t>(k);
    std::size_t col = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) col += counts[i][j];
    return col == 0 ? 0.0 : static_cast<double>(counts[j][j]) / static_cast<double>(col);
  }
  /// Misclassifications between two classes in either direction.
  std::size_t confusion_between(AttackKind a, AttackKind b) const {
    const auto i = static_cast<std::size_t>(a), j = static_cast<std::size_t>(b);
    return counts[i][j] + counts[j][i];
  }
};

inline ConfusionMatrix evaluate(const DecisionTree& model, const LabeledDataset& test) {
  detail::require(!test.empty(), "evaluate: empty test set");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < test.size(); ++i)
    ++cm.counts[static_cast<std::size_t>(test.labels[i])]
               [static_cast<std::size_t>(model.predict(test.features[i]))];
  return cm;
}

/// One-hot label string, e.g. "0100" for CA.
inline std::string one_hot(AttackKind k) {
  std::string s(kNumClasses, '0');
  s[static_cast<std::size_t>(k)] = '1';
  return s;
}

/// CSV with columns `e_t,e_sqrt_t,label` (label one-hot encoded).
inline void write_dataset_csv(std::ostream& os, const LabeledDataset& d) {
  os << "e_t,e_sqrt_t,label\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < d.size(); ++i)
    os << d.features[i].e_t << ',' << d.features[i].e_sqrt_t << ',' << one_hot(d.labels[i]) << '\n';
  os.precision(old);
}

}  // namespace cvqkd
