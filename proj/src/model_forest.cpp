#include <algorithm>
#include <cmath>

#include "twinpipe/model.hpp"
#include "twinpipe/rng.hpp"

namespace twinpipe {

namespace detail {
struct DesignData {
  std::vector<std::size_t> rows;
  std::vector<const std::vector<double>*> feature_cols;
  const std::vector<double>* target = nullptr;
  std::size_t excluded = 0;
};
DesignData collect_complete_rows(const TimeTable& table, const ModelSpec& spec);
void fill_metadata(ModelArtifact& art, const TimeTable& table, const DesignData& d);
}  // namespace detail

namespace {

// Mean anchored at the first element; a constant set comes out exact.
double mean_of(const std::vector<double>& y, const std::vector<std::size_t>& idx) {
  double anchor = y[idx[0]];
  double s = 0.0;
  for (std::size_t i : idx) s += y[i] - anchor;
  return anchor + s / static_cast<double>(idx.size());
}

struct TreeBuilder {
  const std::vector<std::vector<double>>& x;  // feature-major training matrix
  const std::vector<double>& y;
  const ModelSpec& spec;
  int mtry;
  Rng rng;
  std::vector<TreeNode> nodes;

  TreeBuilder(const std::vector<std::vector<double>>& x_, const std::vector<double>& y_,
              const ModelSpec& spec_, int mtry_, std::uint64_t seed)
      : x(x_), y(y_), spec(spec_), mtry(mtry_), rng(seed) {}

  int make_leaf(const std::vector<std::size_t>& idx) {
    nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean_of(y, idx)});
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::vector<std::size_t>& idx, int depth) {
    const std::size_t n = idx.size();
    bool depth_stop = spec.forest.max_depth && depth >= *spec.forest.max_depth;
    const std::size_t min_leaf = static_cast<std::size_t>(spec.forest.min_samples_leaf);

    bool constant_y = true;
    for (std::size_t i : idx)
      if (y[i] != y[idx[0]]) {
        constant_y = false;
        break;
      }
    if (depth_stop || constant_y || n < 2 * min_leaf) return make_leaf(idx);

    // mtry features without replacement, order fixed by the tree's stream.
    std::vector<std::size_t> feats(x.size());
    for (std::size_t f = 0; f < feats.size(); ++f) feats[f] = f;
    for (int k = 0; k < mtry; ++k) {
      std::size_t j = static_cast<std::size_t>(k) +
                      static_cast<std::size_t>(rng.bounded(feats.size() - static_cast<std::size_t>(k)));
      std::swap(feats[static_cast<std::size_t>(k)], feats[j]);
    }

    double best_sse = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = idx;

    for (int k = 0; k < mtry; ++k) {
      const std::vector<double>& fx = x[feats[static_cast<std::size_t>(k)]];
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });

      // prefix sums of y and y^2 in sorted order
      double sl = 0.0, sl2 = 0.0;
      double st = 0.0, st2 = 0.0;
      for (std::size_t i : sorted) {
        st += y[i];
        st2 += y[i] * y[i];
      }
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        double yi = y[sorted[pos]];
        sl += yi;
        sl2 += yi * yi;
        if (fx[sorted[pos]] == fx[sorted[pos + 1]]) continue;  // no boundary here
        std::size_t nl = pos + 1;
        std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double sr = st - sl, sr2 = st2 - sl2;
        double sse_l = sl2 - sl * sl / static_cast<double>(nl);
        double sse_r = sr2 - sr * sr / static_cast<double>(nr);
        double sse = (sse_l < 0 ? 0 : sse_l) + (sse_r < 0 ? 0 : sse_r);
        if (best_feature < 0 || sse < best_sse) {
          best_sse = sse;
          best_feature = static_cast<int>(feats[static_cast<std::size_t>(k)]);
          best_threshold = fx[sorted[pos]] + (fx[sorted[pos + 1]] - fx[sorted[pos]]) / 2.0;
        }
      }
    }

    if (best_feature < 0) return make_leaf(idx);

    std::vector<std::size_t> left, right;
    left.reserve(n);
    right.reserve(n);
    const std::vector<double>& fx = x[static_cast<std::size_t>(best_feature)];
    for (std::size_t i : idx)
      (fx[i] <= best_threshold ? left : right).push_back(i);
    if (left.empty() || right.empty()) return make_leaf(idx);  // guards midpoint rounding

    nodes.push_back(TreeNode{best_feature, best_threshold, -1, -1, 0.0});
    int self = static_cast<int>(nodes.size() - 1);
    int l = build(left, depth + 1);
    int r = build(right, depth + 1);
    nodes[static_cast<std::size_t>(self)].left = l;
    nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace

int ModelSpec::effective_mtry() const {
  int p = static_cast<int>(features.size());
  if (forest.mtry) return std::min(std::max(1, *forest.mtry), p);
  return (p + 2) / 3;  // ceil(p/3)
}

ModelArtifact fit_forest(const TimeTable& train, const ModelSpec& spec) {
  if (spec.features.empty()) raise(Errc::invalid_argument, "model needs at least one feature");
  if (spec.forest.n_trees < 1) raise(Errc::invalid_argument, "n_trees must be >= 1");
  if (spec.forest.min_samples_leaf < 1)
    raise(Errc::invalid_argument, "min_samples_leaf must be >= 1");

  detail::DesignData d = detail::collect_complete_rows(train, spec);
  if (d.rows.empty()) raise(Errc::all_rows_incomplete, "no row has all features and the target");
  const std::size_t n = d.rows.size();
  if (n < static_cast<std::size_t>(2 * spec.forest.min_samples_leaf))
    raise(Errc::insufficient_rows,
          "need >= " + std::to_string(2 * spec.forest.min_samples_leaf) + " complete rows, have " +
              std::to_string(n));

  const std::size_t p = spec.features.size();
  std::vector<std::vector<double>> x(p, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x[j][i] = (*d.feature_cols[j])[d.rows[i]];
    y[i] = (*d.target)[d.rows[i]];
  }

  ModelArtifact art;
  art.spec = spec;
  art.trees.resize(static_cast<std::size_t>(spec.forest.n_trees));
  const int mtry = spec.effective_mtry();
  const int n_trees = spec.forest.n_trees;

  // Each tree owns an independent stream seeded seed XOR tree_index, so the
  // forest is bit-identical no matter how the loop is scheduled.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int t = 0; t < n_trees; ++t) {
    TreeBuilder builder(x, y, spec, mtry,
                        spec.forest.seed ^ static_cast<std::uint64_t>(t));
    std::vector<std::size_t> bootstrap(n);
    for (std::size_t i = 0; i < n; ++i)
      bootstrap[i] = static_cast<std::size_t>(builder.rng.bounded(n));
    builder.build(bootstrap, 0);
    art.trees[static_cast<std::size_t>(t)].nodes = std::move(builder.nodes);
  }

  detail::fill_metadata(art, train, d);
  return art;
}

double Tree::predict_row(const std::vector<const std::vector<double>*>& cols,
                         std::size_t row) const {
  // Root is the first node created for the tree.
  // (build() appends the root before its children, so index 0 is the root.)
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    double v = (*cols[static_cast<std::size_t>(nodes[at].feature)])[row];
    at = static_cast<std::size_t>(v <= nodes[at].threshold ? nodes[at].left : nodes[at].right);
  }
  return nodes[at].leaf_value;
}

}  // namespace twinpipe
