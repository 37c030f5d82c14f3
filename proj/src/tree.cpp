#include "pqscreen/tree.hpp"

#include <algorithm>
#include <numeric>

namespace pqscreen {

int DecisionTree::vote(const Matrix& x, Eigen::Index row) const {
  int n = 0;
  while (nodes[n].feature >= 0) {
    n = x(row, nodes[n].feature) <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return nodes[n].vote;
}

int DecisionTree::vote_with(const Matrix& x, Eigen::Index row, int feature, double value) const {
  int n = 0;
  while (nodes[n].feature >= 0) {
    const double v = nodes[n].feature == feature ? value : x(row, nodes[n].feature);
    n = v <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return nodes[n].vote;
}

int DecisionTree::vote(std::span<const double> x) const {
  int n = 0;
  while (nodes[n].feature >= 0) {
    n = x[static_cast<std::size_t>(nodes[n].feature)] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return nodes[n].vote;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature >= 0) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
    best = std::max(best, d[i]);
  }
  return best;
}

BinnedFeatures BinnedFeatures::build(const Matrix& x) {
  BinnedFeatures b;
  b.rows = static_cast<std::size_t>(x.rows());
  b.values.resize(static_cast<std::size_t>(x.cols()));
  b.codes.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    auto& vals = b.values[j];
    vals.assign(x.col(j).data(), x.col(j).data() + x.rows());
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    auto& codes = b.codes[j];
    codes.resize(b.rows);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      codes[i] = static_cast<std::uint32_t>(std::lower_bound(vals.begin(), vals.end(), x(i, j)) - vals.begin());
    }
  }
  return b;
}

namespace {

struct SplitChoice {
  int feature = -1;
  std::uint32_t left_code = 0;  // rows with code <= left_code go left
  double threshold = 0.0;
  double score = 0.0;  // sum over children of (w0^2 + w1^2) / W
};

class TreeGrower {
 public:
  TreeGrower(const BinnedFeatures& data, std::span<const int> y, std::span<const double> weights,
             std::span<const std::uint32_t> multiplicity, const TreeGrowOptions& options, Rng& rng)
      : data_(data), y_(y), w_(weights), mult_(multiplicity), options_(options), rng_(rng) {
    std::size_t max_bins = 0;
    for (const auto& v : data.values) max_bins = std::max(max_bins, v.size());
    hist_w0_.assign(max_bins, 0.0);
    hist_w1_.assign(max_bins, 0.0);
    hist_n_.assign(max_bins, 0);
    features_.resize(data.columns());
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree grow(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    DecisionTree tree;
    struct Pending {
      int node;
      std::size_t begin, end;
      int depth;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, rows_.size(), 0}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      double w0 = 0.0, w1 = 0.0;
      std::size_t count = 0;
      for (std::size_t k = job.begin; k < job.end; ++k) {
        const auto r = rows_[k];
        (y_[r] ? w1 : w0) += w_[r];
        count += mult_[r];
      }
      TreeNode& node = tree.nodes[job.node];
      const double total = w0 + w1;
      node.pd_fraction = total > 0.0 ? w1 / total : 0.0;
      node.vote = w1 >= w0 ? 1 : 0;
      const bool pure = w0 == 0.0 || w1 == 0.0;
      const bool depth_capped = options_.max_depth >= 0 && job.depth >= options_.max_depth;
      if (pure || depth_capped || count < 2 * options_.min_leaf) continue;

      const double parent_score = total > 0.0 ? (w0 * w0 + w1 * w1) / total : 0.0;
      const SplitChoice best = find_split(job.begin, job.end, parent_score);
      if (best.feature < 0) continue;

      const auto& codes = data_.codes[best.feature];
      const auto mid = std::partition(rows_.begin() + static_cast<long>(job.begin),
                                      rows_.begin() + static_cast<long>(job.end),
                                      [&](std::uint32_t r) { return codes[r] <= best.left_code; });
      const std::size_t split = static_cast<std::size_t>(mid - rows_.begin());
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[job.node];  // re-fetch after growth
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({left + 1, split, job.end, job.depth + 1});
      stack.push_back({left, job.begin, split, job.depth + 1});
    }
    return tree;
  }

 private:
  SplitChoice find_split(std::size_t begin, std::size_t end, double parent_score) {
    const std::size_t p = features_.size();
    const std::size_t mtry = options_.mtry == 0 ? p : std::min(options_.mtry, p);
    for (std::size_t i = 0; i < mtry; ++i) std::swap(features_[i], features_[i + rng_.below(p - i)]);
    SplitChoice best;
    best.score = parent_score * (1.0 + 1e-12) + 1e-300;
    const std::size_t m = end - begin;
    for (std::size_t i = 0; i < mtry; ++i) {
      const std::size_t f = features_[i];
      const std::size_t bins = data_.values[f].size();
      if (bins < 2) continue;
      if (bins <= 4 * m) scan_histogram(f, begin, end, best);
      else scan_sorted(f, begin, end, best);
    }
    if (best.feature < 0) return best;
    const auto& vals = data_.values[best.feature];
    const double lo = vals[best.left_code];
    // next occupied value to the right is found during the scan
    best.threshold = lo + 0.5 * (next_value_ - lo);
    if (!(best.threshold < next_value_)) best.threshold = lo;
    return best;
  }

  void consider(std::size_t f, std::uint32_t left_code, double next_value, double lw0, double lw1, std::size_t ln,
                double rw0, double rw1, std::size_t rn, SplitChoice& best) {
    if (ln < options_.min_leaf || rn < options_.min_leaf) return;
    const double lw = lw0 + lw1;
    const double rw = rw0 + rw1;
    if (lw <= 0.0 || rw <= 0.0) return;
    const double score = (lw0 * lw0 + lw1 * lw1) / lw + (rw0 * rw0 + rw1 * rw1) / rw;
    if (score > best.score) {
      best.score = score;
      best.feature = static_cast<int>(f);
      best.left_code = left_code;
      next_value_ = next_value;
    }
  }

  void scan_histogram(std::size_t f, std::size_t begin, std::size_t end, SplitChoice& best) {
    const auto& codes = data_.codes[f];
    const std::size_t bins = data_.values[f].size();
    double t0 = 0.0, t1 = 0.0;
    std::size_t tn = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto r = rows_[k];
      const auto c = codes[r];
      (y_[r] ? hist_w1_[c] : hist_w0_[c]) += w_[r];
      hist_n_[c] += mult_[r];
      (y_[r] ? t1 : t0) += w_[r];
      tn += mult_[r];
    }
    double l0 = 0.0, l1 = 0.0;
    std::size_t ln = 0;
    std::size_t last = SIZE_MAX;
    for (std::size_t c = 0; c < bins; ++c) {
      if (hist_n_[c] == 0) continue;
      if (last != SIZE_MAX) {
        consider(f, static_cast<std::uint32_t>(last), data_.values[f][c], l0, l1, ln, t0 - l0, t1 - l1, tn - ln,
                 best);
      }
      l0 += hist_w0_[c];
      l1 += hist_w1_[c];
      ln += hist_n_[c];
      last = c;
    }
    for (std::size_t k = begin; k < end; ++k) {
      const auto c = codes[rows_[k]];
      hist_w0_[c] = 0.0;
      hist_w1_[c] = 0.0;
      hist_n_[c] = 0;
    }
  }

  void scan_sorted(std::size_t f, std::size_t begin, std::size_t end, SplitChoice& best) {
    const auto& codes = data_.codes[f];
    sorted_.assign(rows_.begin() + static_cast<long>(begin), rows_.begin() + static_cast<long>(end));
    std::sort(sorted_.begin(), sorted_.end(), [&](std::uint32_t a, std::uint32_t b) { return codes[a] < codes[b]; });
    double t0 = 0.0, t1 = 0.0;
    std::size_t tn = 0;
    for (auto r : sorted_) {
      (y_[r] ? t1 : t0) += w_[r];
      tn += mult_[r];
    }
    double l0 = 0.0, l1 = 0.0;
    std::size_t ln = 0;
    for (std::size_t k = 0; k < sorted_.size(); ++k) {
      const auto r = sorted_[k];
      (y_[r] ? l1 : l0) += w_[r];
      ln += mult_[r];
      if (k + 1 < sorted_.size() && codes[sorted_[k + 1]] != codes[r]) {
        consider(f, codes[r], data_.values[f][codes[sorted_[k + 1]]], l0, l1, ln, t0 - l0, t1 - l1, tn - ln, best);
      }
    }
  }

  const BinnedFeatures& data_;
  std::span<const int> y_;
  std::span<const double> w_;
  std::span<const std::uint32_t> mult_;
  TreeGrowOptions options_;
  Rng& rng_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> sorted_;
  std::vector<double> hist_w0_, hist_w1_;
  std::vector<std::size_t> hist_n_;
  std::vector<std::size_t> features_;
  double next_value_ = 0.0;
};

}  // namespace

DecisionTree grow_tree(const BinnedFeatures& data, std::span<const int> y, std::vector<std::uint32_t> rows,
                       std::span<const double> weights, std::span<const std::uint32_t> multiplicity,
                       const TreeGrowOptions& options, Rng& rng) {
  if (rows.empty()) throw Error("invalid_argument", "cannot grow a tree on zero rows");
  TreeGrower grower(data, y, weights, multiplicity, options, rng);
  return grower.grow(std::move(rows));
}

}  // namespace pqscreen
