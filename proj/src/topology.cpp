#include "spider/topology.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "spider/error.hpp"
#include "spider/rng.hpp"

namespace spider {

bool valid_spider_m(int m) { return m >= 3 && (m - 3) % 4 == 0; }

SpiderTopology build_spider(int m) {
  if (!valid_spider_m(m)) {
    throw Error(ErrorCode::invalid_m, "m = " + std::to_string(m) + " is not of the form 4*ell + 3");
  }
  SpiderTopology t;
  t.m_ = m;
  t.ell_ = (m - 3) / 4;
  t.n_ = (m * m + m + 4) / 4;
  const int ell = t.ell_;
  const int center = t.n_ - 1;

  auto add = [&](int a, int b, EdgeKind kind) {
    Edge e;
    e.u = std::min(a, b);
    e.v = std::max(a, b);
    e.kind = kind;
    e.id = static_cast<int>(t.edges_.size());
    t.edges_.push_back(e);
  };

  t.edges_.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (int j = 0; j < m; ++j) {
    int outer = j;
    for (int k = 1; k <= ell; ++k) {
      const int inner = t.circle_vertex(k, j);
      add(outer, inner, EdgeKind::radial);
      outer = inner;
    }
    add(outer, center, EdgeKind::radial);
  }
  for (int k = 1; k <= ell; ++k) {
    for (int j = 0; j < m; ++j) {
      add(t.circle_vertex(k, j), t.circle_vertex(k, (j + 1) % m), EdgeKind::circular);
    }
  }

  t.incident_.assign(static_cast<std::size_t>(t.n_), {});
  for (const Edge& e : t.edges_) {
    t.incident_[static_cast<std::size_t>(e.u)].push_back(e.id);
    t.incident_[static_cast<std::size_t>(e.v)].push_back(e.id);
  }
  return t;
}

int SpiderTopology::boundary_neighbor(int j) const {
  const Edge& e = edges_[static_cast<std::size_t>(incident_[static_cast<std::size_t>(j)].front())];
  return e.u == j ? e.v : e.u;
}

EdgePartition::EdgePartition(int s, std::vector<int> block_of) : s_(s), block_of_(std::move(block_of)) {
  const int count = static_cast<int>(block_of_.size());
  if (s_ < 1 || s_ > count) {
    throw Error(ErrorCode::invalid_partition,
                "block count " + std::to_string(s_) + " outside [1, " + std::to_string(count) + "]");
  }
  sizes_.assign(static_cast<std::size_t>(s_), 0);
  for (int b : block_of_) {
    if (b < 0 || b >= s_) throw Error(ErrorCode::invalid_partition, "block label out of range");
    ++sizes_[static_cast<std::size_t>(b)];
  }
  for (int i = 0; i < s_; ++i) {
    if (sizes_[static_cast<std::size_t>(i)] == 0) {
      throw Error(ErrorCode::invalid_partition, "block " + std::to_string(i + 1) + " is empty");
    }
  }
}

EdgePartition EdgePartition::single_block(int edge_count) {
  return EdgePartition(1, std::vector<int>(static_cast<std::size_t>(edge_count), 0));
}

EdgePartition EdgePartition::singletons(int edge_count) {
  std::vector<int> labels(static_cast<std::size_t>(edge_count));
  for (int i = 0; i < edge_count; ++i) labels[static_cast<std::size_t>(i)] = i;
  return EdgePartition(edge_count, std::move(labels));
}

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

// Sequential exact sampler for uniform surjections. With r edges left and k
// blocks still empty, the number of surjective completions obeys
//   g(r, k) = (s - k) g(r-1, k) + k g(r-1, k-1),  g(0, k) = [k == 0],
// so choosing "an already used block" with probability (s-k) g(r-1,k) / g(r,k)
// gives every surjective labeling the same probability.
EdgePartition random_partition(const SpiderTopology& topology, int s, std::uint64_t seed) {
  const int count = topology.edge_count();
  if (s < 1 || s > count) {
    throw Error(ErrorCode::invalid_partition,
                "block count " + std::to_string(s) + " outside [1, " + std::to_string(count) + "]");
  }
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const auto su = static_cast<std::size_t>(s);
  // log_g[r][k]
  std::vector<std::vector<double>> log_g(static_cast<std::size_t>(count) + 1, std::vector<double>(su + 1, neg_inf));
  log_g[0][0] = 0.0;
  for (std::size_t r = 1; r <= static_cast<std::size_t>(count); ++r) {
    for (std::size_t k = 0; k <= su; ++k) {
      double v = neg_inf;
      if (k < su) v = std::log(static_cast<double>(su - k)) + log_g[r - 1][k];
      if (k > 0) v = log_add(v, std::log(static_cast<double>(k)) + log_g[r - 1][k - 1]);
      log_g[r][k] = v;
    }
  }

  Rng rng(seed);
  std::vector<int> labels(static_cast<std::size_t>(count));
  // First `used` entries of `order` are used blocks, the rest are still empty.
  std::vector<int> order(su);
  for (int i = 0; i < s; ++i) order[static_cast<std::size_t>(i)] = i;
  std::size_t used = 0;
  for (int e = 0; e < count; ++e) {
    const auto r = static_cast<std::size_t>(count - e);
    const std::size_t k = su - used;
    double p_used = 0.0;
    if (used > 0) p_used = std::exp(std::log(static_cast<double>(used)) + log_g[r - 1][k] - log_g[r][k]);
    if (used > 0 && rng.uniform01() < p_used) {
      labels[static_cast<std::size_t>(e)] = order[rng.below(used)];
    } else {
      const std::size_t pick = used + rng.below(k);
      std::swap(order[used], order[pick]);
      labels[static_cast<std::size_t>(e)] = order[used];
      ++used;
    }
  }
  return EdgePartition(s, std::move(labels));
}

PiecewiseConductance sample_pc_conductance(const EdgePartition& partition, double lo, double hi,
                                           std::uint64_t seed) {
  if (!(lo > 0.0) || !(lo <= hi) || !std::isfinite(hi)) {
    throw Error(ErrorCode::invalid_interval, "need 0 < lo <= hi");
  }
  Rng rng(seed);
  PiecewiseConductance out;
  out.block_values.resize(static_cast<std::size_t>(partition.s()));
  for (double& v : out.block_values) v = rng.uniform(lo, hi);
  out.conductance.resize(partition.edge_count());
  for (int e = 0; e < partition.edge_count(); ++e) {
    out.conductance[e] = out.block_values[static_cast<std::size_t>(partition.block_of(e))];
  }
  return out;
}

}  // namespace spider
