#pragma once

// Well-connected spider networks: m = 4*ell + 3 radii, ell concentric circles
// and a center vertex.
//
// Vertex indexing is zero-based and boundary-first:
//   boundary vertex on radius j          -> j                    (j = 0..m-1)
//   vertex on circle k, radius j         -> m + (k-1)*m + j      (k = 1..ell, outermost first)
//   center                               -> n - 1
// The one-based labels used in files and reports are these indices plus one.
//
// Edge order: all radial edges first (radius by radius, walking inward from
// the boundary), then circular edges (circle by circle, then radius). Every
// edge is stored with u < v.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace spider {

using ConductanceVector = Eigen::VectorXd;

enum class EdgeKind { radial, circular };

struct Edge {
  int u = 0;
  int v = 0;
  EdgeKind kind = EdgeKind::radial;
  int id = 0;
};

class SpiderTopology {
 public:
  int m() const { return m_; }
  int ell() const { return ell_; }
  int n() const { return n_; }
  int interior_count() const { return n_ - m_; }
  int center() const { return n_ - 1; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int radial_edge_count() const { return m_ * (ell_ + 1); }
  int circular_edge_count() const { return m_ * ell_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int id) const { return edges_[static_cast<std::size_t>(id)]; }

  // Edge ids incident to vertex x.
  std::span<const int> incident(int x) const { return incident_[static_cast<std::size_t>(x)]; }
  int degree(int x) const { return static_cast<int>(incident_[static_cast<std::size_t>(x)].size()); }
  bool is_boundary(int x) const { return x < m_; }

  // Index of the vertex on circle k (1..ell, outermost first) and radius j (0..m-1).
  int circle_vertex(int k, int j) const { return m_ + (k - 1) * m_ + j; }

  // Interior vertex adjacent to boundary vertex j.
  int boundary_neighbor(int j) const;

  friend SpiderTopology build_spider(int m);

 private:
  SpiderTopology() = default;

  int m_ = 0;
  int ell_ = 0;
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
};

bool valid_spider_m(int m);

// Throws Error(invalid_m) unless m >= 3 and m = 3 (mod 4).
SpiderTopology build_spider(int m);

// Assignment of every edge to one of s blocks. Blocks are zero-based here and
// one-based in serialized form.
class EdgePartition {
 public:
  // Throws Error(invalid_partition) if s is out of range, a label is out of
  // range, or a block is empty.
  EdgePartition(int s, std::vector<int> block_of);

  int s() const { return s_; }
  int edge_count() const { return static_cast<int>(block_of_.size()); }
  int block_of(int edge_id) const { return block_of_[static_cast<std::size_t>(edge_id)]; }
  const std::vector<int>& labels() const { return block_of_; }
  const std::vector<int>& block_sizes() const { return sizes_; }

  static EdgePartition single_block(int edge_count);
  static EdgePartition singletons(int edge_count);

  friend bool operator==(const EdgePartition&, const EdgePartition&) = default;

 private:
  int s_;
  std::vector<int> block_of_;
  std::vector<int> sizes_;
};

// Uniformly random surjective labeling of the edges onto s blocks.
EdgePartition random_partition(const SpiderTopology& topology, int s, std::uint64_t seed);

struct PiecewiseConductance {
  ConductanceVector conductance;
  std::vector<double> block_values;
};

// One value per block drawn uniformly from [lo, hi]; each edge takes its
// block's value. Throws Error(invalid_interval) unless 0 < lo <= hi.
PiecewiseConductance sample_pc_conductance(const EdgePartition& partition, double lo, double hi,
                                           std::uint64_t seed);

}  // namespace spider
