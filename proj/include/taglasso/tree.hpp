#ifndef TAGLASSO_TREE_HPP
#define TAGLASSO_TREE_HPP

#include <string>
#include <vector>

#include "taglasso/types.hpp"

namespace taglasso {

struct TreeNode {
  int id = 0;
  std::string label;
  int parent = -1;  // -1 marks the root
};

// Side-information tree whose leaves are the measured variables. leaf_ids[v]
// is the node id of the leaf representing variable v (0-based).
struct AggregationTree {
  std::vector<TreeNode> nodes;
  std::vector<int> leaf_ids;

  int p() const { return static_cast<int>(leaf_ids.size()); }
  int size() const { return static_cast<int>(nodes.size()); }
  const TreeNode* find(int id) const;
  int root_id() const;
};

// Binary leaf/ancestor incidence matrix A (p x |T|). Columns are ordered by
// ascending node id; A(j,k) = 1 iff node k lies on the root-to-leaf-j path
// (leaf included).
struct AncestorMatrix {
  Matrix a;
  std::vector<int> node_order;  // column -> node id
  int root_col = -1;

  int p() const { return static_cast<int>(a.rows()); }
  int t() const { return static_cast<int>(a.cols()); }
  int col_of(int node_id) const;
};

// Partition of {0..p-1} into k blocks; assignment[v] is the 0-based block id.
struct Partition {
  int k = 0;
  std::vector<int> assignment;

  int p() const { return static_cast<int>(assignment.size()); }
  Matrix membership() const;  // p x k binary matrix
  std::vector<int> block_sizes() const;
  bool all_singletons() const { return k == p(); }
  static Partition singletons(int p);
  static Partition from_block_sizes(const std::vector<int>& sizes);
};

// Result of mapping a G-block precision matrix onto the aggregated scale:
// omega_agg = c + (M' D^-1 M)^-1 per the block decomposition.
struct AggregatedPrecision {
  Matrix c;           // K x K core matrix
  Matrix omega_agg;   // K x K aggregated precision
  double max_block_deviation = 0.0;
  std::vector<int> floored_entries;  // indices j where d_j was raised to d_floor
};

AncestorMatrix ancestor_matrix(const AggregationTree& tree);

// Z = {rows of gamma with norm > zero_tol} plus the root; variables sharing
// identical rows of A restricted to Z form a block.
Partition decode_partition(const Matrix& gamma, const AncestorMatrix& a,
                           double zero_tol = 0.0);

// Extracts the K x K core C from omega - diag(d), which must be constant on
// every block pair within block_tol, and forms omega_agg = C + (M'D^-1 M)^-1
// with each d_j floored at d_floor.
AggregatedPrecision aggregate_precision(const Matrix& omega, const Vector& d,
                                        const Partition& partition,
                                        double d_floor = 1e-8,
                                        double block_tol = 1e-6);

// Diagnostic structural check; returns human-readable violations (empty means
// the tree is valid). When var_names is non-empty the leaf labels must be in
// bijection with it.
std::vector<std::string> validate_tree(const AggregationTree& tree,
                                       const std::vector<std::string>& var_names = {});

// Root + p leaves directly underneath; leaf labels taken from names (or
// V1..Vp when empty). Used by the glasso reduction.
AggregationTree star_tree(int p, const std::vector<std::string>& names = {});

}  // namespace taglasso

#endif
