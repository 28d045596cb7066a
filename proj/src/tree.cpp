#include "taglasso/tree.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace taglasso {

const TreeNode* AggregationTree::find(int id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

int AggregationTree::root_id() const {
  for (const auto& n : nodes) {
    if (n.parent == -1) return n.id;
  }
  throw structure_error("tree has no root");
}

int AncestorMatrix::col_of(int node_id) const {
  auto it = std::lower_bound(node_order.begin(), node_order.end(), node_id);
  if (it == node_order.end() || *it != node_id) {
    throw structure_error("node id not present in ancestor matrix");
  }
  return static_cast<int>(it - node_order.begin());
}

Matrix Partition::membership() const {
  Matrix m = Matrix::Zero(p(), k);
  for (int v = 0; v < p(); ++v) m(v, assignment[v]) = 1.0;
  return m;
}

std::vector<int> Partition::block_sizes() const {
  std::vector<int> sizes(k, 0);
  for (int b : assignment) sizes[b]++;
  return sizes;
}

Partition Partition::singletons(int p) {
  Partition out;
  out.k = p;
  out.assignment.resize(p);
  for (int v = 0; v < p; ++v) out.assignment[v] = v;
  return out;
}

Partition Partition::from_block_sizes(const std::vector<int>& sizes) {
  Partition out;
  out.k = static_cast<int>(sizes.size());
  for (int b = 0; b < out.k; ++b) {
    if (sizes[b] <= 0) throw std::invalid_argument("block sizes must be positive");
    for (int i = 0; i < sizes[b]; ++i) out.assignment.push_back(b);
  }
  return out;
}

namespace {

std::unordered_map<int, const TreeNode*> index_nodes(const AggregationTree& tree) {
  std::unordered_map<int, const TreeNode*> by_id;
  for (const auto& n : tree.nodes) {
    if (!by_id.emplace(n.id, &n).second) {
      throw structure_error("duplicate node id " + std::to_string(n.id));
    }
  }
  return by_id;
}

}  // namespace

AncestorMatrix ancestor_matrix(const AggregationTree& tree) {
  const int p = tree.p();
  if (p < 1) throw structure_error("tree has no leaves");
  auto by_id = index_nodes(tree);

  int roots = 0;
  int root_id = -1;
  for (const auto& n : tree.nodes) {
    if (n.parent == -1) {
      roots++;
      root_id = n.id;
    } else if (by_id.find(n.parent) == by_id.end()) {
      throw structure_error("node " + std::to_string(n.id) + " references missing parent " +
                            std::to_string(n.parent));
    }
  }
  if (roots != 1) {
    throw structure_error("tree must have exactly one root, found " + std::to_string(roots));
  }

  AncestorMatrix out;
  out.node_order.reserve(tree.nodes.size());
  for (const auto& n : tree.nodes) out.node_order.push_back(n.id);
  std::sort(out.node_order.begin(), out.node_order.end());
  out.a = Matrix::Zero(p, static_cast<int>(out.node_order.size()));

  std::unordered_map<int, int> col_by_id;
  for (int c = 0; c < static_cast<int>(out.node_order.size()); ++c) {
    col_by_id[out.node_order[c]] = c;
  }
  out.root_col = col_by_id.at(root_id);

  const int max_steps = tree.size() + 1;
  for (int v = 0; v < p; ++v) {
    int cur = tree.leaf_ids[v];
    if (by_id.find(cur) == by_id.end()) {
      throw structure_error("leaf id " + std::to_string(cur) + " not present in node list");
    }
    int steps = 0;
    while (cur != -1) {
      if (++steps > max_steps) {
        throw structure_error("cycle detected while walking from leaf " + std::to_string(v));
      }
      out.a(v, col_by_id.at(cur)) = 1.0;
      cur = by_id.at(cur)->parent;
    }
  }
  return out;
}

Partition decode_partition(const Matrix& gamma, const AncestorMatrix& a, double zero_tol) {
  if (gamma.rows() != a.t() || gamma.cols() != a.p()) {
    throw std::invalid_argument("decode_partition: gamma/ancestor dimension mismatch");
  }
  const int p = a.p();
  std::vector<int> z_cols;
  for (int u = 0; u < a.t(); ++u) {
    if (u == a.root_col || gamma.row(u).norm() > zero_tol) z_cols.push_back(u);
  }

  // Variables sharing the same row of A restricted to Z share a block.
  Partition out;
  out.assignment.resize(p, -1);
  std::map<std::vector<char>, int> block_of_row;
  for (int v = 0; v < p; ++v) {
    std::vector<char> key(z_cols.size());
    for (size_t i = 0; i < z_cols.size(); ++i) key[i] = a.a(v, z_cols[i]) != 0.0 ? 1 : 0;
    auto it = block_of_row.find(key);
    if (it == block_of_row.end()) {
      it = block_of_row.emplace(std::move(key), static_cast<int>(block_of_row.size())).first;
    }
    out.assignment[v] = it->second;
  }
  out.k = static_cast<int>(block_of_row.size());
  return out;
}

AggregatedPrecision aggregate_precision(const Matrix& omega, const Vector& d,
                                        const Partition& partition, double d_floor,
                                        double block_tol) {
  const int p = static_cast<int>(omega.rows());
  if (d.size() != p || partition.p() != p) {
    throw std::invalid_argument("aggregate_precision: dimension mismatch");
  }
  const int k = partition.k;
  Matrix r = omega;
  r.diagonal() -= d;

  AggregatedPrecision out;
  out.c = Matrix::Zero(k, k);
  Matrix counts = Matrix::Zero(k, k);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      out.c(partition.assignment[i], partition.assignment[j]) += r(i, j);
      counts(partition.assignment[i], partition.assignment[j]) += 1.0;
    }
  }
  out.c = out.c.cwiseQuotient(counts);

  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double dev = std::abs(r(i, j) - out.c(partition.assignment[i], partition.assignment[j]));
      out.max_block_deviation = std::max(out.max_block_deviation, dev);
    }
  }
  if (out.max_block_deviation > block_tol) {
    std::ostringstream msg;
    msg << "aggregate_precision: omega is not G-block structured under the given partition "
        << "(max block deviation " << out.max_block_deviation << " > tolerance " << block_tol << ")";
    throw structure_error(msg.str());
  }

  // D_agg = (M' D^-1 M)^-1 is diagonal with entries 1 / sum_{j in G_k} 1/d_j.
  Vector inv_sums = Vector::Zero(k);
  for (int j = 0; j < p; ++j) {
    double dj = d(j);
    if (dj < d_floor) {
      dj = d_floor;
      out.floored_entries.push_back(j);
    }
    inv_sums(partition.assignment[j]) += 1.0 / dj;
  }
  out.omega_agg = out.c;
  for (int b = 0; b < k; ++b) out.omega_agg(b, b) += 1.0 / inv_sums(b);
  return out;
}

std::vector<std::string> validate_tree(const AggregationTree& tree,
                                       const std::vector<std::string>& var_names) {
  std::vector<std::string> violations;
  std::unordered_map<int, const TreeNode*> by_id;
  for (const auto& n : tree.nodes) {
    if (!by_id.emplace(n.id, &n).second) {
      violations.push_back("duplicate node id " + std::to_string(n.id));
    }
  }

  int roots = 0;
  for (const auto& n : tree.nodes) {
    if (n.parent == -1) {
      roots++;
    } else if (by_id.find(n.parent) == by_id.end()) {
      violations.push_back("node " + std::to_string(n.id) + " has missing parent " +
                           std::to_string(n.parent));
    }
  }
  if (roots != 1) {
    violations.push_back("expected exactly one root, found " + std::to_string(roots));
  }

  // Cycle check: walking up from any node must terminate.
  const int max_steps = tree.size() + 1;
  for (const auto& n : tree.nodes) {
    int cur = n.id;
    int steps = 0;
    bool cycled = false;
    while (cur != -1) {
      if (++steps > max_steps) {
        cycled = true;
        break;
      }
      auto it = by_id.find(cur);
      if (it == by_id.end()) break;
      cur = it->second->parent;
    }
    if (cycled) {
      violations.push_back("cycle reachable from node " + std::to_string(n.id));
      break;
    }
  }

  std::unordered_set<int> parents;
  for (const auto& n : tree.nodes) {
    if (n.parent != -1) parents.insert(n.parent);
  }
  std::unordered_set<int> leaf_set(tree.leaf_ids.begin(), tree.leaf_ids.end());
  if (leaf_set.size() != tree.leaf_ids.size()) {
    violations.push_back("leaf ids are not distinct");
  }
  for (int id : tree.leaf_ids) {
    if (by_id.find(id) == by_id.end()) {
      violations.push_back("leaf id " + std::to_string(id) + " not present in node list");
    } else if (parents.count(id)) {
      violations.push_back("leaf id " + std::to_string(id) + " is an internal node");
    }
  }
  for (const auto& n : tree.nodes) {
    if (!parents.count(n.id) && !leaf_set.count(n.id)) {
      violations.push_back("node " + std::to_string(n.id) +
                           " is neither an internal node nor a registered leaf");
    }
  }

  if (!var_names.empty()) {
    if (static_cast<int>(var_names.size()) != tree.p()) {
      violations.push_back("tree has " + std::to_string(tree.p()) + " leaves but data has " +
                           std::to_string(var_names.size()) + " columns");
    } else {
      for (int v = 0; v < tree.p(); ++v) {
        auto it = by_id.find(tree.leaf_ids[v]);
        if (it != by_id.end() && it->second->label != var_names[v]) {
          violations.push_back("leaf for variable " + std::to_string(v + 1) + " is labeled '" +
                               it->second->label + "' but the data column is '" + var_names[v] +
                               "'");
        }
      }
    }
  }
  return violations;
}

AggregationTree star_tree(int p, const std::vector<std::string>& names) {
  AggregationTree tree;
  const int root = p + 1;
  for (int v = 0; v < p; ++v) {
    std::string label = names.empty() ? ("V" + std::to_string(v + 1)) : names[v];
    tree.nodes.push_back({v + 1, label, root});
    tree.leaf_ids.push_back(v + 1);
  }
  tree.nodes.push_back({root, "root", -1});
  return tree;
}

}  // namespace taglasso
