#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "taglasso/model.hpp"
#include "taglasso/tree.hpp"

using namespace taglasso;

namespace {

// The five-leaf example tree: leaves 1..5, internal nodes u13 (over leaves
// 1-3) and u45 (over leaves 4-5), root above both.
AggregationTree five_leaf_tree() {
  AggregationTree t;
  // ids: leaves 1..5, u13 = 6, u45 = 7, root = 8
  for (int v = 1; v <= 3; ++v) t.nodes.push_back({v, "V" + std::to_string(v), 6});
  for (int v = 4; v <= 5; ++v) t.nodes.push_back({v, "V" + std::to_string(v), 7});
  t.nodes.push_back({6, "u13", 8});
  t.nodes.push_back({7, "u45", 8});
  t.nodes.push_back({8, "root", -1});
  for (int v = 1; v <= 5; ++v) t.leaf_ids.push_back(v);
  return t;
}

// Random binary tree over n leaves by repeatedly merging two random roots.
AggregationTree random_binary_tree(int n_leaves, std::mt19937_64& rng) {
  AggregationTree t;
  std::vector<int> roots;
  for (int v = 1; v <= n_leaves; ++v) {
    t.nodes.push_back({v, "V" + std::to_string(v), -1});
    t.leaf_ids.push_back(v);
    roots.push_back(v);
  }
  int next_id = n_leaves + 1;
  while (roots.size() > 1) {
    std::uniform_int_distribution<size_t> pick(0, roots.size() - 1);
    size_t a = pick(rng);
    size_t b = pick(rng);
    while (b == a) b = pick(rng);
    const int merged = next_id++;
    t.nodes.push_back({merged, "n" + std::to_string(merged), -1});
    for (auto& node : t.nodes) {
      if (node.id == roots[a] || node.id == roots[b]) node.parent = merged;
    }
    std::vector<int> next_roots;
    for (size_t i = 0; i < roots.size(); ++i) {
      if (i != a && i != b) next_roots.push_back(roots[i]);
    }
    next_roots.push_back(merged);
    roots = next_roots;
  }
  return t;
}

// Root-to-leaf node ids by explicit parent walking.
std::vector<int> path_to_root(const AggregationTree& t, int leaf_id) {
  std::vector<int> path;
  int cur = leaf_id;
  while (cur != -1) {
    path.push_back(cur);
    cur = t.find(cur)->parent;
  }
  return path;
}

}  // namespace

TEST_CASE("ancestor matrix of the five-leaf example tree") {
  const AggregationTree t = five_leaf_tree();
  const AncestorMatrix am = ancestor_matrix(t);
  REQUIRE(am.p() == 5);
  REQUIRE(am.t() == 8);
  CHECK(am.node_order[am.root_col] == 8);

  // Leaf 1's row has ones exactly at {leaf 1, u13, root}.
  for (int c = 0; c < am.t(); ++c) {
    const int id = am.node_order[c];
    const bool expected = id == 1 || id == 6 || id == 8;
    CHECK(am.a(0, c) == (expected ? 1.0 : 0.0));
  }
  // Root column is all ones, leaf columns are standard basis vectors.
  CHECK(am.a.col(am.root_col).sum() == doctest::Approx(5.0));
  CHECK(am.a.col(am.col_of(4)).sum() == doctest::Approx(1.0));
  CHECK(am.a(3, am.col_of(4)) == 1.0);
}

TEST_CASE("star tree gives [I | 1]") {
  const AggregationTree star = star_tree(4);
  const AncestorMatrix am = ancestor_matrix(star);
  REQUIRE(am.t() == 5);
  CHECK(am.a.leftCols(4).isApprox(Matrix::Identity(4, 4)));
  CHECK(am.a.col(4).minCoeff() == 1.0);
  CHECK(am.root_col == 4);
}

TEST_CASE("row sums equal path depth + 1 on random binary trees") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const AggregationTree t = random_binary_tree(8, rng);
    const AncestorMatrix am = ancestor_matrix(t);
    for (int v = 0; v < 8; ++v) {
      const auto path = path_to_root(t, t.leaf_ids[v]);
      CHECK(am.a.row(v).sum() == doctest::Approx(static_cast<double>(path.size())));
      for (int id : path) CHECK(am.a(v, am.col_of(id)) == 1.0);
    }
  }
}

TEST_CASE("gamma path-sum reconstruction on random trees") {
  // Row j of A * Gamma must equal the sum of gamma rows over the
  // root-to-leaf-j path, exactly.
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal(0.0, 1.0);
  const AggregationTree t = random_binary_tree(6, rng);
  const AncestorMatrix am = ancestor_matrix(t);
  Matrix gamma(am.t(), 6);
  for (int r = 0; r < gamma.rows(); ++r) {
    for (int c = 0; c < 6; ++c) gamma(r, c) = normal(rng);
  }
  const Matrix reconstruction = am.a * gamma;
  for (int v = 0; v < 6; ++v) {
    Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(6);
    for (int id : path_to_root(t, t.leaf_ids[v])) expected += gamma.row(am.col_of(id));
    CHECK((reconstruction.row(v) - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("ancestor matrix rejects broken trees") {
  AggregationTree two_roots = five_leaf_tree();
  two_roots.nodes[5].parent = -1;  // u13 becomes a second root
  CHECK_THROWS_AS(ancestor_matrix(two_roots), structure_error);

  AggregationTree cycle = five_leaf_tree();
  cycle.nodes[7].parent = 6;  // root points into u13 which points to root
  cycle.nodes[5].parent = 8;
  CHECK_THROWS_AS(ancestor_matrix(cycle), structure_error);
}

TEST_CASE("partition decoding on the five-leaf example") {
  const AggregationTree t = five_leaf_tree();
  const AncestorMatrix am = ancestor_matrix(t);

  // Zero out all gamma rows except u13 and the root: two blocks {1,2,3},{4,5}.
  Matrix gamma = Matrix::Zero(am.t(), 5);
  gamma.row(am.col_of(6)).setConstant(1.0);
  gamma.row(am.root_col).setConstant(0.5);
  const Partition part = decode_partition(gamma, am, 0.0);
  CHECK(part.k == 2);
  CHECK(part.assignment[0] == part.assignment[1]);
  CHECK(part.assignment[1] == part.assignment[2]);
  CHECK(part.assignment[3] == part.assignment[4]);
  CHECK(part.assignment[0] != part.assignment[3]);

  // All rows nonzero: singletons.
  Matrix all = Matrix::Constant(am.t(), 5, 0.3);
  CHECK(decode_partition(all, am, 0.0).k == 5);

  // Only the root: one block.
  Matrix none = Matrix::Zero(am.t(), 5);
  CHECK(decode_partition(none, am, 0.0).k == 1);
}

TEST_CASE("partition decoding ignores positive rescaling of nonzero rows") {
  std::mt19937_64 rng(5);
  const AggregationTree t = random_binary_tree(7, rng);
  const AncestorMatrix am = ancestor_matrix(t);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix gamma = Matrix::Zero(am.t(), 7);
  for (int r = 0; r < gamma.rows(); ++r) {
    if (r % 2 == 0) {
      for (int c = 0; c < 7; ++c) gamma(r, c) = normal(rng);
    }
  }
  const Partition base = decode_partition(gamma, am, 0.0);
  Matrix scaled = gamma;
  for (int r = 0; r < gamma.rows(); ++r) scaled.row(r) *= (r % 3 + 1) * 10.0;
  const Partition rescaled = decode_partition(scaled, am, 0.0);
  CHECK(base.k == rescaled.k);
  CHECK(base.assignment == rescaled.assignment);
}

TEST_CASE("aggregate_precision on the two-singletons-plus-block toy") {
  const int p = 50;
  Matrix omega = Matrix::Zero(p, p);
  omega(0, 0) = 1.0;
  omega(1, 1) = 1.0;
  for (int j = 2; j < p; ++j) {
    omega(0, j) = -1.0;
    omega(j, 0) = -1.0;
    omega(1, j) = -1.0;
    omega(j, 1) = -1.0;
  }
  for (int i = 2; i < p; ++i) {
    for (int j = 2; j < p; ++j) omega(i, j) = (i == j) ? 3.0 : 2.0;
  }

  Partition part;
  part.k = 3;
  part.assignment.assign(p, 2);
  part.assignment[0] = 0;
  part.assignment[1] = 1;

  const Vector d = Vector::Ones(p);
  const AggregatedPrecision agg = aggregate_precision(omega, d, part);

  Matrix expected_c(3, 3);
  expected_c << 0, 0, -1, 0, 0, -1, -1, -1, 2;
  CHECK((agg.c - expected_c).cwiseAbs().maxCoeff() == 0.0);

  Matrix expected(3, 3);
  expected << 1, 0, -1, 0, 1, -1, -1, -1, 2.0 + 1.0 / 48.0;
  CHECK((agg.omega_agg - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(agg.floored_entries.empty());
}

TEST_CASE("aggregate_precision with singleton partition returns omega") {
  std::mt19937_64 rng(17);
  const Matrix omega = oracles::random_spd(6, rng);
  Vector d(6);
  for (int j = 0; j < 6; ++j) d(j) = 0.1 + 0.1 * j;
  const AggregatedPrecision agg = aggregate_precision(omega, d, Partition::singletons(6));
  CHECK((agg.omega_agg - omega).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("aggregate_precision round-trips a constructed G-block matrix") {
  std::mt19937_64 rng(71);
  const Partition part = Partition::from_block_sizes({3, 4, 2});
  const Matrix m = part.membership();
  Matrix c = oracles::random_symmetric(3, rng);
  Vector d(9);
  for (int j = 0; j < 9; ++j) d(j) = 0.5 + 0.1 * j;
  const Matrix omega = m * c * m.transpose() + Matrix(d.asDiagonal());

  const AggregatedPrecision agg = aggregate_precision(omega, d, part);
  CHECK((agg.c - c).cwiseAbs().maxCoeff() < 1e-10);

  // Independent route: omega_agg must equal inv(M' inv(omega) M) when omega
  // is positive definite.
  Matrix shifted_c = c;
  shifted_c.diagonal().array() += 3.0;
  const Matrix omega_pd = m * shifted_c * m.transpose() + Matrix(d.asDiagonal());
  const AggregatedPrecision agg_pd = aggregate_precision(omega_pd, d, part);
  const Matrix sigma = omega_pd.llt().solve(Matrix::Identity(9, 9));
  const Matrix direct = (m.transpose() * sigma * m).llt().solve(Matrix::Identity(3, 3));
  CHECK((agg_pd.omega_agg - direct).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("aggregate_precision reports non-constant blocks") {
  Matrix omega = Matrix::Identity(4, 4);
  omega(0, 1) = 0.5;
  omega(1, 0) = 0.5;
  omega(0, 2) = 0.51;
  omega(2, 0) = 0.51;
  omega(1, 2) = 0.5;
  omega(2, 1) = 0.5;
  const Partition part = Partition::from_block_sizes({3, 1});
  const Vector d = Vector::Constant(4, 0.5);
  CHECK_THROWS_AS(aggregate_precision(omega, d, part, 1e-8, 1e-6), structure_error);
}

TEST_CASE("aggregate_precision floors zero diagonal entries") {
  const Partition part = Partition::from_block_sizes({2, 2});
  const Matrix m = part.membership();
  Matrix c(2, 2);
  c << 1.0, 0.2, 0.2, 0.8;
  Vector d(4);
  d << 0.5, 0.0, 0.5, 0.5;  // one boundary entry
  const Matrix omega = m * c * m.transpose() + Matrix(d.asDiagonal());
  const AggregatedPrecision agg = aggregate_precision(omega, d, part, 1e-8);
  REQUIRE(agg.floored_entries.size() == 1);
  CHECK(agg.floored_entries[0] == 1);
  CHECK(std::isfinite(agg.omega_agg(0, 0)));
}

TEST_CASE("Monte-Carlo check of the aggregated precision identity") {
  // X ~ N(0, omega^-1) with omega = M C M' + D implies the aggregated vector
  // M'X has precision C + (M' D^-1 M)^-1. Compare the empirical precision of
  // 10^6 draws entrywise within 3 standard errors.
  std::mt19937_64 rng(2024);
  const Partition part = Partition::from_block_sizes({3, 3, 3});
  const Matrix m = part.membership();
  Matrix c(3, 3);
  c << 1.2, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.9;
  Vector d(9);
  for (int j = 0; j < 9; ++j) d(j) = 0.6 + 0.05 * j;
  const Matrix omega = m * c * m.transpose() + Matrix(d.asDiagonal());
  REQUIRE(is_positive_definite(omega, 1e-10));

  const AggregatedPrecision agg = aggregate_precision(omega, d, part);

  const int big_n = 1000000;
  Eigen::LLT<Matrix> llt(omega);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix s_agg = Matrix::Zero(3, 3);
  Vector z(9);
  for (int i = 0; i < big_n; ++i) {
    for (int j = 0; j < 9; ++j) z(j) = normal(rng);
    const Vector x = llt.matrixU().solve(z);
    const Vector xa = m.transpose() * x;
    s_agg += xa * xa.transpose();
  }
  s_agg /= big_n;
  const Matrix empirical_precision = s_agg.llt().solve(Matrix::Identity(3, 3));

  // Asymptotic standard error of MLE precision entries.
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double se = std::sqrt((agg.omega_agg(a, a) * agg.omega_agg(b, b) +
                                   agg.omega_agg(a, b) * agg.omega_agg(a, b)) /
                                  big_n);
      CHECK(std::abs(empirical_precision(a, b) - agg.omega_agg(a, b)) < 3.0 * se);
    }
  }
}

TEST_CASE("validate_tree reports structural problems") {
  CHECK(validate_tree(five_leaf_tree()).empty());

  AggregationTree self_parent = five_leaf_tree();
  self_parent.nodes[0].parent = 1;  // node 1 is its own parent
  const auto cyc = validate_tree(self_parent);
  CHECK(!cyc.empty());

  const std::vector<std::string> four_names = {"V1", "V2", "V3", "V4"};
  const auto mismatch = validate_tree(five_leaf_tree(), four_names);
  CHECK(!mismatch.empty());

  const std::vector<std::string> five_names = {"V1", "V2", "V3", "V4", "V5"};
  CHECK(validate_tree(five_leaf_tree(), five_names).empty());
}
