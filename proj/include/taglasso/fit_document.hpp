#ifndef TAGLASSO_FIT_DOCUMENT_HPP
#define TAGLASSO_FIT_DOCUMENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taglasso/solver.hpp"
#include "taglasso/tree.hpp"

namespace taglasso {

// Serialized fit artifact. JSON on disk, schema-versioned; round-trips
// byte-identically (serialize -> parse -> serialize).
struct FitDocument {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  int p = 0;
  int n = 0;
  std::vector<std::string> variables;
  Penalties penalties;
  SolverConfig config;
  std::vector<double> omega;            // dense, row-major
  std::map<int, std::vector<double>> gamma_rows;  // node id -> row (nonzero rows only)
  std::vector<double> d;
  int k = 0;
  std::vector<int> partition_assignment;  // 1-based block ids
  std::vector<double> aggregated_c;       // K x K row-major
  std::vector<double> aggregated_omega;   // K x K row-major
  double aggregation_deviation = 0.0;
  std::vector<std::pair<int, int>> support;  // 1-based (i, j), i <= j
  double residual_omega = 0.0;
  double residual_gamma = 0.0;
  std::string data_hash;
  std::string tree_hash;
  std::uint64_t seed = 0;
  std::string timestamp;

  Matrix omega_matrix() const;
  Matrix aggregated_c_matrix() const;
  Partition partition() const;
};

FitDocument make_fit_document(const TagLassoFit& fit, const SampleCovariance& s,
                              const std::vector<std::string>& variables,
                              const std::string& data_hash, const std::string& tree_hash,
                              std::uint64_t seed, const std::string& timestamp);

std::string to_json(const FitDocument& doc);
FitDocument fit_document_from_json(const std::string& json_text);
void save_fit_document(const std::string& path, const FitDocument& doc);
FitDocument load_fit_document(const std::string& path);

// DOT renderings: the full variable-level graph (edges = support) and the
// aggregated block-level graph (edges = |c_ij| > ctol). Deterministic node
// ordering.
std::string dot_full_graph(const FitDocument& doc);
std::string dot_aggregated_graph(const FitDocument& doc, double ctol = 1e-6);

}  // namespace taglasso

#endif
