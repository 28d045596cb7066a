#ifndef TAGLASSO_IO_HPP
#define TAGLASSO_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "taglasso/simulation.hpp"
#include "taglasso/tree.hpp"
#include "taglasso/types.hpp"

namespace taglasso {

struct LoadedMatrix {
  Matrix values;
  std::vector<std::string> names;  // empty when the file has no header row
};

// Plain comma-separated numeric rows with an optional header row of variable
// names. Parse failures carry the 1-based line number.
LoadedMatrix load_matrix_csv(const std::string& path);

// Same format; additionally validated as square and symmetric.
LoadedMatrix load_covariance_csv(const std::string& path);

void save_matrix_csv(const std::string& path, const Matrix& m,
                     const std::vector<std::string>& names = {});

// One row per node: node_id,parent_id,label. The root row has an empty
// parent_id. Leaf labels must match var_names exactly (case-sensitive); the
// leaf order follows var_names.
AggregationTree load_tree_csv(const std::string& path, const std::vector<std::string>& var_names);
void save_tree_csv(const std::string& path, const AggregationTree& tree);

std::string format_double(double v);

std::string study_csv(const std::vector<StudyRow>& rows);
void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows);

// FNV-1a 64-bit content hash, hex-encoded; used for provenance stamps.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace taglasso

#endif
