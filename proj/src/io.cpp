#include "taglasso/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace taglasso {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

bool parse_int(const std::string& field, int& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool blank(const std::string& line) { return trim(line).empty(); }

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  out << content;
}

LoadedMatrix load_matrix_csv(const std::string& path) {
  const auto lines = read_lines(path);
  LoadedMatrix out;
  std::vector<std::vector<double>> rows;
  size_t width = 0;
  bool first_data_line = true;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto fields = split_csv_line(lines[i]);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        numeric = false;
        if (!first_data_line) {
          throw io_error(path + ":" + std::to_string(i + 1) + ": cannot parse '" +
                         trim(fields[c]) + "' as a number");
        }
        break;
      }
    }
    if (!numeric) {
      // Header row of variable names.
      for (const auto& f : fields) out.names.push_back(trim(f));
      width = fields.size();
      first_data_line = false;
      continue;
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw io_error(path + ":" + std::to_string(i + 1) + ": expected " + std::to_string(width) +
                     " fields, found " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(row));
    first_data_line = false;
  }
  if (rows.empty()) throw io_error(path + ": no numeric rows");
  out.values.resize(static_cast<int>(rows.size()), static_cast<int>(width));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < width; ++c) out.values(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return out;
}

LoadedMatrix load_covariance_csv(const std::string& path) {
  LoadedMatrix m = load_matrix_csv(path);
  if (m.values.rows() != m.values.cols()) {
    throw io_error(path + ": covariance matrix must be square, got " +
                   std::to_string(m.values.rows()) + "x" + std::to_string(m.values.cols()));
  }
  const double scale = std::max(1.0, m.values.cwiseAbs().maxCoeff());
  const double asym = (m.values - m.values.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    throw io_error(path + ": matrix is not symmetric (max asymmetry " + format_double(asym) + ")");
  }
  m.values = ((m.values + m.values.transpose()) / 2.0).eval();
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

void save_matrix_csv(const std::string& path, const Matrix& m,
                     const std::vector<std::string>& names) {
  std::ostringstream out;
  if (!names.empty()) {
    for (size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << "\n";
  }
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << "\n";
  }
  write_file(path, out.str());
}

AggregationTree load_tree_csv(const std::string& path,
                              const std::vector<std::string>& var_names) {
  const auto lines = read_lines(path);
  AggregationTree tree;
  std::unordered_map<std::string, int> leaf_by_label;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 3) {
      throw io_error(path + ":" + std::to_string(i + 1) +
                     ": expected 3 fields (node_id,parent_id,label), found " +
                     std::to_string(fields.size()));
    }
    int id;
    if (!parse_int(fields[0], id)) {
      if (i == 0 && trim(fields[0]) == "node_id") continue;  // header row
      throw io_error(path + ":" + std::to_string(i + 1) + ": cannot parse node id '" +
                     trim(fields[0]) + "'");
    }
    int parent = -1;
    if (!trim(fields[1]).empty() && !parse_int(fields[1], parent)) {
      throw io_error(path + ":" + std::to_string(i + 1) + ": cannot parse parent id '" +
                     trim(fields[1]) + "'");
    }
    tree.nodes.push_back({id, trim(fields[2]), parent});
  }
  if (tree.nodes.empty()) throw io_error(path + ": no tree rows");

  // Leaves are the nodes never referenced as a parent; they bind to variables
  // by exact label match.
  std::unordered_map<int, bool> is_parent;
  for (const auto& n : tree.nodes) {
    if (n.parent != -1) is_parent[n.parent] = true;
  }
  for (const auto& n : tree.nodes) {
    if (!is_parent.count(n.id)) {
      if (!leaf_by_label.emplace(n.label, n.id).second) {
        throw io_error(path + ": duplicate leaf label '" + n.label + "'");
      }
    }
  }
  if (leaf_by_label.size() != var_names.size()) {
    throw io_error(path + ": tree has " + std::to_string(leaf_by_label.size()) +
                   " leaves but the data has " + std::to_string(var_names.size()) + " columns");
  }
  tree.leaf_ids.reserve(var_names.size());
  for (const auto& name : var_names) {
    auto it = leaf_by_label.find(name);
    if (it == leaf_by_label.end()) {
      throw io_error(path + ": no tree leaf labeled '" + name + "'");
    }
    tree.leaf_ids.push_back(it->second);
  }
  return tree;
}

void save_tree_csv(const std::string& path, const AggregationTree& tree) {
  std::ostringstream out;
  for (const auto& n : tree.nodes) {
    out << n.id << ",";
    if (n.parent != -1) out << n.parent;
    out << "," << n.label << "\n";
  }
  write_file(path, out.str());
}

std::string study_csv(const std::vector<StudyRow>& rows) {
  std::ostringstream out;
  out << "design,p,n,K_true,estimator,rep,seed,kl,ri,ari,fpr,fnr\n";
  for (const auto& r : rows) {
    out << r.design << "," << r.p << "," << r.n << "," << r.k_true << "," << r.estimator << ","
        << r.rep << "," << r.seed << ",";
    if (r.failed) {
      out << "NA,NA,NA,NA,NA\n";
      continue;
    }
    out << format_double(r.kl) << "," << format_double(r.ri) << ",";
    if (r.ari_defined) {
      out << format_double(r.ari);
    } else {
      out << "NA";
    }
    out << "," << format_double(r.fpr) << "," << format_double(r.fnr) << "\n";
  }
  return out.str();
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows) {
  write_file(path, study_csv(rows));
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::string& path) { return fnv1a_hex(read_file(path)); }

}  // namespace taglasso
