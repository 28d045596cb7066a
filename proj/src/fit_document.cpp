#include "taglasso/fit_document.hpp"

#include <json.hpp>
#include <sstream>

#include "taglasso/io.hpp"

namespace taglasso {

using nlohmann::json;

Matrix FitDocument::omega_matrix() const {
  Matrix m(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) m(i, j) = omega[static_cast<size_t>(i) * p + j];
  }
  return m;
}

Matrix FitDocument::aggregated_c_matrix() const {
  Matrix m(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) m(i, j) = aggregated_c[static_cast<size_t>(i) * k + j];
  }
  return m;
}

Partition FitDocument::partition() const {
  Partition part;
  part.k = k;
  part.assignment.reserve(partition_assignment.size());
  for (int b : partition_assignment) part.assignment.push_back(b - 1);
  return part;
}

FitDocument make_fit_document(const TagLassoFit& fit, const SampleCovariance& s,
                              const std::vector<std::string>& variables,
                              const std::string& data_hash, const std::string& tree_hash,
                              std::uint64_t seed, const std::string& timestamp) {
  FitDocument doc;
  const int p = static_cast<int>(fit.omega.rows());
  doc.p = p;
  doc.n = s.n;
  doc.variables = variables;
  doc.penalties = fit.penalties;
  doc.config = fit.config;

  doc.omega.reserve(static_cast<size_t>(p) * p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) doc.omega.push_back(fit.omega(i, j));
  }
  for (int r = 0; r < fit.gamma.rows(); ++r) {
    if (r == fit.root_row || fit.gamma.row(r).norm() > 0.0) {
      std::vector<double> row(fit.gamma.cols());
      for (int c = 0; c < fit.gamma.cols(); ++c) row[c] = fit.gamma(r, c);
      doc.gamma_rows[fit.gamma_node_ids[r]] = std::move(row);
    }
  }
  doc.d.assign(fit.d.data(), fit.d.data() + fit.d.size());
  doc.k = fit.partition.k;
  for (int b : fit.partition.assignment) doc.partition_assignment.push_back(b + 1);

  // Aggregated matrices from the consensus estimate; the block tolerance is
  // relaxed to the achieved consensus residual since the copies only agree up
  // to it.
  const double block_tol = std::max(1e-6, 50.0 * fit.residual());
  AggregatedPrecision agg =
      aggregate_precision(fit.omega, fit.d, fit.partition, 1e-8, block_tol);
  doc.aggregation_deviation = agg.max_block_deviation;
  for (int i = 0; i < doc.k; ++i) {
    for (int j = 0; j < doc.k; ++j) {
      doc.aggregated_c.push_back(agg.c(i, j));
      doc.aggregated_omega.push_back(agg.omega_agg(i, j));
    }
  }

  for (const auto& [i, j] : fit.support) doc.support.emplace_back(i + 1, j + 1);
  doc.residual_omega = fit.residual_omega;
  doc.residual_gamma = fit.residual_gamma;
  doc.data_hash = data_hash;
  doc.tree_hash = tree_hash;
  doc.seed = seed;
  doc.timestamp = timestamp;
  return doc;
}

std::string to_json(const FitDocument& doc) {
  json j;
  j["schema_version"] = doc.schema_version;
  j["p"] = doc.p;
  j["n"] = doc.n;
  j["variables"] = doc.variables;
  j["penalties"] = {{"lambda1", doc.penalties.lambda1}, {"lambda2", doc.penalties.lambda2}};
  j["config"] = {{"rho1", doc.config.rho1},
                 {"t_stages", doc.config.t_stages},
                 {"maxit", doc.config.maxit},
                 {"rho_factor", doc.config.rho_factor}};
  j["omega"] = doc.omega;
  json gamma = json::object();
  for (const auto& [node_id, row] : doc.gamma_rows) gamma[std::to_string(node_id)] = row;
  j["gamma_rows"] = gamma;
  j["d"] = doc.d;
  j["partition"] = {{"k", doc.k}, {"assignment", doc.partition_assignment}};
  j["aggregated"] = {{"c", doc.aggregated_c},
                     {"omega_agg", doc.aggregated_omega},
                     {"max_block_deviation", doc.aggregation_deviation}};
  json support = json::array();
  for (const auto& [a, b] : doc.support) support.push_back({a, b});
  j["support"] = support;
  j["residuals"] = {{"omega", doc.residual_omega}, {"gamma", doc.residual_gamma}};
  j["provenance"] = {{"data_hash", doc.data_hash},
                     {"tree_hash", doc.tree_hash},
                     {"seed", doc.seed},
                     {"timestamp", doc.timestamp}};
  return j.dump(2) + "\n";
}

FitDocument fit_document_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw io_error(std::string("fit document: ") + e.what());
  }
  FitDocument doc;
  try {
    doc.schema_version = j.at("schema_version").get<int>();
    if (doc.schema_version != FitDocument::kSchemaVersion) {
      throw io_error("fit document: unsupported schema version " +
                     std::to_string(doc.schema_version) + " (expected " +
                     std::to_string(FitDocument::kSchemaVersion) + ")");
    }
    doc.p = j.at("p").get<int>();
    doc.n = j.at("n").get<int>();
    doc.variables = j.at("variables").get<std::vector<std::string>>();
    doc.penalties.lambda1 = j.at("penalties").at("lambda1").get<double>();
    doc.penalties.lambda2 = j.at("penalties").at("lambda2").get<double>();
    doc.config.rho1 = j.at("config").at("rho1").get<double>();
    doc.config.t_stages = j.at("config").at("t_stages").get<int>();
    doc.config.maxit = j.at("config").at("maxit").get<int>();
    doc.config.rho_factor = j.at("config").at("rho_factor").get<double>();
    doc.omega = j.at("omega").get<std::vector<double>>();
    for (const auto& [key, value] : j.at("gamma_rows").items()) {
      doc.gamma_rows[std::stoi(key)] = value.get<std::vector<double>>();
    }
    doc.d = j.at("d").get<std::vector<double>>();
    doc.k = j.at("partition").at("k").get<int>();
    doc.partition_assignment = j.at("partition").at("assignment").get<std::vector<int>>();
    doc.aggregated_c = j.at("aggregated").at("c").get<std::vector<double>>();
    doc.aggregated_omega = j.at("aggregated").at("omega_agg").get<std::vector<double>>();
    doc.aggregation_deviation = j.at("aggregated").at("max_block_deviation").get<double>();
    for (const auto& pair : j.at("support")) {
      doc.support.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
    doc.residual_omega = j.at("residuals").at("omega").get<double>();
    doc.residual_gamma = j.at("residuals").at("gamma").get<double>();
    doc.data_hash = j.at("provenance").at("data_hash").get<std::string>();
    doc.tree_hash = j.at("provenance").at("tree_hash").get<std::string>();
    doc.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    doc.timestamp = j.at("provenance").at("timestamp").get<std::string>();
  } catch (const json::exception& e) {
    throw io_error(std::string("fit document: ") + e.what());
  }
  if (static_cast<int>(doc.omega.size()) != doc.p * doc.p) {
    throw io_error("fit document: omega has wrong length");
  }
  if (static_cast<int>(doc.partition_assignment.size()) != doc.p) {
    throw io_error("fit document: partition assignment has wrong length");
  }
  return doc;
}

void save_fit_document(const std::string& path, const FitDocument& doc) {
  write_file(path, to_json(doc));
}

FitDocument load_fit_document(const std::string& path) {
  return fit_document_from_json(read_file(path));
}

namespace {

std::string var_label(const FitDocument& doc, int v) {
  if (v < static_cast<int>(doc.variables.size()) && !doc.variables[v].empty()) {
    return doc.variables[v];
  }
  return "V" + std::to_string(v + 1);
}

}  // namespace

std::string dot_full_graph(const FitDocument& doc) {
  std::ostringstream out;
  out << "graph full {\n";
  for (int v = 0; v < doc.p; ++v) {
    out << "  v" << v + 1 << " [label=\"" << var_label(doc, v) << "\"];\n";
  }
  for (const auto& [a, b] : doc.support) {
    if (a != b) out << "  v" << a << " -- v" << b << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string dot_aggregated_graph(const FitDocument& doc, double ctol) {
  std::ostringstream out;
  std::vector<int> sizes(doc.k, 0);
  for (int b : doc.partition_assignment) sizes[b - 1]++;
  out << "graph aggregated {\n";
  for (int b = 0; b < doc.k; ++b) {
    out << "  b" << b + 1 << " [label=\"block" << b + 1 << " (" << sizes[b] << ")\", size="
        << sizes[b] << "];\n";
  }
  for (int a = 0; a < doc.k; ++a) {
    for (int b = a + 1; b < doc.k; ++b) {
      const double c = doc.aggregated_c[static_cast<size_t>(a) * doc.k + b];
      if (std::abs(c) > ctol) {
        out << "  b" << a + 1 << " -- b" << b + 1 << " [weight=\"" << format_double(c)
            << "\"];\n";
      }
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace taglasso
