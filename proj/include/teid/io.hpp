#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "teid/error.hpp"
#include "teid/gaussian.hpp"
#include "teid/graph.hpp"
#include "teid/identification.hpp"
#include "teid/sem.hpp"

namespace teid::io {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Input, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline VertexKind parse_kind(const std::string& s) {
  if (s == "observed") return VertexKind::Observed;
  if (s == "latent") return VertexKind::Latent;
  if (s == "selection") return VertexKind::Selection;
  fail(ErrorKind::Input, "unknown vertex kind '" + s + "'");
}

// {"vertices":[{"name":"X","kind":"observed"},...],"edges":[["Z","X"],...]}
inline Dag graph_from_json(const json& j) {
  try {
    std::vector<Vertex> vertices;
    for (const auto& v : j.at("vertices"))
      vertices.push_back({v.at("name").get<std::string>(), parse_kind(v.value("kind", std::string("observed")))});
    std::vector<Edge> edges;
    if (j.contains("edges"))
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) fail(ErrorKind::Input, "edge must be a [parent, child] pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    return Dag(std::move(vertices), edges);
  } catch (const json::exception& e) {
    fail(ErrorKind::Input, std::string("graph JSON: ") + e.what());
  }
}

inline json graph_to_json(const Dag& g) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : g.vertices()) j["vertices"].push_back({{"name", v.name}, {"kind", to_string(v.kind)}});
  j["edges"] = json::array();
  for (const auto& [p, c] : g.edges()) j["edges"].push_back({p, c});
  return j;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Input, what + ": " + e.what());
  }
}

inline Dag load_graph(const std::string& path) { return graph_from_json(parse_json_text(read_file(path), path)); }

// Graph JSON plus "coefficients": {"Z->X": 0.5, ...} and an optional
// "error_cov" matrix in vertex order.
inline LinearSem sem_from_json(const json& j) {
  Dag g = graph_from_json(j);
  try {
    std::map<Edge, double> coefs;
    for (const auto& [key, value] : j.at("coefficients").items()) {
      const auto arrow = key.find("->");
      if (arrow == std::string::npos) fail(ErrorKind::Input, "coefficient key '" + key + "' is not of the form A->B");
      coefs[{key.substr(0, arrow), key.substr(arrow + 2)}] = value.get<double>();
    }
    std::optional<Eigen::MatrixXd> omega;
    if (j.contains("error_cov")) {
      const auto& rows = j.at("error_cov");
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) fail(ErrorKind::Input, "error_cov must be square");
        for (std::size_t c = 0; c < rows.size(); ++c) m(r, c) = rows[r][c].get<double>();
      }
      omega = m;
    }
    return LinearSem(std::move(g), coefs, omega);
  } catch (const json::exception& e) {
    fail(ErrorKind::Input, std::string("SEM JSON: ") + e.what());
  }
}

inline json sem_to_json(const LinearSem& m) {
  json j = graph_to_json(m.graph());
  j["coefficients"] = json::object();
  for (const auto& [edge, alpha] : m.coefficients()) j["coefficients"][edge.first + "->" + edge.second] = alpha;
  if (!m.error_cov().isIdentity()) {
    j["error_cov"] = json::array();
    for (Eigen::Index r = 0; r < m.error_cov().rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.error_cov().cols(); ++c) row.push_back(m.error_cov()(r, c));
      j["error_cov"].push_back(row);
    }
  }
  return j;
}

inline LinearSem load_sem(const std::string& path) { return sem_from_json(parse_json_text(read_file(path), path)); }

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Input, "CSV row " + std::to_string(row) + ": '" + s + "' is not a number");
  }
}

inline std::vector<std::vector<std::string>> csv_lines(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    out.push_back(split_csv_line(line));
  }
  return out;
}

}  // namespace detail

// First row holds the labels; each following row is a matrix row. A header
// with an empty first cell means every row starts with its label. Entries
// must be symmetric to 1e-9 and are symmetrized by averaging.
inline LabeledCov covariance_from_csv(const std::string& text) {
  auto lines = detail::csv_lines(text);
  if (lines.empty()) fail(ErrorKind::Input, "covariance CSV is empty");
  Labels labels = lines[0];
  const bool row_labels = !labels.empty() && labels[0].empty();
  if (row_labels) labels.erase(labels.begin());
  const std::size_t n = labels.size();
  if (n == 0) fail(ErrorKind::Input, "covariance CSV has no labels");
  if (lines.size() != n + 1)
    fail(ErrorKind::Input, "covariance CSV needs " + std::to_string(n) + " matrix rows, found " +
                               std::to_string(lines.size() - 1));
  Eigen::MatrixXd m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    auto cells = lines[r + 1];
    if (row_labels) {
      if (cells.empty() || cells[0] != labels[r])
        fail(ErrorKind::Input, "covariance CSV row " + std::to_string(r + 1) + " should be labeled " + labels[r]);
      cells.erase(cells.begin());
    }
    if (cells.size() != n) fail(ErrorKind::Input, "covariance CSV row " + std::to_string(r + 1) + " has wrong width");
    for (std::size_t c = 0; c < n; ++c) m(r, c) = detail::parse_number(cells[c], r + 1);
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) fail(ErrorKind::Input, "covariance CSV is not symmetric");
  return LabeledCov(std::move(labels), 0.5 * (m + m.transpose()));
}

inline std::string covariance_to_csv(const LabeledCov& c) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << c.labels()[i];
  out << "\n";
  for (std::size_t r = 0; r < c.size(); ++r) {
    for (std::size_t k = 0; k < c.size(); ++k) out << (k ? "," : "") << c.matrix()(r, k);
    out << "\n";
  }
  return out.str();
}

// Raw data: header of labels, one observation per row. Returns the sample
// covariance (divisor n - 1).
inline LabeledCov covariance_from_samples_csv(const std::string& text) {
  auto lines = detail::csv_lines(text);
  if (lines.size() < 3) fail(ErrorKind::Input, "sample CSV needs a header and at least two rows");
  const Labels labels = lines[0];
  const std::size_t p = labels.size();
  const std::size_t n = lines.size() - 1;
  Eigen::MatrixXd x(n, p);
  for (std::size_t r = 0; r < n; ++r) {
    if (lines[r + 1].size() != p) fail(ErrorKind::Input, "sample CSV row " + std::to_string(r + 1) + " has wrong width");
    for (std::size_t c = 0; c < p; ++c) x(r, c) = detail::parse_number(lines[r + 1][c], r + 1);
  }
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(n - 1);
  return LabeledCov(labels, 0.5 * (s + s.transpose()));
}

inline LabeledCov load_covariance(const std::string& path, bool from_samples = false) {
  const std::string text = read_file(path);
  return from_samples ? covariance_from_samples_csv(text) : covariance_from_csv(text);
}

inline json roles_to_json(const Roles& r) {
  return {{"x", r.x}, {"y", r.y}, {"z", r.z}, {"w", r.w}, {"t", r.t}, {"aux", r.aux}};
}

inline Roles roles_from_json(const json& j) {
  Roles r;
  r.x = j.value("x", std::string());
  r.y = j.value("y", std::string());
  r.z = j.value("z", std::string());
  r.w = j.value("w", std::string());
  r.t = j.value("t", Labels{});
  r.aux = j.value("aux", std::string());
  return r;
}

inline json certificate_to_json(const Certificate& cert, const Tolerances& tol = {}) {
  json checks = json::array();
  for (const auto& c : cert.checks) {
    json jc = {{"id", c.id},           {"statement", c.statement}, {"passed", c.passed},
               {"separator", c.separator}, {"witness", c.witness}};
    if (!c.note.empty()) jc["note"] = c.note;
    checks.push_back(std::move(jc));
  }
  json j = {{"criterion", to_string(cert.criterion)},
            {"roles", roles_to_json(cert.roles)},
            {"adjustment", cert.adjustment},
            {"stages", cert.stages},
            {"checks", std::move(checks)},
            {"passed", cert.passed()},
            {"tolerances", {{"denominator", tol.denominator}, {"consistency", tol.consistency}}}};
  j["estimate"] = cert.estimate ? json(*cert.estimate) : json(nullptr);
  return j;
}

}  // namespace teid::io
