#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "teid/error.hpp"
#include "teid/gaussian.hpp"
#include "teid/graph.hpp"
#include "teid/random.hpp"

namespace teid {

// Linear structural equation model over a path diagram:
//   V_i = sum_{j in pa(i)} alpha_ij V_j + eps_i,  eps ~ Normal(0, error_cov).
class LinearSem {
 public:
  LinearSem(Dag graph, const std::map<Edge, double>& coefficients,
            std::optional<Eigen::MatrixXd> error_cov = std::nullopt)
      : graph_(std::move(graph)),
        paths_(Eigen::MatrixXd::Zero(graph_.size(), graph_.size())),
        error_cov_(error_cov ? *error_cov : Eigen::MatrixXd::Identity(graph_.size(), graph_.size())) {
    const std::size_t n = graph_.size();
    if (coefficients.size() != graph_.edge_indices().size())
      fail(ErrorKind::Input, "coefficients must cover exactly the graph's edges");
    for (const auto& [edge, alpha] : coefficients) {
      if (!graph_.contains(edge.first) || !graph_.contains(edge.second) || !graph_.has_edge(edge.first, edge.second))
        fail(ErrorKind::Input, "coefficient for non-edge " + edge.first + "->" + edge.second);
      if (!std::isfinite(alpha) || alpha == 0.0)
        fail(ErrorKind::Input, "path coefficient " + edge.first + "->" + edge.second + " must be finite and nonzero");
      paths_(graph_.index(edge.second), graph_.index(edge.first)) = alpha;
    }
    if (static_cast<std::size_t>(error_cov_.rows()) != n || static_cast<std::size_t>(error_cov_.cols()) != n)
      fail(ErrorKind::Input, "error covariance dimension does not match the graph");
    if ((error_cov_ - error_cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      fail(ErrorKind::Input, "error covariance is not symmetric");
    detail::require_nondegenerate(error_cov_, "error covariance is not positive definite");
  }

  const Dag& graph() const { return graph_; }
  const Eigen::MatrixXd& error_cov() const { return error_cov_; }

  // A(child, parent) = alpha; rows and columns in vertex declaration order.
  const Eigen::MatrixXd& path_matrix() const { return paths_; }

  double coefficient(const std::string& parent, const std::string& child) const {
    if (!graph_.has_edge(parent, child)) fail(ErrorKind::Input, "no edge " + parent + "->" + child);
    return paths_(graph_.index(child), graph_.index(parent));
  }

  std::map<Edge, double> coefficients() const {
    std::map<Edge, double> out;
    for (auto [p, c] : graph_.edge_indices()) out[{graph_.name(p), graph_.name(c)}] = paths_(c, p);
    return out;
  }

  // (I - A)^{-1}, by forward substitution along the topological order.
  Eigen::MatrixXd total_effects() const {
    const std::size_t n = graph_.size();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t v : graph_.topological_order()) {
      t(v, v) = 1.0;
      for (std::size_t p : graph_.parents(v)) t.row(v) += paths_(v, p) * t.row(p);
    }
    return t;
  }

 private:
  Dag graph_;
  Eigen::MatrixXd paths_;
  Eigen::MatrixXd error_cov_;
};

// Covariance of every vertex, latent and selection vertices included.
inline LabeledCov implied_cov(const LinearSem& m) {
  const Eigen::MatrixXd t = m.total_effects();
  Eigen::MatrixXd sigma = t * m.error_cov() * t.transpose();
  Labels labels;
  for (const auto& v : m.graph().vertices()) labels.push_back(v.name);
  return LabeledCov(std::move(labels), 0.5 * (sigma + sigma.transpose()));
}

// Sum over directed x -> ... -> y paths of the coefficient products.
inline double total_effect_by_paths(const LinearSem& m, const std::string& x, const std::string& y) {
  const Dag& g = m.graph();
  const std::size_t target = g.index(y);
  const auto& a = m.path_matrix();
  double total = 0.0;
  // Depth-first walk over every directed path; no sharing between paths.
  auto walk = [&](auto&& self, std::size_t v, double product) -> void {
    if (v == target) {
      total += product;
      return;
    }
    for (std::size_t c : g.children(v)) self(self, c, product * a(c, v));
  };
  walk(walk, g.index(x), 1.0);
  return total;
}

inline double true_total_effect(const LinearSem& m, const std::string& x, const std::string& y) {
  if (x == y) fail(ErrorKind::Input, "total effect: x and y coincide");
  const double by_inverse = m.total_effects()(m.graph().index(y), m.graph().index(x));
  const double by_paths = total_effect_by_paths(m, x, y);
  if (std::abs(by_inverse - by_paths) > 1e-12 * std::max(1.0, std::abs(by_inverse)))
    throw std::logic_error("total effect routes disagree");
  return by_inverse;
}

inline LabeledCov marginal_cov(const LabeledCov& c, const Labels& drop) {
  Labels keep;
  for (const auto& l : drop) c.index(l);
  for (const auto& l : c.labels())
    if (std::find(drop.begin(), drop.end(), l) == drop.end()) keep.push_back(l);
  if (keep.empty()) fail(ErrorKind::Input, "marginalization would drop every variable");
  return LabeledCov(keep, detail::take(c.matrix(), c.indices(keep), c.indices(keep)), c.selection());
}

// Magnitude band for generated path coefficients; signs are drawn at random.
// Keeping |alpha| away from zero makes faithfulness-violating cancellations rare.
struct CoefficientRange {
  double min_magnitude = 0.3;
  double max_magnitude = 1.0;
};

inline LinearSem random_sem(const Dag& g, std::uint64_t seed, CoefficientRange range = {}) {
  if (!(range.min_magnitude > 0.0) || !(range.max_magnitude >= range.min_magnitude) ||
      !std::isfinite(range.max_magnitude))
    fail(ErrorKind::Input, "coefficient range must satisfy 0 < min <= max");
  Rng rng(seed);
  std::map<Edge, double> coefs;
  for (const auto& e : g.edges()) {
    const double mag = rng.uniform(range.min_magnitude, range.max_magnitude);
    coefs[e] = rng.coin() ? mag : -mag;
  }
  return LinearSem(g, coefs);
}

// Monte Carlo summary of draws from a model, optionally keeping only draws
// with the selection variable inside its window.
struct SampleSummary {
  LabeledCov cov;                  // sample covariance, divisor n - 1
  Eigen::MatrixXd standard_error;  // Monte Carlo standard error of each entry
  std::vector<LabeledCov> batches; // covariances of consecutive equal batches
  std::size_t accepted = 0;
  std::size_t attempted = 0;
};

inline constexpr std::size_t kSimulationBatches = 20;
inline constexpr double kMinAcceptance = 1e-4;

namespace detail {

inline Eigen::MatrixXd sample_cov(const std::vector<double>& rows, std::size_t p, std::size_t begin, std::size_t end) {
  const std::size_t n = end - begin;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t i = 0; i < p; ++i) mean(i) += rows[r * p + i];
  mean /= static_cast<double>(n);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd d(p);
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t i = 0; i < p; ++i) d(i) = rows[r * p + i] - mean(i);
    s.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  const Eigen::MatrixXd full = s.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(n - 1);
}

}  // namespace detail

inline SampleSummary simulate(const LinearSem& m, const Labels& labels, std::size_t n, std::uint64_t seed,
                              const std::optional<Selection>& selection = std::nullopt) {
  const Dag& g = m.graph();
  if (n < 2 * kSimulationBatches) fail(ErrorKind::Input, "simulation needs at least 40 draws");
  std::vector<std::size_t> out_idx;
  for (const auto& l : labels) out_idx.push_back(g.index(l));
  std::optional<std::size_t> sel_idx;
  if (selection) sel_idx = g.index(selection->label);

  const std::size_t nv = g.size();
  const std::size_t p = labels.size();
  const Eigen::MatrixXd chol = m.error_cov().llt().matrixL();
  const bool diagonal = m.error_cov().isDiagonal();
  const auto& a = m.path_matrix();
  const auto& order = g.topological_order();

  Rng rng(seed);
  std::vector<double> rows;
  rows.reserve(n * p);
  Eigen::VectorXd z(nv), eps(nv), v(nv);
  std::size_t accepted = 0, attempted = 0;
  const double cap = static_cast<double>(n) / kMinAcceptance + 1e4;
  while (accepted < n) {
    if (static_cast<double>(attempted) > cap ||
        (attempted >= 10000 && static_cast<double>(accepted) < kMinAcceptance * static_cast<double>(attempted)))
      fail(ErrorKind::Degenerate, "window too narrow for simulation");
    ++attempted;
    for (std::size_t i = 0; i < nv; ++i) z(i) = rng.normal();
    if (diagonal)
      eps = chol.diagonal().cwiseProduct(z);
    else
      eps.noalias() = chol * z;
    for (std::size_t vi : order) {
      double x = eps(vi);
      for (std::size_t par : g.parents(vi)) x += a(vi, par) * v(par);
      v(vi) = x;
    }
    if (sel_idx) {
      const double s = v(*sel_idx);
      if (s < selection->window.lower || s > selection->window.upper) continue;
    }
    for (std::size_t i : out_idx) rows.push_back(v(i));
    ++accepted;
  }

  SampleSummary out;
  out.accepted = accepted;
  out.attempted = attempted;
  out.cov = LabeledCov(labels, detail::sample_cov(rows, p, 0, n), selection);

  // Per-entry standard error from the spread of centered products.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i) mean(i) += rows[r * p + i];
  mean /= static_cast<double>(n);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd d(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < p; ++i) d(i) = rows[r * p + i] - mean(i);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double q = d(i) * d(j);
        sum_sq(i, j) += q * q;
      }
  }
  out.standard_error = Eigen::MatrixXd::Zero(p, p);
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = out.cov.matrix()(i, j) * (nn - 1.0) / nn;
      const double var_q = std::max(0.0, sum_sq(i, j) / nn - c * c);
      out.standard_error(i, j) = out.standard_error(j, i) = std::sqrt(var_q / nn);
    }

  for (std::size_t b = 0; b < kSimulationBatches; ++b) {
    const std::size_t begin = n * b / kSimulationBatches;
    const std::size_t end = n * (b + 1) / kSimulationBatches;
    out.batches.emplace_back(labels, detail::sample_cov(rows, p, begin, end), selection);
  }
  return out;
}

// Rejection sampler for the population selected by iv on selection vertex s;
// reports the observed non-selection variables.
inline SampleSummary simulate_selected(const LinearSem& m, const std::string& s, const Interval& iv, std::size_t n,
                                       std::uint64_t seed) {
  if (m.graph().kind(s) != VertexKind::Selection)
    fail(ErrorKind::Input, "'" + s + "' is not a selection vertex");
  return simulate(m, m.graph().names(VertexKind::Observed), n, seed, Selection{s, iv});
}

}  // namespace teid
