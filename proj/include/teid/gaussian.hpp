#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "teid/error.hpp"

namespace teid {

using Labels = std::vector<std::string>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative eigenvalue floor below which a block counts as singular.
inline constexpr double kSingularityRatio = 1e-10;

// Probability mass below which a selection window is treated as empty.
inline constexpr double kWindowMassFloor = 1e-300;

// Selection window a <= S <= b; either end may be infinite.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  Interval() = default;
  Interval(double lo, double hi) : lower(lo), upper(hi) {
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi))
      fail(ErrorKind::Input, "selection window requires lower < upper");
  }

  bool unbounded() const { return std::isinf(lower) && lower < 0 && std::isinf(upper) && upper > 0; }
};

struct Selection {
  std::string label;
  Interval window;
};

namespace detail {

inline void require_nondegenerate(const Eigen::MatrixXd& block, std::string_view what) {
  if (block.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  if (!(largest > 0.0) || ev.minCoeff() < kSingularityRatio * largest) fail(ErrorKind::Degenerate, std::string(what));
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, std::string_view what) {
  require_nondegenerate(m, what);
  return m.llt().solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

inline Eigen::MatrixXd take(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

// M_kk - M_kg M_gg^{-1} M_gk
inline Eigen::MatrixXd schur(const Eigen::MatrixXd& m, const std::vector<std::size_t>& keep,
                             const std::vector<std::size_t>& given) {
  Eigen::MatrixXd kk = take(m, keep, keep);
  if (given.empty()) return kk;
  const Eigen::MatrixXd gg = take(m, given, given);
  require_nondegenerate(gg, "degenerate conditioning set");
  const Eigen::MatrixXd kg = take(m, keep, given);
  kk -= kg * gg.llt().solve(kg.transpose());
  return 0.5 * (kk + kk.transpose());
}

}  // namespace detail

// A covariance matrix with variable labels. Variables are taken to have mean
// zero, which fixes where a selection window sits.
class LabeledCov {
 public:
  LabeledCov() = default;

  LabeledCov(Labels labels, Eigen::MatrixXd matrix, std::optional<Selection> selection = std::nullopt)
      : labels_(std::move(labels)), matrix_(std::move(matrix)), selection_(std::move(selection)) {
    if (matrix_.rows() != matrix_.cols() || static_cast<std::size_t>(matrix_.rows()) != labels_.size())
      fail(ErrorKind::Input, "covariance dimension does not match label count");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (!index_.emplace(labels_[i], i).second) fail(ErrorKind::Input, "duplicate label '" + labels_[i] + "'");
    if (!matrix_.allFinite()) fail(ErrorKind::Input, "covariance has non-finite entries");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      fail(ErrorKind::Input, "covariance matrix is not symmetric");
    detail::require_nondegenerate(matrix_, "covariance matrix is not positive definite");
  }

  const Labels& labels() const { return labels_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::size_t size() const { return labels_.size(); }
  const std::optional<Selection>& selection() const { return selection_; }
  bool is_selected() const { return selection_.has_value(); }

  bool contains(std::string_view label) const { return index_.find(label) != index_.end(); }

  std::size_t index(std::string_view label) const {
    auto it = index_.find(label);
    if (it == index_.end()) fail(ErrorKind::Input, "unknown label '" + std::string(label) + "'");
    return it->second;
  }

  std::vector<std::size_t> indices(const Labels& labels) const {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(index(l));
    return out;
  }

  double operator()(std::string_view a, std::string_view b) const { return matrix_(index(a), index(b)); }

 private:
  Labels labels_;
  Eigen::MatrixXd matrix_;
  std::optional<Selection> selection_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

namespace detail {

inline void require_disjoint_labels(const Labels& a, const Labels& b, std::string_view what) {
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end())
      fail(ErrorKind::Input, std::string(what) + ": label '" + x + "' used twice");
}

inline Labels concat(Labels a, const Labels& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

// Covariance of `keep` given `given` (Schur complement). The selection flag
// is carried over.
inline LabeledCov conditional_cov(const LabeledCov& c, const Labels& keep, const Labels& given) {
  detail::require_disjoint_labels(keep, given, "conditional covariance");
  return LabeledCov(keep, detail::schur(c.matrix(), c.indices(keep), c.indices(given)), c.selection());
}

// Row vector B_{y X . given} = Sigma_{yX.given} Sigma_{XX.given}^{-1}.
inline Eigen::VectorXd regression_coefs(const LabeledCov& c, const std::string& y, const Labels& x,
                                        const Labels& given) {
  detail::require_disjoint_labels({y}, x, "regression");
  detail::require_disjoint_labels({y}, given, "regression");
  detail::require_disjoint_labels(x, given, "regression");
  if (x.empty()) return Eigen::VectorXd(0);
  const Eigen::MatrixXd s = detail::schur(c.matrix(), c.indices(detail::concat({y}, x)), c.indices(given));
  const Eigen::MatrixXd sxx = s.bottomRightCorner(x.size(), x.size());
  detail::require_nondegenerate(sxx, "singular regressor block");
  return sxx.llt().solve(s.block(1, 0, x.size(), 1));
}

inline double regression_coef(const LabeledCov& c, const std::string& y, const std::string& x,
                              const Labels& given) {
  return regression_coefs(c, y, {x}, given)(0);
}

// beta_{yx.S} - (beta_{yx.ST} + B_{yT.xS} B_{Tx.S}); zero for Gaussian data.
inline double cochran_check(const LabeledCov& c, const std::string& y, const std::string& x, const Labels& s,
                            const Labels& t) {
  detail::require_disjoint_labels({y, x}, detail::concat(s, t), "Cochran identity");
  detail::require_disjoint_labels(s, t, "Cochran identity");
  if (y == x) fail(ErrorKind::Input, "Cochran identity: y and x coincide");
  const double marginal = regression_coef(c, y, x, s);
  const double partial = regression_coef(c, y, x, detail::concat(s, t));
  if (t.empty()) return marginal - partial;
  const Eigen::VectorXd byt = regression_coefs(c, y, t, detail::concat({x}, s));
  double omitted = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) omitted += byt(j) * regression_coef(c, t[j], x, s);
  return marginal - (partial + omitted);
}

// sigma_{yy.xS} through sigma_{yy.x} - B_{yS.x} Sigma_{SS.x} B'_{yS.x}.
inline double residual_var(const LabeledCov& c, const std::string& y, const std::string& x, const Labels& s) {
  detail::require_disjoint_labels({y, x}, s, "residual variance");
  if (y == x) fail(ErrorKind::Input, "residual variance: y and x coincide");
  const double base = detail::schur(c.matrix(), {c.index(y)}, {c.index(x)})(0, 0);
  if (s.empty()) return base;
  const Eigen::VectorXd b = regression_coefs(c, y, s, {x});
  const Eigen::MatrixXd sss = detail::schur(c.matrix(), c.indices(s), {c.index(x)});
  return base - b.dot(sss * b);
}

inline double normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct TruncatedMoments {
  double mean = 0.0;
  double var = 0.0;
};

// Mean and variance of Normal(mean, var) restricted to the window.
inline TruncatedMoments truncated_moments(double mean, double var, const Interval& iv) {
  if (!(var > 0.0) || !std::isfinite(var)) fail(ErrorKind::Input, "truncated normal: variance must be positive");
  if (iv.unbounded()) return {mean, var};
  const double sd = std::sqrt(var);
  const double lo = (iv.lower - mean) / sd;
  const double hi = (iv.upper - mean) / sd;
  // Upper-tail differences keep precision when the whole window is in the right tail.
  const double mass = lo > 0.0 ? normal_cdf(-lo) - normal_cdf(-hi) : normal_cdf(hi) - normal_cdf(lo);
  if (!(mass > kWindowMassFloor)) fail(ErrorKind::Degenerate, "empty selection window");
  const double pdf_lo = std::isinf(lo) ? 0.0 : normal_pdf(lo);
  const double pdf_hi = std::isinf(hi) ? 0.0 : normal_pdf(hi);
  const double zpdf_lo = std::isinf(lo) ? 0.0 : lo * pdf_lo;
  const double zpdf_hi = std::isinf(hi) ? 0.0 : hi * pdf_hi;
  const double shift = (pdf_lo - pdf_hi) / mass;
  double v = var * (1.0 + (zpdf_lo - zpdf_hi) / mass - shift * shift);
  if (!(v > 0.0)) fail(ErrorKind::Degenerate, "selection window too narrow for the closed-form variance");
  v = std::min(v, var);
  return {mean + sd * shift, v};
}

// Covariance of the other labels in the population selected by
// iv.lower <= s <= iv.upper: Sigma_xx - B_xs B'_xs (sigma_ss - var(s | window)).
inline LabeledCov selected_cov(const LabeledCov& c, const std::string& s, const Interval& iv) {
  if (c.is_selected()) fail(ErrorKind::Input, "covariance already describes a selected population");
  const std::size_t si = c.index(s);
  Labels rest;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (i != si) {
      rest.push_back(c.labels()[i]);
      idx.push_back(i);
    }
  const double sss = c.matrix()(si, si);
  const double deficit = sss - truncated_moments(0.0, sss, iv).var;
  Eigen::VectorXd b(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) b(i) = c.matrix()(idx[i], si) / sss;
  Eigen::MatrixXd out = detail::take(c.matrix(), idx, idx) - deficit * b * b.transpose();
  return LabeledCov(std::move(rest), 0.5 * (out + out.transpose()), Selection{s, iv});
}

// Eigen-split of a symmetric matrix into its dominant rank-one part and the rest.
struct RankOneReport {
  double dominant = 0.0;  // eigenvalue of largest magnitude
  double residual = 0.0;  // Frobenius norm of what is left after removing it
  Eigen::VectorXd direction;
};

inline RankOneReport rank_one_split(const Eigen::MatrixXd& delta) {
  RankOneReport r;
  if (delta.size() == 0) return r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (delta + delta.transpose()));
  const auto& ev = es.eigenvalues();
  Eigen::Index k = 0;
  ev.cwiseAbs().maxCoeff(&k);
  r.dominant = ev(k);
  r.direction = es.eigenvectors().col(k);
  double rest = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != k) rest += ev(i) * ev(i);
  r.residual = std::sqrt(rest);
  return r;
}

// Selection adds a rank-one positive semidefinite term to the concentration
// matrix: inv(Sigma_xx.s*) - inv(Sigma_xx). The report's residual is zero
// and its dominant eigenvalue nonnegative when that holds.
inline RankOneReport concentration_form_check(const LabeledCov& c, const std::string& s, const Interval& iv) {
  const LabeledCov sel = selected_cov(c, s, iv);
  const Eigen::MatrixXd full = detail::take(c.matrix(), c.indices(sel.labels()), c.indices(sel.labels()));
  const Eigen::MatrixXd delta = detail::spd_inverse(sel.matrix(), "singular selected covariance") -
                                detail::spd_inverse(full, "singular covariance");
  return rank_one_split(delta);
}

}  // namespace teid
