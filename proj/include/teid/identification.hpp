#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "teid/error.hpp"
#include "teid/gaussian.hpp"
#include "teid/graph.hpp"

namespace teid {

struct Tolerances {
  // |denominator| below this times the squared largest conditional variance
  // of x, z, w is treated as zero by the ratio estimators.
  double denominator = 1e-10;
  // Allowed |omega_i omega_j - target_ij| / sqrt(sigma_ii sigma_jj) on the
  // redundant zero constraints of a single-factor solve.
  double consistency = 1e-6;
};

// Role assignment for the ratio criteria. `aux` is the latent confounder
// (latent criterion) or the selection variable (selection criterion).
struct Roles {
  std::string x, y, z, w;
  Labels t;
  std::string aux;

  auto key() const { return std::tie(z, w, t, aux); }
};

enum class Criterion { LatentConfounder, SelectionBias, CombinedPipeline, BackDoor };

inline std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::LatentConfounder:
      return "latent_confounder";
    case Criterion::SelectionBias:
      return "selection_bias";
    case Criterion::CombinedPipeline:
      return "combined_pipeline";
    case Criterion::BackDoor:
      return "back_door";
  }
  return "?";
}

// One graphical (or numerical) requirement and its verdict. `separator` is
// the conditioning set the claim is about; `witness` is an open trail when
// one exists (it refutes a separation claim or proves a connection claim).
struct Check {
  std::string id;
  std::string statement;
  bool passed = false;
  Labels separator;
  std::vector<std::string> witness;
  std::string note;
};

struct Certificate {
  Criterion criterion = Criterion::LatentConfounder;
  Roles roles;
  Labels adjustment;
  Labels stages;
  std::vector<Check> checks;
  std::optional<double> estimate;

  bool passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

namespace detail {

inline std::string set_text(const Labels& names) {
  std::string out = "{";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out + "}";
}

inline NameSet to_set(const Labels& l) { return NameSet(l.begin(), l.end()); }

inline Labels sorted(Labels l) {
  std::sort(l.begin(), l.end());
  return l;
}

inline Check separation_check(const Dag& g, std::string id, const Labels& a, const Labels& b, const Labels& given,
                              bool want_separated) {
  Check c;
  c.id = std::move(id);
  c.separator = sorted(given);
  c.statement = set_text(c.separator) + (want_separated ? " d-separates " : " does not d-separate ") + set_text(a) +
                " from " + set_text(b);
  auto trail = open_trail(g, to_set(a), to_set(b), to_set(given));
  c.passed = want_separated ? !trail.has_value() : trail.has_value();
  if (trail) c.witness = std::move(*trail);
  return c;
}

inline Check nondescendant_check(const Dag& g, const std::string& x, const std::string& y) {
  Check c;
  c.id = "x_nondescendant_of_y";
  c.statement = x + " is not a descendant of " + y;
  c.passed = relatives(g, y, Relation::Descendants).count(x) == 0;
  return c;
}

inline Check back_door_check(const Dag& g, const std::string& x, const std::string& y, const Labels& z) {
  Check c;
  c.id = "back_door";
  c.separator = sorted(z);
  c.statement = set_text(c.separator) + " satisfies the back-door criterion relative to (" + x + ", " + y + ")";
  c.passed = back_door_admissible(g, x, y, to_set(z));
  if (!c.passed) {
    const auto desc = relatives(g, x, Relation::Descendants);
    for (const auto& v : c.separator)
      if (desc.count(v)) {
        c.note = v + " is a descendant of " + x;
        return c;
      }
    if (auto trail = open_trail(g.without_edges_from(g.index(x)), {x}, {y}, to_set(z))) c.witness = *trail;
  }
  return c;
}

inline void validate_roles(const Dag& g, const Roles& r, VertexKind aux_kind) {
  Labels all{r.x, r.y, r.z, r.w};
  all.insert(all.end(), r.t.begin(), r.t.end());
  for (const auto& v : all) {
    if (!g.contains(v)) fail(ErrorKind::Input, "role vertex '" + v + "' is not in the graph");
    if (g.kind(v) != VertexKind::Observed) fail(ErrorKind::Input, "role vertex '" + v + "' must be observed");
  }
  if (!g.contains(r.aux)) fail(ErrorKind::Input, "auxiliary vertex '" + r.aux + "' is not in the graph");
  if (g.kind(r.aux) != aux_kind)
    fail(ErrorKind::Input, "auxiliary vertex '" + r.aux + "' must be " + std::string(to_string(aux_kind)));
  Labels sorted_all = sorted(all);
  if (std::adjacent_find(sorted_all.begin(), sorted_all.end()) != sorted_all.end())
    fail(ErrorKind::Input, "role vertices must be distinct");
}

}  // namespace detail

// Latent-confounder criterion for (x, y) with an unobserved aux = U:
//   {x, U} + T separates y from z;  {U} + T separates {x, z} from w;
//   {x} + T does not separate z from w;  x is not a descendant of y;
//   {U} + T is back-door admissible for (x, y).
inline Certificate check_latent_criterion(const Dag& g, const Roles& r) {
  detail::validate_roles(g, r, VertexKind::Latent);
  Certificate cert;
  cert.criterion = Criterion::LatentConfounder;
  cert.roles = r;
  const Labels xu_t = detail::concat({r.x, r.aux}, r.t);
  const Labels u_t = detail::concat({r.aux}, r.t);
  const Labels x_t = detail::concat({r.x}, r.t);
  cert.checks.push_back(detail::separation_check(g, "y_z_separated", {r.y}, {r.z}, xu_t, true));
  cert.checks.push_back(detail::separation_check(g, "xz_w_separated", {r.x, r.z}, {r.w}, u_t, true));
  cert.checks.push_back(detail::separation_check(g, "z_w_connected", {r.z}, {r.w}, x_t, false));
  cert.checks.push_back(detail::nondescendant_check(g, r.x, r.y));
  cert.checks.push_back(detail::back_door_check(g, r.x, r.y, u_t));
  return cert;
}

// Selection criterion for (x, y) with selection variable aux = S:
//   {x} + T separates y from z;  T separates {x, z} from w;
//   {x} + T does not separate S from z;  T does not separate S from w;
//   x is not a descendant of y;  T is back-door admissible for (x, y).
inline Certificate check_selection_criterion(const Dag& g, const Roles& r) {
  detail::validate_roles(g, r, VertexKind::Selection);
  Certificate cert;
  cert.criterion = Criterion::SelectionBias;
  cert.roles = r;
  const Labels x_t = detail::concat({r.x}, r.t);
  cert.checks.push_back(detail::separation_check(g, "y_z_separated", {r.y}, {r.z}, x_t, true));
  cert.checks.push_back(detail::separation_check(g, "xz_w_separated", {r.x, r.z}, {r.w}, r.t, true));
  cert.checks.push_back(detail::separation_check(g, "s_z_connected", {r.aux}, {r.z}, x_t, false));
  cert.checks.push_back(detail::separation_check(g, "s_w_connected", {r.aux}, {r.w}, r.t, false));
  cert.checks.push_back(detail::nondescendant_check(g, r.x, r.y));
  cert.checks.push_back(detail::back_door_check(g, r.x, r.y, r.t));
  return cert;
}

// Both criteria estimate the effect with the same ratio of conditional
// covariances given T:
//   (s_xw s_yz - s_zw s_xy) / (s_xw s_xz - s_zw s_xx).
struct RatioTerms {
  double numerator = 0.0;
  double denominator = 0.0;
  double threshold = 0.0;  // |denominator| must exceed this
  double value = 0.0;
};

namespace detail {

inline RatioTerms ratio_terms(const LabeledCov& c, const Roles& r, const Tolerances& tol, std::string_view failure) {
  const Labels keep{r.x, r.y, r.z, r.w};
  Labels sorted_keep = sorted(keep);
  if (std::adjacent_find(sorted_keep.begin(), sorted_keep.end()) != sorted_keep.end())
    fail(ErrorKind::Input, "x, y, z and w must be distinct");
  const Eigen::MatrixXd s = schur(c.matrix(), c.indices(keep), c.indices(r.t));
  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2), sxw = s(0, 3);
  const double syz = s(1, 2), szw = s(2, 3);
  const double biggest = std::max({s(0, 0), s(2, 2), s(3, 3)});
  RatioTerms out;
  out.numerator = sxw * syz - szw * sxy;
  out.denominator = sxw * sxz - szw * sxx;
  out.threshold = tol.denominator * biggest * biggest;
  if (!(std::abs(out.denominator) > out.threshold)) fail(ErrorKind::Degenerate, std::string(failure));
  out.value = out.numerator / out.denominator;
  return out;
}

}  // namespace detail

inline RatioTerms latent_ratio_terms(const LabeledCov& c, const Roles& r, const Tolerances& tol = {}) {
  if (c.is_selected()) fail(ErrorKind::Input, "latent-confounder estimator expects a full-population covariance");
  return detail::ratio_terms(c, r, tol,
                             "latent-confounder denominator degenerate (z/w separation conditions violated "
                             "empirically)");
}

inline double estimate_latent_ratio(const LabeledCov& c, const Roles& r, const Tolerances& tol = {}) {
  return latent_ratio_terms(c, r, tol).value;
}

// T is conditioned out of the selected covariance by a Schur complement; the
// result keeps the rank-one selection term along Sigma_xs.t that the ratio
// cancels.
inline RatioTerms selection_ratio_terms(const LabeledCov& c, const Roles& r, const Tolerances& tol = {}) {
  if (!c.is_selected()) fail(ErrorKind::Input, "selection estimator expects a selected-population covariance");
  return detail::ratio_terms(c, r, tol,
                             "selection denominator degenerate (selection-connection conditions violated "
                             "empirically)");
}

inline double estimate_selection_ratio(const LabeledCov& c, const Roles& r, const Tolerances& tol = {}) {
  return selection_ratio_terms(c, r, tol).value;
}

// ---------------------------------------------------------------------------
// Single-factor decomposition from structural zeros

// Subtract: c = residual + w w' (a latent factor inflates c).
// Add: residual = c + w w' (undoes the deflation caused by selection).
enum class FactorSign { Subtract, Add };

struct FactorSolution {
  LabeledCov residual;
  Labels support;           // variables carrying the loading, pattern order
  Eigen::VectorXd loading;  // aligned with support
  // Components of the zero graph; the loading's sign is fixed per component.
  std::vector<std::vector<std::size_t>> components;
  double max_inconsistency = 0.0;
};

// Solves for the rank-one term whose removal (or addition) zeroes every
// absent pair of `p`. Variables of `c` outside the pattern get no loading.
// In each component of the zero graph an odd cycle fixes omega_i^2 as an
// alternating product of the cycle's targets; a spanning tree propagates
// omega_j = target_ij / omega_i; remaining zeros are verified.
inline FactorSolution single_factor_solve(const LabeledCov& c, const ZeroPattern& p, FactorSign sign,
                                          const Tolerances& tol = {}) {
  for (const auto& v : p.variables()) c.index(v);
  if (!odd_cycle_identifiable(p)) fail(ErrorKind::NotIdentifiable, "pattern not identifiable");

  const std::vector<std::size_t> idx = c.indices(p.variables());
  const Eigen::MatrixXd& m = c.matrix();
  const double direction = sign == FactorSign::Subtract ? 1.0 : -1.0;
  auto target = [&](std::size_t i, std::size_t j) { return direction * m(idx[i], idx[j]); };

  const UndirectedGraph zeros = p.complement_graph();
  FactorSolution out;
  out.support = p.variables();
  out.loading = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
  out.components = zeros.components();

  for (const auto& comp : out.components) {
    const auto cycle = find_odd_cycle(zeros, comp.front());
    const std::size_t len = cycle->size();
    double square = 1.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double t = target((*cycle)[k], (*cycle)[(k + 1) % len]);
      if (k % 2 == 0) {
        square *= t;
      } else {
        if (t == 0.0) fail(ErrorKind::Misspecified, "covariance incompatible with one-factor structure (zero loading)");
        square /= t;
      }
    }
    if (!(square > 0.0) || !std::isfinite(square))
      fail(ErrorKind::Misspecified, "covariance incompatible with one-factor structure");

    const std::size_t root = cycle->front();
    std::vector<char> seen(p.size(), 0);
    std::vector<std::size_t> queue{root};
    seen[root] = 1;
    out.loading(root) = std::sqrt(square);
    for (std::size_t k = 0; k < queue.size(); ++k) {
      const std::size_t v = queue[k];
      for (std::size_t w : zeros.neighbors(v)) {
        if (seen[w]) continue;
        if (out.loading(v) == 0.0) fail(ErrorKind::Misspecified, "covariance incompatible with one-factor structure");
        out.loading(w) = target(v, w) / out.loading(v);
        seen[w] = 1;
        queue.push_back(w);
      }
    }
    if (out.loading(comp.front()) < 0.0)
      for (std::size_t v : comp) out.loading(v) = -out.loading(v);
  }

  for (auto [i, j] : p.absent_pairs()) {
    const double scale = std::sqrt(m(idx[i], idx[i]) * m(idx[j], idx[j]));
    const double gap = std::abs(out.loading(i) * out.loading(j) - target(i, j)) / scale;
    out.max_inconsistency = std::max(out.max_inconsistency, gap);
    if (gap > tol.consistency)
      fail(ErrorKind::Misspecified, "inconsistent redundant zero between " + p.variables()[i] + " and " +
                                        p.variables()[j] + " (model misspecification)");
  }

  Eigen::MatrixXd residual = m;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      residual(idx[i], idx[j]) -= direction * out.loading(i) * out.loading(j);
  for (auto [i, j] : p.absent_pairs()) residual(idx[i], idx[j]) = residual(idx[j], idx[i]) = 0.0;

  std::optional<Selection> population = sign == FactorSign::Subtract ? c.selection() : std::nullopt;
  try {
    out.residual = LabeledCov(c.labels(), residual, population);
  } catch (const Error& e) {
    fail(ErrorKind::Misspecified, std::string("single-factor residual invalid: ") + e.what());
  }
  return out;
}

// Conditions out latent factors one at a time, in stage order, each with a
// subtractive single-factor solve on the current residual.
inline LabeledCov recover_multi_factor(const LabeledCov& c, const std::vector<ZeroPattern>& stages,
                                       const Tolerances& tol = {}) {
  LabeledCov current = c;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    try {
      current = single_factor_solve(current, stages[k], FactorSign::Subtract, tol).residual;
    } catch (const Error& e) {
      fail(e.kind(), "stage " + std::to_string(k) + ": " + e.what());
    }
  }
  return current;
}

// beta_{yx.adjust}; only arithmetic, validity is the checker's business.
inline double adjusted_effect(const LabeledCov& c, const std::string& x, const std::string& y, const Labels& adjust) {
  return regression_coef(c, y, x, adjust);
}

// Candidates with a nonzero loading on `factor`: those d-connected to it given `given`.
inline Labels factor_support(const Dag& g, const Labels& candidates, const std::string& factor, const Labels& given) {
  const NameSet cond = detail::to_set(given);
  Labels out;
  for (const auto& v : candidates)
    if (!d_separated(g, {v}, {factor}, cond)) out.push_back(v);
  return out;
}

// Zero pattern of the residual once a latent factor is conditioned out.
inline ZeroPattern latent_stage_pattern(const Dag& g, const Labels& candidates, const std::string& latent,
                                        const Labels& given) {
  Labels cond = detail::concat(given, {latent});
  return zero_pattern(g, factor_support(g, candidates, latent, given), detail::to_set(cond), PatternMode::Covariance);
}

// Zero pattern of the full-population covariance over the variables that
// selection on `selection` deflates.
inline ZeroPattern selection_stage_pattern(const Dag& g, const Labels& candidates, const std::string& selection,
                                           const Labels& given) {
  return zero_pattern(g, factor_support(g, candidates, selection, given), detail::to_set(given),
                      PatternMode::Covariance);
}

namespace detail {

// Subsets of `pool` with size <= max_size, by size then lexicographic index order.
inline std::vector<Labels> subsets_up_to(const Labels& pool, std::size_t max_size) {
  std::vector<Labels> out{{}};
  const std::size_t n = pool.size();
  for (std::size_t k = 1; k <= std::min(max_size, n); ++k) {
    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      Labels s;
      for (std::size_t i : pick) s.push_back(pool[i]);
      out.push_back(std::move(s));
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;
}

inline bool certificate_less(const Certificate& a, const Certificate& b) {
  return std::tie(a.criterion, a.roles.z, a.roles.w, a.roles.t, a.roles.aux, a.adjustment) <
         std::tie(b.criterion, b.roles.z, b.roles.w, b.roles.t, b.roles.aux, b.adjustment);
}

}  // namespace detail

// Every role assignment (|T| <= max_t) under which the latent or selection
// criterion holds, plus minimal observed back-door sets when the graph has no
// selection vertex. An empty result is not a proof of non-identifiability.
inline std::vector<Certificate> search_certificates(const Dag& g, const std::string& x, const std::string& y,
                                                    std::size_t max_t = 3) {
  for (const auto& v : {x, y})
    if (g.kind(v) != VertexKind::Observed) fail(ErrorKind::Input, "'" + v + "' must be observed");
  if (x == y) fail(ErrorKind::Input, "treatment and response coincide");

  Labels others;
  for (const auto& v : g.names(VertexKind::Observed))
    if (v != x && v != y) others.push_back(v);
  const NameSet x_desc = relatives(g, x, Relation::Descendants);

  std::vector<Certificate> found;
  auto sweep = [&](const Labels& auxes, auto&& check) {
    for (const auto& aux : auxes)
      for (const auto& z : others)
        for (const auto& w : others) {
          if (w == z || x_desc.count(w)) continue;
          Labels pool;
          for (const auto& v : others)
            if (v != z && v != w) pool.push_back(v);
          for (auto& t : detail::subsets_up_to(pool, max_t)) {
            Certificate cert = check(g, Roles{x, y, z, w, std::move(t), aux});
            if (cert.passed()) found.push_back(std::move(cert));
          }
        }
  };
  sweep(g.names(VertexKind::Latent), check_latent_criterion);
  const Labels selections = g.names(VertexKind::Selection);
  sweep(selections, check_selection_criterion);

  if (selections.empty()) {
    std::vector<Labels> admissible;
    for (auto& z : detail::subsets_up_to(others, max_t)) {
      const bool has_admissible_subset = std::any_of(admissible.begin(), admissible.end(), [&](const Labels& a) {
        return std::includes(z.begin(), z.end(), a.begin(), a.end(), [&](const auto& l, const auto& r) {
          return g.index(l) < g.index(r);
        });
      });
      if (has_admissible_subset) continue;
      Check check = detail::back_door_check(g, x, y, z);
      if (!check.passed) continue;
      admissible.push_back(z);
      Certificate cert;
      cert.criterion = Criterion::BackDoor;
      cert.roles.x = x;
      cert.roles.y = y;
      cert.adjustment = detail::sorted(z);
      cert.checks.push_back(std::move(check));
      found.push_back(std::move(cert));
    }
  }
  std::stable_sort(found.begin(), found.end(), detail::certificate_less);
  return found;
}

// Combined latent-variable and selection pipeline:
//   1. find observed Z with Z + U + T back-door admissible for (x, y);
//   2. undo selection on Sigma_xx.t by an additive single-factor solve;
//   3. condition out each latent by subtractive single-factor solves;
// then regress y on x given Z in the recovered Sigma_xx.tu.
inline Certificate run_combined_pipeline(const Dag& g, const LabeledCov& c, const std::string& x, const std::string& y,
                                         const Labels& t = {}, const Tolerances& tol = {}) {
  for (const auto& v : c.labels())
    if (!g.contains(v) || g.kind(v) != VertexKind::Observed)
      fail(ErrorKind::Input, "covariance label '" + v + "' is not an observed vertex of the graph");
  for (const auto& v : detail::concat({x, y}, t)) c.index(v);
  if (x == y) fail(ErrorKind::Input, "treatment and response coincide");

  Certificate cert;
  cert.criterion = Criterion::CombinedPipeline;
  cert.roles.x = x;
  cert.roles.y = y;
  cert.roles.t = t;
  if (c.is_selected()) cert.roles.aux = c.selection()->label;

  Labels vars;
  for (const auto& v : c.labels())
    if (std::find(t.begin(), t.end(), v) == t.end()) vars.push_back(v);
  const Labels latents = g.names(VertexKind::Latent);

  // Step 1
  Labels pool;
  for (const auto& v : vars)
    if (v != x && v != y) pool.push_back(v);
  std::optional<Labels> adjustment;
  for (auto& z : detail::subsets_up_to(pool, 3)) {
    if (back_door_admissible(g, x, y, detail::to_set(detail::concat(detail::concat(z, latents), t)))) {
      adjustment = std::move(z);
      break;
    }
  }
  {
    Check step;
    step.id = "step1_back_door";
    step.statement = "an observed set plus every latent and T is back-door admissible for (" + x + ", " + y + ")";
    step.passed = adjustment.has_value();
    if (adjustment) {
      step.separator = detail::sorted(detail::concat(detail::concat(*adjustment, latents), t));
      cert.adjustment = *adjustment;
    }
    cert.checks.push_back(std::move(step));
    if (!adjustment) return cert;
  }

  // Step 2
  LabeledCov working = conditional_cov(c, vars, t);
  {
    Check step;
    step.id = "step2_deselect";
    step.statement = "selection deflation of Sigma_xx.t is identifiable from its structural zeros";
    if (!c.is_selected()) {
      step.passed = true;
      step.note = "full population; nothing to undo";
    } else {
      const std::string& s = c.selection()->label;
      if (!g.contains(s) || g.kind(s) != VertexKind::Selection)
        fail(ErrorKind::Input, "selection label '" + s + "' is not a selection vertex of the graph");
      const ZeroPattern pattern = selection_stage_pattern(g, vars, s, t);
      if (pattern.size() == 0) {
        step.passed = true;
        step.note = "no variable is d-connected to the selection vertex";
        working = LabeledCov(working.labels(), working.matrix());
      } else if (!odd_cycle_identifiable(pattern)) {
        step.note = "zero pattern has a component without an odd cycle";
      } else {
        try {
          working = single_factor_solve(working, pattern, FactorSign::Add, tol).residual;
          step.passed = true;
        } catch (const Error& e) {
          step.note = e.what();
        }
      }
    }
    cert.checks.push_back(std::move(step));
    if (!cert.checks.back().passed) return cert;
  }

  // Step 3
  {
    Check step;
    step.id = "step3_latent_factors";
    step.statement = "each latent is an identifiable single factor given T and the latents before it";
    std::vector<std::size_t> order(latents.size());
    std::iota(order.begin(), order.end(), 0);
    std::optional<std::vector<ZeroPattern>> stages;
    do {
      std::vector<ZeroPattern> patterns;
      Labels given = t;
      bool ok = true;
      for (std::size_t k : order) {
        ZeroPattern pattern = latent_stage_pattern(g, vars, latents[k], given);
        given.push_back(latents[k]);
        if (pattern.size() == 0) continue;
        if (!odd_cycle_identifiable(pattern)) {
          ok = false;
          break;
        }
        patterns.push_back(std::move(pattern));
      }
      if (ok) {
        stages = std::move(patterns);
        for (std::size_t k : order) cert.stages.push_back(latents[k]);
        break;
      }
    } while (std::next_permutation(order.begin(), order.end()));
    if (!stages) {
      step.note = "no latent order makes every stage identifiable";
    } else {
      try {
        working = recover_multi_factor(working, *stages, tol);
        step.passed = true;
      } catch (const Error& e) {
        step.note = e.what();
      }
    }
    cert.checks.push_back(std::move(step));
    if (!cert.checks.back().passed) return cert;
  }

  cert.estimate = adjusted_effect(working, x, y, *adjustment);
  return cert;
}

}  // namespace teid
