#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "teid/gaussian.hpp"
#include "teid/graph.hpp"
#include "teid/identification.hpp"
#include "teid/models.hpp"
#include "teid/okuno.hpp"
#include "teid/random.hpp"
#include "teid/sem.hpp"

using namespace teid;

namespace {

const Roles kLatentRoles{"X", "Y", "Z", "W", {}, "U"};
const Roles kSelectionRoles{"X", "Y", "Z", "W", {}, "S"};

const Check& find_check(const Certificate& c, const std::string& id) {
  for (const auto& ch : c.checks)
    if (ch.id == id) return ch;
  throw std::runtime_error("no check " + id);
}

std::vector<std::string> check_ids(const Certificate& c) {
  std::vector<std::string> out;
  for (const auto& ch : c.checks) out.push_back(ch.id);
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected an error");
}

LabeledCov scaled(const LabeledCov& c, const std::string& v, double k) {
  Eigen::MatrixXd m = c.matrix();
  const auto i = static_cast<Eigen::Index>(c.index(v));
  m.row(i) *= k;
  m.col(i) *= k;
  return LabeledCov(c.labels(), m, c.selection());
}

// Selection-free variant of the selection model in which W does not reach S.
Dag selection_without_w() {
  return Dag({{"Z", VertexKind::Observed},
              {"W", VertexKind::Observed},
              {"X", VertexKind::Observed},
              {"Y", VertexKind::Observed},
              {"S", VertexKind::Selection}},
             {{"Z", "X"}, {"X", "Y"}, {"Z", "S"}, {"Y", "S"}});
}

// Exact one-factor matrix D + w w' over the given labels.
LabeledCov one_factor(const Labels& labels, const Eigen::VectorXd& w, const Eigen::VectorXd& d) {
  Eigen::MatrixXd m = w * w.transpose();
  m.diagonal() += d;
  return LabeledCov(labels, m);
}

ZeroPattern all_absent(const Labels& vars) {
  std::vector<Edge> absent;
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j) absent.emplace_back(vars[i], vars[j]);
  return ZeroPattern(vars, absent, PatternMode::Covariance);
}

}  // namespace

// ----- latent-confounder criterion -----

TEST(LatentCriterion, ReferenceModelPasses) {
  const auto cert = check_latent_criterion(models::latent_confounder(), kLatentRoles);
  EXPECT_TRUE(cert.passed());
  EXPECT_EQ(check_ids(cert), (std::vector<std::string>{"y_z_separated", "xz_w_separated", "z_w_connected",
                                                       "x_nondescendant_of_y", "back_door"}));
  EXPECT_EQ(find_check(cert, "y_z_separated").separator, (Labels{"U", "X"}));
  EXPECT_FALSE(find_check(cert, "z_w_connected").witness.empty());
  EXPECT_FALSE(cert.estimate.has_value());
}

TEST(LatentCriterion, SwappedRolesFail) {
  const auto cert = check_latent_criterion(models::latent_confounder(), {"X", "Y", "W", "Z", {}, "U"});
  EXPECT_FALSE(cert.passed());
  const auto& c = find_check(cert, "y_z_separated");
  EXPECT_FALSE(c.passed);
  EXPECT_EQ(c.witness, (std::vector<std::string>{"Y", "W"}));
}

TEST(LatentCriterion, ConnectionFailureHasNoWitness) {
  // Without Z -> X the instrument is cut off from W given X.
  const Dag g({{"U", VertexKind::Latent}, {"Z"}, {"W"}, {"X"}, {"Y"}},
              {{"U", "X"}, {"U", "Y"}, {"U", "Z"}, {"X", "Y"}, {"W", "Y"}});
  const auto& c = find_check(check_latent_criterion(g, kLatentRoles), "z_w_connected");
  EXPECT_FALSE(c.passed);
  EXPECT_TRUE(c.witness.empty());
}

TEST(LatentCriterion, TypeGuards) {
  const Dag chain({{"X"}, {"Y"}}, {{"X", "Y"}});
  EXPECT_EQ(kind_of([&] { check_latent_criterion(chain, kLatentRoles); }), ErrorKind::Input);
  const Dag g = models::latent_confounder();
  EXPECT_EQ(kind_of([&] { check_latent_criterion(g, {"X", "Y", "Z", "W", {}, "Z"}); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { check_latent_criterion(g, {"X", "Y", "Z", "U", {}, "U"}); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { check_latent_criterion(g, {"X", "Y", "Z", "Z", {}, "U"}); }), ErrorKind::Input);
}

// ----- selection criterion -----

TEST(SelectionCriterion, ReferenceModelPasses) {
  const auto cert = check_selection_criterion(models::selection_collider(), kSelectionRoles);
  EXPECT_TRUE(cert.passed());
  EXPECT_EQ(cert.checks.size(), 6u);
}

TEST(SelectionCriterion, EdgeFromWToYKeepsSeparation) {
  // With T empty, Y and S are unconditioned colliders on every path from W
  // to {X, Z}; the extra edge changes neither the verdict nor the estimate.
  const Dag g = models::selection_collider(true);
  EXPECT_TRUE(check_selection_criterion(g, kSelectionRoles).passed());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const LinearSem m = random_sem(g, seed);
    const auto sel = selected_cov(implied_cov(m), "S", Interval(0, kInf));
    EXPECT_NEAR(estimate_selection_ratio(sel, kSelectionRoles), true_total_effect(m, "X", "Y"), 1e-9);
  }
}

TEST(SelectionCriterion, EdgeFromWToXBreaksSeparation) {
  const Dag g({{"Z"}, {"W"}, {"X"}, {"Y"}, {"S", VertexKind::Selection}},
              {{"Z", "X"}, {"X", "Y"}, {"Z", "S"}, {"Y", "S"}, {"W", "S"}, {"W", "X"}});
  const auto cert = check_selection_criterion(g, kSelectionRoles);
  EXPECT_FALSE(cert.passed());
  const auto& c = find_check(cert, "xz_w_separated");
  EXPECT_FALSE(c.passed);
  EXPECT_EQ(c.witness, (std::vector<std::string>{"X", "W"}));
  EXPECT_TRUE(find_check(cert, "y_z_separated").passed);
}

TEST(SelectionCriterion, AuxMustBeSelection) {
  EXPECT_EQ(kind_of([&] { check_selection_criterion(models::selection_collider(), {"X", "Y", "Z", "W", {}, "Y"}); }),
            ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { check_latent_criterion(models::selection_collider(), kSelectionRoles); }),
            ErrorKind::Input);
}

// ----- ratio estimators -----

TEST(LatentRatio, PublishedRowX6) {
  const auto rows = okuno::published_rows();
  const auto terms = latent_ratio_terms(okuno::correlation_matrix(), rows[1].roles);
  EXPECT_NEAR(terms.value, -0.4638, 0.0005);
  EXPECT_NEAR(terms.numerator, 0.066023, 1e-6);
  EXPECT_NEAR(terms.denominator, -0.142359, 1e-6);
}

TEST(LatentRatio, PublishedRowX2) {
  const auto rows = okuno::published_rows();
  const auto terms = latent_ratio_terms(okuno::correlation_matrix(), rows[0].roles);
  EXPECT_NEAR(terms.value, -0.105, 0.002);
  EXPECT_NEAR(terms.numerator, -0.000443, 1e-6);
  EXPECT_NEAR(terms.denominator, 0.00421, 1e-5);
  EXPECT_LE(std::abs(terms.value - rows[0].published), 0.02);
}

TEST(LatentRatio, RoundTripWithAndWithoutWToY) {
  for (bool w_to_y : {true, false}) {
    const Dag g = models::latent_confounder(w_to_y);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const LinearSem m = random_sem(g, seed);
      const auto c = marginal_cov(implied_cov(m), {"U"});
      EXPECT_NEAR(estimate_latent_ratio(c, kLatentRoles), true_total_effect(m, "X", "Y"), 1e-9);
    }
  }
}

TEST(LatentRatio, ConditioningSetT) {
  // T = {V} sits on the back-door path X <- V -> Y next to the latent.
  const Dag g({{"U", VertexKind::Latent}, {"V"}, {"Z"}, {"W"}, {"X"}, {"Y"}},
              {{"U", "Z"}, {"U", "W"}, {"U", "X"}, {"U", "Y"}, {"Z", "X"}, {"X", "Y"}, {"W", "Y"},
               {"V", "X"}, {"V", "Y"}, {"V", "W"}});
  const Roles r{"X", "Y", "Z", "W", {"V"}, "U"};
  EXPECT_TRUE(check_latent_criterion(g, r).passed());
  EXPECT_FALSE(check_latent_criterion(g, kLatentRoles).passed());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const LinearSem m = random_sem(g, seed);
    EXPECT_NEAR(estimate_latent_ratio(marginal_cov(implied_cov(m), {"U"}), r), true_total_effect(m, "X", "Y"), 1e-9);
  }
}

TEST(LatentRatio, ScaleEquivariance) {
  const LinearSem m = random_sem(models::latent_confounder(), 31);
  const auto c = marginal_cov(implied_cov(m), {"U"});
  const double base = estimate_latent_ratio(c, kLatentRoles);
  EXPECT_NEAR(estimate_latent_ratio(scaled(c, "Y", 3.0), kLatentRoles), 3.0 * base, 1e-12);
  EXPECT_NEAR(estimate_latent_ratio(scaled(c, "X", 3.0), kLatentRoles), base / 3.0, 1e-12);
  EXPECT_NEAR(estimate_latent_ratio(scaled(scaled(c, "Z", -2.0), "W", 0.5), kLatentRoles), base, 1e-12);
}

TEST(LatentRatio, InputChecks) {
  const auto c = marginal_cov(implied_cov(random_sem(models::latent_confounder(), 1)), {"U"});
  EXPECT_EQ(kind_of([&] { estimate_latent_ratio(c, {"X", "Y", "Z", "Z", {}, "U"}); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { estimate_latent_ratio(c, {"X", "Y", "Z", "Q", {}, "U"}); }), ErrorKind::Input);
  const auto sel = selected_cov(implied_cov(random_sem(models::selection_collider(), 1)), "S", Interval(0, kInf));
  EXPECT_EQ(kind_of([&] { estimate_latent_ratio(sel, kLatentRoles); }), ErrorKind::Input);
  EXPECT_EQ(kind_of([&] { estimate_selection_ratio(c, kSelectionRoles); }), ErrorKind::Input);
}

TEST(LatentRatio, DegenerateDenominator) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  m(0, 1) = m(1, 0) = 0.4;
  const LabeledCov c({"X", "Y", "Z", "W"}, m);
  EXPECT_EQ(kind_of([&] { estimate_latent_ratio(c, kLatentRoles); }), ErrorKind::Degenerate);
}

TEST(SelectionRatio, RoundTripAndWindowInvariance) {
  const Dag g = models::selection_collider();
  const std::vector<Interval> windows{Interval(0, kInf), Interval(-1, 1), Interval(-0.5, 2.0)};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const LinearSem m = random_sem(g, seed);
    const auto full = implied_cov(m);
    const double tau = true_total_effect(m, "X", "Y");
    std::vector<double> est;
    for (const auto& iv : windows) est.push_back(estimate_selection_ratio(selected_cov(full, "S", iv), kSelectionRoles));
    for (double e : est) EXPECT_NEAR(e, tau, 1e-9);
    EXPECT_NEAR(est[0], est[1], 1e-9);
    EXPECT_NEAR(est[0], est[2], 1e-9);
  }
}

TEST(SelectionRatio, IndependentWIsDegenerate) {
  const LinearSem m = random_sem(selection_without_w(), 4);
  const auto sel = selected_cov(implied_cov(m), "S", Interval(0, kInf));
  try {
    estimate_selection_ratio(sel, kSelectionRoles);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
    EXPECT_NE(std::string(e.what()).find("selection-connection"), std::string::npos);
  }
}

// ----- single-factor solver -----

TEST(SingleFactor, ThreeIndicators) {
  Eigen::VectorXd w(3), d(3);
  w << 0.6, 0.5, 0.8;
  d << 1.0, 0.7, 0.4;
  const Labels labels{"a", "b", "c"};
  const auto sol = single_factor_solve(one_factor(labels, w, d), all_absent(labels), FactorSign::Subtract);
  EXPECT_LT((sol.loading - w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((sol.residual.matrix() - Eigen::MatrixXd(d.asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);

  // Sign convention: the first entry of each component is positive.
  const auto flipped = single_factor_solve(one_factor(labels, -w, d), all_absent(labels), FactorSign::Subtract);
  EXPECT_LT((flipped.loading - w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SingleFactor, FourCycleIsNotIdentifiable) {
  const Labels v{"a", "b", "c", "d"};
  const ZeroPattern p(v, {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}}, PatternMode::Covariance);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.5);
  EXPECT_EQ(kind_of([&] { single_factor_solve(one_factor(v, w, Eigen::VectorXd::Ones(4)), p, FactorSign::Subtract); }),
            ErrorKind::NotIdentifiable);
}

TEST(SingleFactor, RedundantZeroInconsistency) {
  const Labels v{"a", "b", "c", "d"};
  Eigen::VectorXd w(4);
  w << 0.6, 0.5, 0.8, 0.7;
  auto c = one_factor(v, w, Eigen::VectorXd::Ones(4));
  Eigen::MatrixXd m = c.matrix();
  m(2, 3) = m(3, 2) = m(2, 3) + 0.05;
  EXPECT_EQ(kind_of([&] { single_factor_solve(LabeledCov(v, m), all_absent(v), FactorSign::Subtract); }),
            ErrorKind::Misspecified);
  // The same perturbation within tolerance passes and reports its size.
  m(2, 3) = m(3, 2) = c.matrix()(2, 3) + 1e-9;
  const auto sol = single_factor_solve(LabeledCov(v, m), all_absent(v), FactorSign::Subtract);
  EXPECT_GT(sol.max_inconsistency, 0.0);
  EXPECT_LT(sol.max_inconsistency, 1e-6);
}

TEST(SingleFactor, NegativeSquareIsMisspecified) {
  // Covariances with a negative triangle product cannot come from one factor.
  Eigen::MatrixXd m(3, 3);
  m << 1, 0.3, 0.3, 0.3, 1, -0.3, 0.3, -0.3, 1;
  const Labels v{"a", "b", "c"};
  EXPECT_EQ(kind_of([&] { single_factor_solve(LabeledCov(v, m), all_absent(v), FactorSign::Subtract); }),
            ErrorKind::Misspecified);
}

TEST(SingleFactor, LatentModelRecoversConditionalCov) {
  const Dag g = models::latent_and_selection();
  const Labels obs = g.names(VertexKind::Observed);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto full = implied_cov(random_sem(g, seed));
    const auto c = marginal_cov(full, {"U", "S"});
    const ZeroPattern p = latent_stage_pattern(g, obs, "U", {});
    const auto sol = single_factor_solve(c, p, FactorSign::Subtract);
    const auto oracle = conditional_cov(full, obs, {"U"});
    EXPECT_LT((sol.residual.matrix() - oracle.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    // Re-adding the rank-one term reproduces the input.
    Eigen::MatrixXd back = sol.residual.matrix();
    const auto idx = c.indices(sol.support);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) back(idx[i], idx[j]) += sol.loading(i) * sol.loading(j);
    EXPECT_LT((back - c.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SingleFactor, AddSignUndoesSelection) {
  const Dag g = models::latent_and_selection();
  const Labels obs = g.names(VertexKind::Observed);
  const ZeroPattern p = selection_stage_pattern(g, obs, "S", {});
  ASSERT_TRUE(odd_cycle_identifiable(p));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto full = implied_cov(random_sem(g, seed));
    const auto sel = marginal_cov(selected_cov(full, "S", Interval(-0.5, 2.0)), {"U"});
    const auto sol = single_factor_solve(sel, p, FactorSign::Add);
    EXPECT_FALSE(sol.residual.is_selected());
    EXPECT_LT((sol.residual.matrix() - marginal_cov(full, {"U", "S"}).matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SingleFactor, TwoComponents) {
  // Zeros only inside each block of three: the complement splits into two
  // triangles, and each component's loading is normalized on its own.
  const Labels v{"a1", "a2", "a3", "b1", "b2", "b3"};
  const ZeroPattern p(v, {{"a1", "a2"}, {"a1", "a3"}, {"a2", "a3"}, {"b1", "b2"}, {"b1", "b3"}, {"b2", "b3"}},
                      PatternMode::Covariance);
  Eigen::VectorXd w(6);
  w << 0.6, 0.5, 0.8, 0.7, 0.4, 0.9;
  const auto sol = single_factor_solve(one_factor(v, w, Eigen::VectorXd::Ones(6)), p, FactorSign::Subtract);
  EXPECT_EQ(sol.components.size(), 2u);
  EXPECT_LT((sol.loading - w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((sol.residual.matrix() - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

// ----- multi-factor recovery -----

TEST(MultiFactor, ZeroAndOneStage) {
  const Labels v{"a", "b", "c"};
  Eigen::VectorXd w(3);
  w << 0.6, 0.5, 0.8;
  const auto c = one_factor(v, w, Eigen::VectorXd::Ones(3));
  EXPECT_EQ(recover_multi_factor(c, {}).matrix(), c.matrix());
  EXPECT_EQ(recover_multi_factor(c, {all_absent(v)}).matrix(),
            single_factor_solve(c, all_absent(v), FactorSign::Subtract).residual.matrix());
}

TEST(MultiFactor, TwoFactorsBothOrders) {
  const Dag g = models::two_factor(false);
  const Labels obs = g.names(VertexKind::Observed);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto full = implied_cov(random_sem(g, seed));
    const auto c = marginal_cov(full, {"U1", "U2"});
    const auto oracle = conditional_cov(full, obs, {"U1", "U2"});
    const auto first = recover_multi_factor(
        c, {latent_stage_pattern(g, obs, "U1", {}), latent_stage_pattern(g, obs, "U2", {"U1"})});
    const auto second = recover_multi_factor(
        c, {latent_stage_pattern(g, obs, "U2", {}), latent_stage_pattern(g, obs, "U1", {"U2"})});
    EXPECT_LT((first.matrix() - oracle.matrix()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((first.matrix() - second.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(MultiFactor, BridgedFactors) {
  const Dag g = models::two_factor(true);
  const Labels obs = g.names(VertexKind::Observed);
  const auto full = implied_cov(random_sem(g, 8));
  const auto c = marginal_cov(full, {"U1", "U2"});
  const auto recovered = recover_multi_factor(
      c, {latent_stage_pattern(g, obs, "U1", {}), latent_stage_pattern(g, obs, "U2", {"U1"})});
  EXPECT_LT((recovered.matrix() - conditional_cov(full, obs, {"U1", "U2"}).matrix()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MultiFactor, ErrorsCarryStageIndex) {
  const Labels v{"a", "b", "c", "d"};
  const ZeroPattern square(v, {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}}, PatternMode::Covariance);
  Eigen::VectorXd w(4);
  w << 0.6, 0.5, 0.8, 0.7;
  const auto c = one_factor(v, w, Eigen::VectorXd::Ones(4));
  try {
    recover_multi_factor(c, {all_absent(v), square});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotIdentifiable);
    EXPECT_EQ(std::string(e.what()).rfind("stage 1: ", 0), 0u);
  }
}

// ----- adjustment -----

TEST(AdjustedEffect, Examples) {
  const Dag chain({{"X"}, {"Y"}}, {{"X", "Y"}});
  const LinearSem m(chain, {{{"X", "Y"}, 0.7}});
  EXPECT_NEAR(adjusted_effect(implied_cov(m), "X", "Y", {}), 0.7, 1e-15);

  const Dag conf({{"U"}, {"X"}, {"Y"}}, {{"U", "X"}, {"U", "Y"}, {"X", "Y"}});
  const LinearSem mc = random_sem(conf, 3);
  const auto c = implied_cov(mc);
  EXPECT_NEAR(adjusted_effect(c, "X", "Y", {"U"}), true_total_effect(mc, "X", "Y"), 1e-12);
  EXPECT_GT(std::abs(adjusted_effect(c, "X", "Y", {}) - true_total_effect(mc, "X", "Y")), 1e-3);
}

TEST(AdjustedEffect, BackDoorSetsRecoverTheTotalEffect) {
  std::size_t cases = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t n = 4 + rng.below(5);
    const Dag g = models::random_dag(rng.bits(), n, 0.4);
    const LinearSem m = random_sem(g, rng.bits());
    const auto c = implied_cov(m);
    const std::string x = g.name(rng.below(n));
    std::string y = g.name(rng.below(n));
    if (x == y || relatives(g, y, Relation::Descendants).count(x)) continue;
    Labels z;
    for (const auto& v : g.names(VertexKind::Observed))
      if (v != x && v != y && rng.coin(0.4)) z.push_back(v);
    if (!back_door_admissible(g, x, y, NameSet(z.begin(), z.end()))) continue;
    EXPECT_NEAR(adjusted_effect(c, x, y, z), true_total_effect(m, x, y), 1e-9);
    ++cases;
  }
  EXPECT_GT(cases, 40u);
}

// ----- certificate search -----

TEST(Search, LatentReferenceModel) {
  const Dag g = models::latent_confounder();
  const auto found = search_certificates(g, "X", "Y");
  const bool has = std::any_of(found.begin(), found.end(), [](const Certificate& c) {
    return c.criterion == Criterion::LatentConfounder && c.roles.z == "Z" && c.roles.w == "W" && c.roles.t.empty() &&
           c.roles.aux == "U";
  });
  EXPECT_TRUE(has);
  for (const auto& c : found) {
    EXPECT_TRUE(c.passed());
    if (c.criterion == Criterion::LatentConfounder) {
      EXPECT_TRUE(check_latent_criterion(g, c.roles).passed());
    }
    EXPECT_EQ(relatives(g, "X", Relation::Descendants).count(c.roles.w), 0u);
  }
  const auto again = search_certificates(g, "X", "Y");
  ASSERT_EQ(again.size(), found.size());
  for (std::size_t i = 0; i < found.size(); ++i) {
    EXPECT_EQ(again[i].roles.key(), found[i].roles.key());
    EXPECT_EQ(again[i].adjustment, found[i].adjustment);
  }
}

TEST(Search, ChainGivesOnlyBackDoor) {
  const auto found = search_certificates(Dag({{"X"}, {"Y"}}, {{"X", "Y"}}), "X", "Y");
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].criterion, Criterion::BackDoor);
  EXPECT_TRUE(found[0].adjustment.empty());
}

TEST(Search, BackDoorSetsAreMinimal) {
  const Dag g({{"A"}, {"B"}, {"X"}, {"Y"}}, {{"A", "X"}, {"A", "Y"}, {"B", "Y"}, {"X", "Y"}});
  const auto found = search_certificates(g, "X", "Y");
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].adjustment, (Labels{"A"}));
}

TEST(Search, SelectionReferenceModel) {
  const Dag g = models::selection_collider();
  const auto found = search_certificates(g, "X", "Y");
  const bool has = std::any_of(found.begin(), found.end(), [](const Certificate& c) {
    return c.criterion == Criterion::SelectionBias && c.roles.z == "Z" && c.roles.w == "W" && c.roles.t.empty() &&
           c.roles.aux == "S";
  });
  EXPECT_TRUE(has);
  for (const auto& c : found) {
    EXPECT_NE(c.criterion, Criterion::BackDoor);
    EXPECT_TRUE(check_selection_criterion(g, c.roles).passed());
  }
}

TEST(Search, ConfoundedPairAloneHasNothing) {
  const Dag g({{"U", VertexKind::Latent}, {"X"}, {"Y"}}, {{"U", "X"}, {"U", "Y"}, {"X", "Y"}});
  EXPECT_TRUE(search_certificates(g, "X", "Y").empty());
  EXPECT_EQ(kind_of([&] { search_certificates(g, "X", "U"); }), ErrorKind::Input);
}

// ----- combined pipeline -----

TEST(Pipeline, LatentAndSelectionRecoversEffect) {
  const Dag g = models::latent_and_selection();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const LinearSem m = random_sem(g, seed);
    const auto sel = marginal_cov(selected_cov(implied_cov(m), "S", Interval(0, kInf)), {"U"});
    const auto cert = run_combined_pipeline(g, sel, "X", "Y");
    ASSERT_TRUE(cert.passed()) << seed;
    EXPECT_EQ(check_ids(cert),
              (std::vector<std::string>{"step1_back_door", "step2_deselect", "step3_latent_factors"}));
    EXPECT_EQ(cert.roles.aux, "S");
    EXPECT_EQ(cert.stages, (Labels{"U"}));
    ASSERT_TRUE(cert.estimate.has_value());
    EXPECT_NEAR(*cert.estimate, true_total_effect(m, "X", "Y"), 1e-6);
  }
}

TEST(Pipeline, FullPopulationSkipsDeselection) {
  const Dag g = models::latent_and_selection();
  const LinearSem m = random_sem(g, 2);
  const auto cert = run_combined_pipeline(g, marginal_cov(implied_cov(m), {"U", "S"}), "X", "Y");
  ASSERT_TRUE(cert.passed());
  EXPECT_FALSE(find_check(cert, "step2_deselect").note.empty());
  EXPECT_NEAR(*cert.estimate, true_total_effect(m, "X", "Y"), 1e-6);
}

TEST(Pipeline, BipartiteSelectionPatternFailsAtStepTwo) {
  const Dag g({{"U", VertexKind::Latent}, {"A1"}, {"A2"}, {"A3"}, {"B1"}, {"X"}, {"Y"}, {"S", VertexKind::Selection}},
              {{"U", "A1"}, {"U", "A2"}, {"U", "A3"}, {"U", "X"}, {"U", "Y"}, {"X", "Y"}, {"Y", "S"}, {"B1", "S"}});
  const auto sel = marginal_cov(selected_cov(implied_cov(random_sem(g, 1)), "S", Interval(0, kInf)), {"U"});
  const auto cert = run_combined_pipeline(g, sel, "X", "Y");
  EXPECT_FALSE(cert.passed());
  EXPECT_FALSE(cert.estimate.has_value());
  EXPECT_TRUE(find_check(cert, "step1_back_door").passed);
  EXPECT_FALSE(cert.checks.back().passed);
  EXPECT_EQ(cert.checks.back().id, "step2_deselect");
}

TEST(Pipeline, NoAdjustmentFailsAtStepOne) {
  // The effect of M on X: the back-door path M <- X ends at the response,
  // so no adjustment set blocks it.
  const Dag g({{"V", VertexKind::Selection}, {"X"}, {"Y"}, {"M"}}, {{"X", "M"}, {"M", "Y"}, {"X", "V"}, {"Y", "V"}});
  const LinearSem m = random_sem(g, 3);
  const auto cert = run_combined_pipeline(g, marginal_cov(implied_cov(m), {"V"}), "M", "X");
  EXPECT_FALSE(cert.passed());
  EXPECT_EQ(cert.checks.size(), 1u);
}

TEST(Pipeline, LabelsMustBeObservedVertices) {
  const Dag g = models::latent_and_selection();
  const auto full = implied_cov(random_sem(g, 2));
  EXPECT_EQ(kind_of([&] { run_combined_pipeline(g, marginal_cov(full, {"S"}), "X", "Y"); }), ErrorKind::Input);
}
