#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "teid/gaussian.hpp"
#include "teid/graph.hpp"
#include "teid/identification.hpp"
#include "teid/models.hpp"
#include "teid/random.hpp"
#include "teid/sem.hpp"

// Round-trip self tests against exact implied covariances.
namespace teid::oracle {

struct SuiteConfig {
  std::uint64_t seed = 1;
  std::size_t count = 200;
  std::size_t max_vertices = 8;
};

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;

  bool passed() const { return failures == 0 && cases > 0; }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"t1", "t3", "pipeline", "dsep"};
  return names;
}

namespace detail {

inline void record(SuiteResult& r, double error) {
  ++r.cases;
  if (!std::isfinite(error)) error = INFINITY;
  r.max_error = std::max(r.max_error, error);
  if (!(error < r.tolerance)) ++r.failures;
}

inline double partial_correlation(const LabeledCov& c, const std::string& a, const std::string& b,
                                  const Labels& given) {
  const auto cc = conditional_cov(c, {a, b}, given);
  return cc(a, b) / std::sqrt(cc(a, a) * cc(b, b));
}

}  // namespace detail

// Latent-confounder ratio on the marginal over observed variables.
inline SuiteResult latent_round_trip(const SuiteConfig& cfg) {
  SuiteResult r{"t1", 0, 0, 0.0, 1e-9, ""};
  const Dag g = models::latent_confounder();
  const Roles roles{"X", "Y", "Z", "W", {}, "U"};
  for (std::size_t k = 0; k < cfg.count; ++k) {
    const LinearSem m = random_sem(g, split_seed(cfg.seed, k));
    const auto c = marginal_cov(implied_cov(m), {"U"});
    detail::record(r, std::abs(estimate_latent_ratio(c, roles) - true_total_effect(m, "X", "Y")));
  }
  r.detail = "random SEMs on the latent-confounder model";
  return r;
}

// Selection ratio over three windows; also checks the windows agree.
inline SuiteResult selection_round_trip(const SuiteConfig& cfg) {
  SuiteResult r{"t3", 0, 0, 0.0, 1e-9, ""};
  const Dag g = models::selection_collider();
  const Roles roles{"X", "Y", "Z", "W", {}, "S"};
  const Interval windows[] = {Interval(0, kInf), Interval(-1, 1), Interval(-0.5, 2.0)};
  for (std::size_t k = 0; k < cfg.count; ++k) {
    const LinearSem m = random_sem(g, split_seed(cfg.seed, k));
    const auto full = implied_cov(m);
    const double tau = true_total_effect(m, "X", "Y");
    double lo = INFINITY, hi = -INFINITY, err = 0.0;
    for (const auto& iv : windows) {
      const double e = estimate_selection_ratio(selected_cov(full, "S", iv), roles);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
      err = std::max(err, std::abs(e - tau));
    }
    detail::record(r, std::max(err, hi - lo));
  }
  r.detail = "random SEMs on the selection model, windows (0,inf) (-1,1) (-0.5,2)";
  return r;
}

// Combined pipeline on the latent-plus-selection model and two-factor
// recovery on the bridged two-factor model.
inline SuiteResult pipeline_round_trip(const SuiteConfig& cfg) {
  SuiteResult r{"pipeline", 0, 0, 0.0, 1e-6, ""};
  const Dag g = models::latent_and_selection();
  const Dag two = models::two_factor(true);
  const Labels two_obs = two.names(VertexKind::Observed);
  const std::vector<ZeroPattern> stages{latent_stage_pattern(two, two_obs, "U1", {}),
                                        latent_stage_pattern(two, two_obs, "U2", {"U1"})};
  for (std::size_t k = 0; k < cfg.count; ++k) {
    const LinearSem m = random_sem(g, split_seed(cfg.seed, 2 * k));
    const auto sel = marginal_cov(selected_cov(implied_cov(m), "S", Interval(0, kInf)), {"U"});
    double err = INFINITY;
    try {
      const auto cert = run_combined_pipeline(g, sel, "X", "Y");
      if (cert.estimate) err = std::abs(*cert.estimate - true_total_effect(m, "X", "Y"));
    } catch (const Error&) {
    }
    detail::record(r, err);

    const auto full = implied_cov(random_sem(two, split_seed(cfg.seed, 2 * k + 1)));
    double gap = INFINITY;
    try {
      const auto rec = recover_multi_factor(marginal_cov(full, {"U1", "U2"}), stages);
      gap = (rec.matrix() - conditional_cov(full, two_obs, {"U1", "U2"}).matrix()).cwiseAbs().maxCoeff();
    } catch (const Error&) {
    }
    detail::record(r, gap);
  }
  r.detail = "combined pipeline estimates and two-factor recoveries";
  return r;
}

// d-separation against zero partial correlations of a random SEM, for all
// ordered pairs and conditioning sets of size <= 3. A d-connected pair whose
// partial correlation vanishes is a coefficient coincidence: the SEM is
// redrawn (at most 5 times) before the disagreement counts.
inline SuiteResult dsep_agreement(const SuiteConfig& cfg) {
  SuiteResult r{"dsep", 0, 0, 0.0, 0.5, ""};
  const double threshold = 1e-8;
  const std::size_t max_v = std::max<std::size_t>(2, cfg.max_vertices);
  std::size_t queries = 0, redraws = 0;
  for (std::size_t k = 0; k < cfg.count; ++k) {
    Rng rng(split_seed(cfg.seed, k));
    const std::size_t n = 2 + rng.below(max_v - 1);
    const Dag g = models::random_dag(rng.bits(), n, rng.uniform(0.2, 0.6));
    std::vector<LabeledCov> covs{implied_cov(random_sem(g, rng.bits()))};
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        Labels pool;
        for (std::size_t v = 0; v < n; ++v)
          if (v != a && v != b) pool.push_back(g.name(v));
        for (const auto& given : teid::detail::subsets_up_to(pool, 3)) {
          const bool sep = d_separated(g, {g.name(a)}, {g.name(b)}, NameSet(given.begin(), given.end()));
          bool agree = false;
          for (std::size_t attempt = 0; attempt < 6; ++attempt) {
            if (attempt == covs.size()) {
              covs.push_back(implied_cov(random_sem(g, rng.bits())));
              ++redraws;
            }
            const bool zero = std::abs(detail::partial_correlation(covs[attempt], g.name(a), g.name(b), given)) <
                              threshold;
            if (zero == sep) {
              agree = true;
              break;
            }
            if (sep) break;  // a nonzero correlation across a separator is never a coincidence
          }
          ++queries;
          detail::record(r, agree ? 0.0 : 1.0);
        }
      }
  }
  r.detail = std::to_string(cfg.count) + " random DAGs, " + std::to_string(queries) + " queries, " +
             std::to_string(redraws) + " coefficient redraws";
  return r;
}

inline SuiteResult run_suite(const std::string& name, const SuiteConfig& cfg) {
  if (name == "t1") return latent_round_trip(cfg);
  if (name == "t3") return selection_round_trip(cfg);
  if (name == "pipeline") return pipeline_round_trip(cfg);
  if (name == "dsep") return dsep_agreement(cfg);
  fail(ErrorKind::Input, "unknown oracle suite '" + name + "'");
}

}  // namespace teid::oracle
