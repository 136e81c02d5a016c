#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "teid/gaussian.hpp"
#include "teid/identification.hpp"
#include "teid/random.hpp"

namespace teid::okuno {

// Car-body painting process correlations, exactly as printed to three decimals.
// X1 dilution ratio, X2 viscosity, X5 atomizing air pressure, X6 pattern
// width, X8 painting temperature, X9 ambient temperature, Y transfer efficiency.
inline LabeledCov correlation_matrix() {
  Eigen::MatrixXd m(7, 7);
  // clang-format off
  m <<  1.000, -0.736,  0.028, -0.042,  0.216,  0.283, -0.091,
       -0.736,  1.000, -0.063,  0.095, -0.684, -0.635,  0.326,
        0.028, -0.063,  1.000,  0.291,  0.076,  0.099, -0.277,
       -0.042,  0.095,  0.291,  1.000, -0.114, -0.149, -0.250,
        0.216, -0.684,  0.076, -0.114,  1.000,  0.761, -0.493,
        0.283, -0.635,  0.099, -0.149,  0.761,  1.000, -0.475,
       -0.091,  0.326, -0.277, -0.250, -0.493, -0.475,  1.000;
  // clang-format on
  return LabeledCov({"X1", "X2", "X5", "X6", "X8", "X9", "Y"}, m);
}

struct Row {
  Roles roles;
  double published;
};

// Treatments X2 and X6 with their published covariate choices and estimates.
inline std::vector<Row> published_rows() {
  return {
      {Roles{"X2", "Y", "X1", "X9", {"X8"}, "U"}, -0.116},
      {Roles{"X6", "Y", "X5", "X9", {}, "U"}, -0.465},
  };
}

// Spread of an estimate when every printed correlation is moved uniformly
// within its rounding half-width (0.0005); draws that break positive
// definiteness or the denominator are skipped.
struct RoundingSpread {
  double sd = 0.0;
  double p95 = 0.0;  // 95th percentile of |perturbed - printed|
  std::size_t draws = 0;
};

inline RoundingSpread rounding_spread(const Roles& roles, std::size_t draws = 4000, std::uint64_t seed = 1) {
  const LabeledCov base = correlation_matrix();
  const double centre = estimate_latent_ratio(base, roles);
  Rng rng(seed);
  std::vector<double> dev;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    Eigen::MatrixXd m = base.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = i + 1; j < m.cols(); ++j) m(i, j) = m(j, i) = m(i, j) + rng.uniform(-5e-4, 5e-4);
    try {
      const double d = estimate_latent_ratio(LabeledCov(base.labels(), m), roles) - centre;
      dev.push_back(std::abs(d));
      sum_sq += d * d;
    } catch (const Error&) {
    }
  }
  RoundingSpread out;
  out.draws = dev.size();
  if (dev.empty()) return out;
  out.sd = std::sqrt(sum_sq / static_cast<double>(dev.size()));
  const auto at = dev.begin() + static_cast<std::ptrdiff_t>(0.95 * static_cast<double>(dev.size() - 1));
  std::nth_element(dev.begin(), at, dev.end());
  out.p95 = *at;
  return out;
}

}  // namespace teid::okuno
