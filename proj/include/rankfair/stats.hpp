#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankfair/errors.hpp"

namespace rankfair {

enum class TestKind { OneSample, WelchIndependent, Paired };

constexpr std::string_view test_kind_token(TestKind kind) {
  switch (kind) {
    case TestKind::OneSample: return "one_sample";
    case TestKind::WelchIndependent: return "welch";
    case TestKind::Paired: return "paired";
  }
  return "";
}

// Significance bands in the usual star notation.
inline std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

namespace detail {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the regularized incomplete beta, evaluated with the
// modified Lentz scheme. Converges fast for x below the symmetry switch point.
inline double beta_cf(double a, double b, double x) {
  constexpr double tol = 1e-12;
  constexpr int max_iter = 300;
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= tol) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  // Evaluate the continued fraction on whichever side converges faster and
  // map back through I_x(a,b) = 1 - I_{1-x}(b,a).
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided tail mass of the t distribution: 2 * P(|T| >= |t|).
inline double two_sided_p(double t, double df) {
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct SampleMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;  // sample variance, n-1 denominator
};

inline SampleMoments moments(std::span<const double> xs) {
  SampleMoments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    ss += d * d;
  }
  m.var = ss / static_cast<double>(m.n - 1);
  return m;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("alpha must lie strictly between 0 and 1");
}

}  // namespace detail

// CDF of Student's t with df degrees of freedom (df may be fractional).
inline double t_cdf(double t, double df) {
  if (!std::isfinite(t) || !std::isfinite(df) || df <= 0.0)
    throw std::domain_error("t_cdf: t must be finite and df positive");
  const double tail = detail::incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? 1.0 - 0.5 * tail : 0.5 * tail;
}

struct HypothesisTestResult {
  TestKind kind = TestKind::OneSample;
  double t_stat = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  std::optional<double> effect_size_d;  // only for two-sample comparisons
  double alpha_used = 0.05;
  bool rejected = false;
  std::string significance;  // star band of p_value

  bool operator==(const HypothesisTestResult&) const = default;
};

namespace detail {

inline HypothesisTestResult finish_test(TestKind kind, double t, double df,
                                        std::optional<double> d, double alpha) {
  const double p = two_sided_p(t, df);
  return {kind, t, df, p, d, alpha, p <= alpha, stars(p)};
}

}  // namespace detail

// Pooled-standard-deviation standardized mean difference.
inline double cohens_d_pooled(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2)
    throw InsufficientSampleError("cohens_d_pooled: each sample needs at least 2 observations");
  const auto mx = detail::moments(xs);
  const auto my = detail::moments(ys);
  const double nx = static_cast<double>(mx.n);
  const double ny = static_cast<double>(my.n);
  const double pooled = ((nx - 1.0) * mx.var + (ny - 1.0) * my.var) / (nx + ny - 2.0);
  if (pooled <= 0.0)
    throw DegenerateSampleError("cohens_d_pooled: pooled variance is zero");
  return (mx.mean - my.mean) / std::sqrt(pooled);
}

// Two-sided test of mean == 0.
inline HypothesisTestResult one_sample_t(std::span<const double> xs, double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (xs.size() < 2)
    throw InsufficientSampleError("one_sample_t: needs at least 2 observations");
  const auto m = detail::moments(xs);
  if (m.var <= 0.0)
    throw DegenerateSampleError("one_sample_t: sample has zero variance");
  const double n = static_cast<double>(m.n);
  const double t = m.mean / std::sqrt(m.var / n);
  return detail::finish_test(TestKind::OneSample, t, n - 1.0, std::nullopt, alpha);
}

// Two-sided comparison of independent means without assuming equal variances;
// degrees of freedom follow the Welch-Satterthwaite approximation.
inline HypothesisTestResult welch_t(std::span<const double> xs, std::span<const double> ys,
                                    double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (xs.size() < 2 || ys.size() < 2)
    throw InsufficientSampleError("welch_t: each sample needs at least 2 observations");
  const auto mx = detail::moments(xs);
  const auto my = detail::moments(ys);
  if (mx.var <= 0.0 && my.var <= 0.0)
    throw DegenerateSampleError("welch_t: both samples have zero variance");
  const double nx = static_cast<double>(mx.n);
  const double ny = static_cast<double>(my.n);
  const double vx = mx.var / nx;
  const double vy = my.var / ny;
  const double se2 = vx + vy;
  const double t = (mx.mean - my.mean) / std::sqrt(se2);
  const double df = se2 * se2 / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
  return detail::finish_test(TestKind::WelchIndependent, t, df,
                             cohens_d_pooled(xs, ys), alpha);
}

// Two-sided test on per-pair differences (reduces to a one-sample test).
inline HypothesisTestResult paired_t(std::span<const double> xs, std::span<const double> ys,
                                     double alpha = 0.05) {
  detail::check_alpha(alpha);
  if (xs.size() != ys.size())
    throw std::invalid_argument("paired_t: samples differ in length");
  if (xs.size() < 2)
    throw InsufficientSampleError("paired_t: needs at least 2 pairs");
  std::vector<double> diffs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) diffs[i] = xs[i] - ys[i];
  const auto m = detail::moments(diffs);
  if (m.var <= 0.0)
    throw DegenerateSampleError("paired_t: differences have zero variance");
  const double n = static_cast<double>(m.n);
  const double t = m.mean / std::sqrt(m.var / n);
  return detail::finish_test(TestKind::Paired, t, n - 1.0, std::nullopt, alpha);
}

struct BonferroniResult {
  std::size_t m = 0;        // number of comparisons corrected for
  double alpha = 0.05;      // family-wise level
  double threshold = 0.0;   // alpha / m
  std::vector<bool> rejected;
};

// Family-wise correction: each test rejects iff p <= alpha / m. m defaults to
// the number of p-values handed in and may be overridden to match a larger
// planned family.
inline BonferroniResult bonferroni(std::span<const double> p_values, double alpha,
                                   std::optional<std::size_t> m_override = std::nullopt) {
  detail::check_alpha(alpha);
  if (p_values.empty())
    throw std::invalid_argument("bonferroni: no p-values given");
  const std::size_t m = m_override.value_or(p_values.size());
  if (m == 0) throw std::invalid_argument("bonferroni: m must be >= 1");
  BonferroniResult result{m, alpha, alpha / static_cast<double>(m), {}};
  result.rejected.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::domain_error("bonferroni: p-values must lie in [0, 1]");
    result.rejected.push_back(p <= result.threshold);
  }
  return result;
}

}  // namespace rankfair
