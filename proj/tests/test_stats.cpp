#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "rankfair/stats.hpp"

using namespace rankfair;
using Catch::Approx;

namespace {

nlohmann::json load_reference() {
  std::ifstream in(std::string(RANKFAIR_TEST_DATA_DIR) + "/stats_reference.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

double t_pdf(double u, double df) {
  const double c = std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) /
                   std::sqrt(df * std::numbers::pi);
  return c * std::pow(1.0 + u * u / df, -0.5 * (df + 1.0));
}

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb, double whole,
                        double eps, int depth, double df) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = t_pdf(lm, df);
  const double frm = t_pdf(rm, df);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(a, m, fa, flm, fm, left, eps / 2.0, depth - 1, df) +
         adaptive_simpson(m, b, fm, frm, fb, right, eps / 2.0, depth - 1, df);
}

// Independent CDF oracle: 0.5 + integral of the density from 0 to t.
double t_cdf_quadrature(double t, double df) {
  const double fa = t_pdf(0.0, df);
  const double fb = t_pdf(t, df);
  const double fm = t_pdf(0.5 * t, df);
  const double whole = simpson(0.0, t, fa, fm, fb);
  return 0.5 + adaptive_simpson(0.0, t, fa, fm, fb, whole, 1e-12, 40, df);
}

}  // namespace

TEST_CASE("t CDF fixed points") {
  REQUIRE(t_cdf(0.0, 1.0) == 0.5);
  REQUIRE(t_cdf(0.0, 5.0) == 0.5);
  REQUIRE(t_cdf(0.0, 50.0) == 0.5);
  // df=1 is the Cauchy distribution: CDF(1) = 3/4 analytically.
  REQUIRE(t_cdf(1.0, 1.0) == Approx(0.75).margin(1e-12));
  REQUIRE(t_cdf(2.5, 10.0) == Approx(0.984276577882).margin(1e-9));
  REQUIRE(t_cdf(2.5, 10.0) == Approx(t_cdf_quadrature(2.5, 10.0)).margin(1e-8));
}

TEST_CASE("t CDF domain checks") {
  REQUIRE_THROWS_AS(t_cdf(1.0, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(t_cdf(1.0, -2.0), std::domain_error);
  REQUIRE_THROWS_AS(t_cdf(std::numeric_limits<double>::infinity(), 5.0), std::domain_error);
  REQUIRE_THROWS_AS(t_cdf(std::nan(""), 5.0), std::domain_error);
}

TEST_CASE("t CDF matches the frozen reference grid") {
  const auto ref = load_reference();
  REQUIRE(ref.at("t_cdf").size() == 144);
  for (const auto& row : ref.at("t_cdf")) {
    const double t = row.at("t").get<double>();
    const double df = row.at("df").get<double>();
    const double expected = row.at("cdf").get<double>();
    REQUIRE(t_cdf(t, df) == Approx(expected).margin(1e-9));
  }
}

TEST_CASE("t CDF is monotone and symmetric") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const double df = 0.5 + static_cast<double>(rng() % 2000) / 10.0;
    const double t = -6.0 + 12.0 * static_cast<double>(rng() % 10000) / 10000.0;
    const double step = 0.01 + static_cast<double>(rng() % 100) / 100.0;
    REQUIRE(t_cdf(t, df) < t_cdf(t + step, df));
    REQUIRE(t_cdf(t, df) + t_cdf(-t, df) == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("star bands") {
  REQUIRE(stars(0.0009) == "***");
  REQUIRE(stars(0.001) == "**");
  REQUIRE(stars(0.009) == "**");
  REQUIRE(stars(0.01) == "*");
  REQUIRE(stars(0.049) == "*");
  REQUIRE(stars(0.05) == "");
  REQUIRE(stars(0.5) == "");
}

TEST_CASE("one-sample t on known inputs") {
  const std::vector<double> xs{0.2, 0.4, 0.6, 0.8};
  const auto r = one_sample_t(xs);
  REQUIRE(r.kind == TestKind::OneSample);
  REQUIRE(r.t_stat == Approx(3.872983346207).margin(1e-9));
  REQUIRE(r.df == 3.0);
  REQUIRE(r.p_value == Approx(0.030466291662).margin(1e-9));
  REQUIRE(r.rejected);
  REQUIRE(r.significance == "*");
  REQUIRE_FALSE(r.effect_size_d.has_value());

  const std::vector<double> balanced{0.5, -0.5};
  const auto z = one_sample_t(balanced);
  REQUIRE(z.t_stat == 0.0);
  REQUIRE(z.p_value == 1.0);
  REQUIRE_FALSE(z.rejected);
}

TEST_CASE("one-sample t error cases") {
  const std::vector<double> one{1.0};
  REQUIRE_THROWS_AS(one_sample_t(one), InsufficientSampleError);
  const std::vector<double> flat{2.0, 2.0, 2.0};
  REQUIRE_THROWS_AS(one_sample_t(flat), DegenerateSampleError);
  const std::vector<double> ok{1.0, 2.0};
  REQUIRE_THROWS_AS(one_sample_t(ok, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(one_sample_t(ok, 1.0), std::domain_error);
}

TEST_CASE("Welch t on known inputs") {
  const std::vector<double> xs{1, 2, 3, 4};
  const std::vector<double> ys{2, 3, 4, 5};
  const auto r = welch_t(xs, ys);
  REQUIRE(r.kind == TestKind::WelchIndependent);
  REQUIRE(r.t_stat == Approx(-1.095445115010).margin(1e-9));
  REQUIRE(r.df == Approx(6.0).margin(1e-9));
  REQUIRE(r.p_value == Approx(0.315333596201).margin(1e-9));
  REQUIRE(r.effect_size_d.has_value());
  REQUIRE_FALSE(r.rejected);

  const auto same = welch_t(xs, xs);
  REQUIRE(same.t_stat == 0.0);
  REQUIRE(same.p_value == 1.0);
}

TEST_CASE("Welch t error cases") {
  const std::vector<double> xs{1, 2, 3};
  const std::vector<double> one{1.0};
  const std::vector<double> flat_a{2, 2, 2};
  const std::vector<double> flat_b{5, 5};
  REQUIRE_THROWS_AS(welch_t(xs, one), InsufficientSampleError);
  REQUIRE_THROWS_AS(welch_t(flat_a, flat_b), DegenerateSampleError);
  // one degenerate side is fine
  REQUIRE_NOTHROW(welch_t(xs, flat_b));
}

TEST_CASE("Welch reduces to the classic test for equal variances and sizes") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 10;
    std::vector<double> xs(n);
    for (auto& x : xs) x = static_cast<double>(rng() % 1000) / 100.0;
    auto ys = xs;
    std::shuffle(ys.begin(), ys.end(), rng);
    const double shift = static_cast<double>(rng() % 100) / 10.0;
    for (auto& y : ys) y += shift;
    const auto moments_x = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    if (std::fabs(moments_x(xs) - moments_x(ys)) < 1e-12) continue;
    auto r = welch_t(xs, ys);
    if (!std::isfinite(r.df)) continue;  // both samples constant never happens here
    REQUIRE(r.df == Approx(static_cast<double>(2 * n - 2)).margin(1e-9));
  }
}

TEST_CASE("two-sample tests are location and scale invariant") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(4 + rng() % 8), ys(4 + rng() % 8);
    for (auto& x : xs) x = static_cast<double>(rng() % 1000) / 37.0;
    for (auto& y : ys) y = static_cast<double>(rng() % 1000) / 53.0 + 1.5;
    const double c = -3.25;
    const double k = 2.5;
    auto shifted_x = xs, shifted_y = ys;
    for (auto& v : shifted_x) v = v * k + c;
    for (auto& v : shifted_y) v = v * k + c;
    const auto a = welch_t(xs, ys);
    const auto b = welch_t(shifted_x, shifted_y);
    REQUIRE(b.t_stat == Approx(a.t_stat).margin(1e-9));
    REQUIRE(b.df == Approx(a.df).margin(1e-9));
    REQUIRE(b.p_value == Approx(a.p_value).margin(1e-9));
    REQUIRE(*b.effect_size_d == Approx(*a.effect_size_d).margin(1e-9));
  }
}

TEST_CASE("paired t on known inputs") {
  const std::vector<double> xs{1, 2, 3};
  const std::vector<double> ys{1.1, 2.3, 2.9};
  const auto r = paired_t(xs, ys);
  REQUIRE(r.kind == TestKind::Paired);
  REQUIRE(r.t_stat == Approx(-0.866025403784).margin(1e-9));
  REQUIRE(r.df == 2.0);
  REQUIRE(r.p_value == Approx(0.477767032133).margin(1e-9));
}

TEST_CASE("paired t error cases") {
  const std::vector<double> xs{1, 2, 3};
  const std::vector<double> short_ys{1, 2};
  REQUIRE_THROWS_AS(paired_t(xs, short_ys), std::invalid_argument);
  const std::vector<double> shifted{2, 3, 4};  // constant difference
  REQUIRE_THROWS_AS(paired_t(xs, shifted), DegenerateSampleError);
  const std::vector<double> a{1.0};
  const std::vector<double> b{2.0};
  REQUIRE_THROWS_AS(paired_t(a, b), InsufficientSampleError);
}

TEST_CASE("paired t equals a one-sample t on the differences") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 10;
    std::vector<double> xs(n), ys(n), diffs(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = static_cast<double>(rng() % 1000) / 41.0;
      ys[i] = static_cast<double>(rng() % 1000) / 59.0;
      diffs[i] = xs[i] - ys[i];
    }
    HypothesisTestResult a, b;
    try {
      a = paired_t(xs, ys);
      b = one_sample_t(diffs);
    } catch (const StatError&) {
      continue;
    }
    REQUIRE(a.t_stat == b.t_stat);
    REQUIRE(a.df == b.df);
    REQUIRE(a.p_value == b.p_value);
  }
}

TEST_CASE("Cohen's d with a pooled standard deviation") {
  const std::vector<double> xs{0.0, 1.0};
  const std::vector<double> ys{1.0, 2.0};
  REQUIRE(cohens_d_pooled(xs, ys) == Approx(-std::sqrt(2.0)).margin(1e-12));
  REQUIRE(cohens_d_pooled(ys, xs) == Approx(std::sqrt(2.0)).margin(1e-12));
  REQUIRE(cohens_d_pooled(xs, xs) == 0.0);
  const std::vector<double> flat{3.0, 3.0};
  REQUIRE_THROWS_AS(cohens_d_pooled(flat, flat), DegenerateSampleError);
  const std::vector<double> one{1.0};
  REQUIRE_THROWS_AS(cohens_d_pooled(one, xs), InsufficientSampleError);
}

TEST_CASE("reported p equals twice the upper tail") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> xs(3 + rng() % 20);
    for (auto& x : xs) x = static_cast<double>(rng() % 2000) / 250.0 - 2.0;
    HypothesisTestResult r;
    try {
      r = one_sample_t(xs);
    } catch (const StatError&) {
      continue;
    }
    REQUIRE(r.p_value == Approx(2.0 * (1.0 - t_cdf(std::fabs(r.t_stat), r.df))).margin(1e-12));
    REQUIRE(r.rejected == (r.p_value <= r.alpha_used));
    REQUIRE(r.significance == stars(r.p_value));
  }
}

TEST_CASE("Bonferroni correction") {
  const std::vector<double> ps{0.001, 0.04};
  const auto r = bonferroni(ps, 0.05);
  REQUIRE(r.m == 2);
  REQUIRE(r.threshold == 0.025);
  REQUIRE(r.rejected == std::vector<bool>{true, false});

  const auto r24 = bonferroni(ps, 0.05, 24);
  REQUIRE(r24.m == 24);
  REQUIRE(r24.threshold == Approx(0.05 / 24.0).margin(1e-15));
  REQUIRE(std::fabs(r24.threshold - 0.00208333333333333333) < 1e-15);
  REQUIRE(r24.rejected == std::vector<bool>{true, false});

  const std::vector<double> none;
  REQUIRE_THROWS_AS(bonferroni(none, 0.05), std::invalid_argument);
  REQUIRE_THROWS_AS(bonferroni(ps, 0.0), std::domain_error);
  const std::vector<double> bad{1.5};
  REQUIRE_THROWS_AS(bonferroni(bad, 0.05), std::domain_error);
}

TEST_CASE("tests match the frozen reference oracle") {
  const auto ref = load_reference();
  REQUIRE(ref.at("one_sample").size() == 100);
  for (const auto& row : ref.at("one_sample")) {
    const auto xs = row.at("xs").get<std::vector<double>>();
    const auto r = one_sample_t(xs);
    REQUIRE(r.t_stat == Approx(row.at("t").get<double>()).margin(1e-8));
    REQUIRE(r.df == Approx(row.at("df").get<double>()).margin(1e-9));
    REQUIRE(r.p_value == Approx(row.at("p").get<double>()).margin(1e-6));
  }
  REQUIRE(ref.at("welch").size() == 100);
  for (const auto& row : ref.at("welch")) {
    const auto xs = row.at("xs").get<std::vector<double>>();
    const auto ys = row.at("ys").get<std::vector<double>>();
    const auto r = welch_t(xs, ys);
    REQUIRE(r.t_stat == Approx(row.at("t").get<double>()).margin(1e-8));
    const double df_ref = row.at("df").get<double>();
    REQUIRE(r.df == Approx(df_ref).margin(1e-9 * std::max(1.0, df_ref)));
    REQUIRE(r.p_value == Approx(row.at("p").get<double>()).margin(1e-6));
  }
  REQUIRE(ref.at("paired").size() == 100);
  for (const auto& row : ref.at("paired")) {
    const auto xs = row.at("xs").get<std::vector<double>>();
    const auto ys = row.at("ys").get<std::vector<double>>();
    const auto r = paired_t(xs, ys);
    REQUIRE(r.t_stat == Approx(row.at("t").get<double>()).margin(1e-8));
    REQUIRE(r.df == Approx(row.at("df").get<double>()).margin(1e-9));
    REQUIRE(r.p_value == Approx(row.at("p").get<double>()).margin(1e-6));
  }
}
