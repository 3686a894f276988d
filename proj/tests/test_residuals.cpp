#include "oracles.hpp"

#include "discres/error.hpp"
#include "discres/normal.hpp"
#include "discres/residuals.hpp"
#include "discres/simlab.hpp"

#include <doctest.h>

#include <cmath>

using namespace discres;

namespace {

// Intercept-only model with a fixed coefficient on a dataset of given outcomes.
struct Fixture
{
  FittedModel fitted;
  Dataset data;
};

Fixture
fixed_model(FamilyKind kind, Link link, double beta0, std::vector<int> y, double size = NAN)
{
  Fixture f;
  f.fitted.spec.family = Family{ kind, link, size };
  f.fitted.spec.fixed_size = kind == FamilyKind::NegativeBinomial;
  f.fitted.spec.count_columns = { 0 };
  f.fitted.coefficients.count = Eigen::VectorXd::Constant(1, beta0);
  f.fitted.coefficients.size = size;
  f.data.design = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
  f.data.outcomes = Eigen::Map<Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size()));
  return f;
}

} // namespace

TEST_SUITE("residuals")
{
  TEST_CASE("cox_snell_ecdf examples")
  {
    Eigen::VectorXd v(1);
    v << 0.4;
    const std::vector<double> grid = { 0.3, 0.5 };
    const auto u = cox_snell_ecdf(v, grid);
    CHECK(u(0) == 0.0);
    CHECK(u(1) == 1.0);
  }

  TEST_CASE("cox_snell_ecdf is a brute-force count")
  {
    Rng rng(8);
    Eigen::VectorXd v(200);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v(i) = std::floor(uniform01(rng) * 20.0) / 20.0;
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i)
      grid.push_back(i / 100.0);
    grid.push_back(1e-300);
    const auto u = cox_snell_ecdf(v, grid);
    const std::vector<double> values(v.data(), v.data() + v.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
      CHECK(u(static_cast<Eigen::Index>(j)) == oracle::ecdf(values, grid[j]));
    CHECK(u(100) == 1.0);
  }

  TEST_CASE("pearson examples")
  {
    auto p = fixed_model(FamilyKind::Poisson, Link::Log, 0.0, { 3, 1 });
    const auto r = pearson(p.fitted, p.data);
    CHECK(r.values(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r.values(1) == 0.0);
    auto nb = fixed_model(FamilyKind::NegativeBinomial, Link::Log, std::log(2.0), { 4 }, 2.0);
    CHECK(pearson(nb.fitted, nb.data).values(0) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("deviance examples")
  {
    auto p = fixed_model(FamilyKind::Poisson, Link::Log, 0.0, { 0, 1 });
    const auto r = deviance(p.fitted, p.data);
    CHECK(r.values(0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
    CHECK(std::abs(r.values(1)) <= 1e-7);
    auto b = fixed_model(FamilyKind::Bernoulli, Link::Logit, 0.0, { 1 });
    CHECK(deviance(b.fitted, b.data).values(0) ==
          doctest::Approx(std::sqrt(2.0 * std::log(2.0))).epsilon(1e-14));

    auto z = fixed_model(FamilyKind::Poisson, Link::Log, 0.0, { 1 });
    z.fitted.spec.family.kind = FamilyKind::ZIP;
    z.fitted.spec.zero_columns = { 0 };
    z.fitted.coefficients.zero = Eigen::VectorXd::Constant(1, -1.0);
    CHECK_THROWS_AS(deviance(z.fitted, z.data), UnsupportedFamilyError);
  }

  TEST_CASE("pearson and deviance agree in sign")
  {
    const auto& sc = find_scenario("nb-overdispersion");
    Rng rng(31);
    const auto data = generate(sc, 400, rng);
    for (const auto& cand : sc.fits) {
      const auto f = fit(cand.spec, data);
      const auto rp = pearson(f, data);
      const auto rd = deviance(f, data);
      for (Eigen::Index i = 0; i < rp.values.size(); ++i)
        CHECK((rp.values(i) > 0) == (rd.values(i) > 0));
    }
  }

  TEST_CASE("randomized quantile examples")
  {
    CHECK(randomized_quantile_value(0.0, 1.0, 0.5) == 0.0);
    CHECK(std::isfinite(randomized_quantile_value(0.0, 1e-300, 0.999999)));
    CHECK(std::isfinite(randomized_quantile_value(1.0 - 1e-300, 1.0, 0.0)));
  }

  TEST_CASE("randomized quantile residuals are exactly uniform after the normal cdf")
  {
    auto b = fixed_model(FamilyKind::Bernoulli, Link::Logit, std::log(0.3 / 0.7), { 0 });
    Rng rng(123);
    const int draws = 1000000;
    const int bins = 20;
    std::vector<double> counts(bins, 0.0);
    const auto dist = Distribution::bernoulli(0.3);
    for (int i = 0; i < draws; ++i) {
      const long y = dist.sample(rng);
      b.data.outcomes(0) = static_cast<int>(y);
      const double u = normal_cdf(randomized_quantile(b.fitted, b.data, rng).values(0));
      counts[std::min(bins - 1, static_cast<int>(u * bins))] += 1.0;
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(draws) / bins;
    for (const double c : counts)
      chi2 += (c - expected) * (c - expected) / expected;
    // 99th percentile of chi-square with 19 degrees of freedom.
    CHECK(chi2 < 36.19);
  }

  TEST_CASE("randomized quantile residuals are near normal under the true model")
  {
    const auto& sc = find_scenario("poisson-medium");
    int close = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      Rng rng = stream_rng(55, r);
      const auto data = generate(sc, 2000, rng);
      const auto f = fit(sc.generator, data);
      if (ks_distance(randomized_quantile(f, data, rng)) <= 0.05)
        ++close;
    }
    CHECK(close >= 90);
  }

  TEST_CASE("pp_curve examples")
  {
    ResidualVector one{ ResidualKind::Pearson, Reference::StandardNormal, Eigen::VectorXd::Zero(1) };
    const auto c = pp_curve(one);
    CHECK(c.theoretical(0) == 0.5);
    CHECK(c.empirical(0) == 0.5);

    const int n = 9;
    ResidualVector q{ ResidualKind::Pearson, Reference::StandardNormal, Eigen::VectorXd(n) };
    for (int i = 0; i < n; ++i)
      q.values(n - 1 - i) = normal_quantile((i + 0.5) / n);
    const auto d = pp_curve(q);
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(d.theoretical(i) - d.empirical(i)) <= 1e-12);
  }

  TEST_CASE("Cox-Snell and deviance curves depart from uniformity for small means")
  {
    const auto& sc = find_scenario("poisson-small");
    Rng rng(9);
    const auto data = generate(sc, 2000, rng);
    const auto f = fit(sc.generator, data);
    const auto grid = linspace(0.05, 0.95, 91);
    const auto u = cox_snell_ecdf(f, data, grid);
    double sup = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
      sup = std::max(sup, std::abs(u(static_cast<Eigen::Index>(j)) - grid[j]));
    CHECK(sup > 0.05);
    CHECK(ks_distance(deviance(f, data)) > 0.1);
  }

  TEST_CASE("ks distance of a perfect sample")
  {
    ResidualVector u{ ResidualKind::CoxSnell, Reference::Uniform01, Eigen::VectorXd(4) };
    u.values << 0.125, 0.375, 0.625, 0.875;
    CHECK(ks_distance(u) == doctest::Approx(0.125));
    ResidualVector tie{ ResidualKind::CoxSnell, Reference::Uniform01, Eigen::VectorXd(2) };
    tie.values << 0.5, 0.5;
    CHECK(ks_distance(tie) == doctest::Approx(0.5));
  }
}
