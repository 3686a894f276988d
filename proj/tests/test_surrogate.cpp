#include "oracles.hpp"

#include "discres/error.hpp"
#include "discres/residuals.hpp"
#include "discres/simlab.hpp"
#include "discres/surrogate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace discres;

namespace {

std::span<const double>
view(const Eigen::VectorXd& v)
{
  return { v.data(), static_cast<std::size_t>(v.size()) };
}

std::span<const double>
view(const std::vector<double>& v)
{
  return { v.data(), v.size() };
}

struct BinaryCase
{
  FittedModel fitted;
  Dataset data;
  std::vector<double> f0;
  std::vector<int> y;
};

BinaryCase
random_binary(Rng& rng)
{
  BinaryCase c;
  const auto n = static_cast<Eigen::Index>(5 + std::floor(uniform01(rng) * 200));
  c.fitted.spec.family = Family{ FamilyKind::Bernoulli, Link::Logit };
  c.fitted.spec.count_columns = { 0, 1 };
  c.fitted.coefficients.count = Eigen::Vector2d(4.0 * uniform01(rng) - 2.0, 4.0 * uniform01(rng) - 2.0);
  c.data.design.resize(n, 2);
  c.data.outcomes.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c.data.design(i, 0) = 1.0;
    c.data.design(i, 1) = standard_normal(rng);
    const double eta = c.fitted.coefficients.count.dot(c.data.design.row(i).transpose());
    const double f0 = 1.0 / (1.0 + std::exp(eta));
    c.data.outcomes(i) = uniform01(rng) < f0 ? 0 : 1;
    c.f0.push_back(f0);
    c.y.push_back(c.data.outcomes(i));
  }
  return c;
}

} // namespace

TEST_SUITE("surrogate")
{
  TEST_CASE("kernel values")
  {
    CHECK(kernel_eval(KernelKind::Epanechnikov, 0.0) == 0.75);
    CHECK(kernel_eval(KernelKind::Epanechnikov, 1.0) == 0.0);
    CHECK(kernel_eval(KernelKind::Epanechnikov, -1.0) == 0.0);
    CHECK(kernel_eval(KernelKind::Epanechnikov, 1.5) == 0.0);
    CHECK(kernel_eval(KernelKind::Quartic, 0.0) == 15.0 / 16.0);
    CHECK(kernel_eval(KernelKind::Quartic, 0.3) == kernel_eval(KernelKind::Quartic, -0.3));
  }

  TEST_CASE("kernel constants")
  {
    const auto e = kernel_constants(KernelKind::Epanechnikov);
    CHECK(std::abs(e.integral - 1.0) <= 1e-12);
    CHECK(std::abs(e.r2 - 3.0 / 5.0) <= 1e-12);
    CHECK(std::abs(e.kappa2 - 1.0 / 5.0) <= 1e-12);
    const auto q = kernel_constants(KernelKind::Quartic);
    CHECK(std::abs(q.integral - 1.0) <= 1e-12);
    CHECK(std::abs(q.r2 - 5.0 / 7.0) <= 1e-12);
    CHECK(std::abs(q.kappa2 - 1.0 / 7.0) <= 1e-12);
    const auto num = oracle::simpson([](double u) { return std::pow(0.75 * (1 - u * u), 2); }, -1, 1);
    CHECK(std::abs(e.r2 - num) <= 1e-10);
  }

  TEST_CASE("Gauss-Legendre rule")
  {
    const auto q = gauss_legendre(8);
    CHECK(std::abs(q.weights.sum() - 2.0) <= 1e-14);
    for (int p = 0; p <= 15; ++p) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < 8; ++i)
        s += q.weights(i) * std::pow(q.nodes(i), p);
      CHECK(std::abs(s - (p % 2 ? 0.0 : 2.0 / (p + 1))) <= 1e-13);
    }
  }

  TEST_CASE("binary U-hat is the Nadaraya-Watson display")
  {
    Rng rng(2718);
    for (int config = 0; config < 1000; ++config) {
      const auto c = random_binary(rng);
      const auto inputs = SurrogateInputs::from_fit(c.fitted, c.data);
      const double s = 0.01 + 0.98 * uniform01(rng);
      const double eps = 0.02 + 0.5 * uniform01(rng);
      const auto u = u_hat(s, inputs, KernelKind::Epanechnikov, eps);
      double den = 0.0;
      for (double f : c.f0)
        den += oracle::epanechnikov((f - s) / eps);
      if (den == 0.0) {
        CHECK_FALSE(u.defined);
        continue;
      }
      REQUIRE(u.defined);
      CHECK(std::abs(u.value - oracle::binary_nadaraya_watson(c.f0, c.y, s, eps)) <= 1e-14);
    }
  }

  TEST_CASE("forcing H = s reduces U-hat to the Cox-Snell ecdf")
  {
    Rng rng(31415);
    for (int config = 0; config < 100; ++config) {
      const auto n = static_cast<Eigen::Index>(1 + std::floor(uniform01(rng) * 300));
      Eigen::VectorXd cs(n);
      for (Eigen::Index i = 0; i < n; ++i)
        cs(i) = std::floor(uniform01(rng) * 40.0) / 40.0;
      const auto grid = linspace(0.05, 0.95, 37);
      Eigen::MatrixXd h(static_cast<Eigen::Index>(grid.size()), n);
      for (std::size_t j = 0; j < grid.size(); ++j)
        h.row(static_cast<Eigen::Index>(j)).setConstant(grid[j]);
      const auto curve = surrogate_curve_from_h(h, cs, KernelKind::Epanechnikov, 0.01 + uniform01(rng),
                                                grid);
      const auto ecdf = cox_snell_ecdf(cs, grid);
      for (std::size_t j = 0; j < grid.size(); ++j) {
        REQUIRE(curve.points[j].defined());
        CHECK(*curve.points[j].u == ecdf(static_cast<Eigen::Index>(j)));
      }
    }
  }

  TEST_CASE("weights are normalized and non-negative")
  {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> h(100);
      for (auto& v : h)
        v = uniform01(rng);
      const double s = uniform01(rng);
      const auto w = surrogate_weights(s, h, KernelKind::Quartic, 0.2);
      if (w.sum() == 0.0)
        continue;
      CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
      CHECK((w.array() >= 0.0).all());
    }
  }

  TEST_CASE("small-sample examples")
  {
    const std::vector<double> h = { 0.52 };
    const std::vector<double> cs = { 0.3 };
    const auto u = u_hat_from(0.5, h, cs, KernelKind::Epanechnikov, 0.1);
    CHECK(u.defined);
    CHECK(u.value == 1.0);
    CHECK_FALSE(u_hat_from(0.5, h, cs, KernelKind::Epanechnikov, 1e-12).defined);
    CHECK_THROWS_AS(u_hat_from(0.5, h, cs, KernelKind::Epanechnikov, 0.0), DomainError);

    std::vector<double> hh = { 0.5, 0.55, 0.6 };
    std::vector<double> cc = { 0.2, 0.9, 0.4 };
    const auto before = u_hat_from(0.5, hh, cc, KernelKind::Epanechnikov, 0.2);
    hh.push_back(0.95);
    cc.push_back(0.0);
    const auto after = u_hat_from(0.5, hh, cc, KernelKind::Epanechnikov, 0.2);
    CHECK(before.value == after.value);
    CHECK(before.effective_n == after.effective_n);
  }

  TEST_CASE("all points undefined for an absurdly small bandwidth")
  {
    const auto& sc = find_scenario("poisson-medium");
    Rng rng(1);
    const auto data = generate(sc, 20, rng);
    const auto f = fit(sc.generator, data);
    const auto inputs = SurrogateInputs::from_fit(f, data);
    const auto grid = default_s_grid();
    const auto curve = surrogate_curve(inputs, KernelKind::Epanechnikov, 1e-12, grid);
    std::size_t defined = 0;
    for (const auto& p : curve.points)
      defined += p.defined() ? 1 : 0;
    CHECK(defined == 0);
    CHECK_THROWS_AS(l2_distance(curve, 0.3, 0.9), UndefinedDistanceError);
    const std::vector<double> tiny = { 1e-12 };
    CHECK_THROWS_AS(select_bandwidth(inputs, KernelKind::Epanechnikov, grid, tiny), SelectionError);
  }

  TEST_CASE("U-hat is invariant to permutations")
  {
    const auto& sc = find_scenario("poisson-small");
    Rng rng(77);
    auto data = generate(sc, 300, rng);
    const auto f = fit(sc.generator, data);
    const auto a = u_hat(0.6, SurrogateInputs::from_fit(f, data), KernelKind::Epanechnikov, 0.1);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(data.rows());
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + perm.indices().size(), rng);
    data.design = perm * data.design;
    data.outcomes = perm * data.outcomes;
    const auto b = u_hat(0.6, SurrogateInputs::from_fit(f, data), KernelKind::Epanechnikov, 0.1);
    CHECK(std::abs(a.value - b.value) <= 1e-14);
    CHECK(std::abs(a.effective_n - b.effective_n) <= 1e-10);
  }

  TEST_CASE("bandwidth selection")
  {
    // Half the observations sit on the diagonal (H = s, Cox-Snell values
    // spread so the ecdf is the identity on the grid); the other half sit
    // 0.3 above s and always count. Small bandwidths see only the first group.
    const std::vector<double> grid = { 0.25, 0.5, 0.75 };
    const std::vector<double> cs_on = { 0.25, 0.5, 0.75, 1.0 };
    const Eigen::Index n = 8;
    Eigen::VectorXd cs(n);
    Eigen::MatrixXd h(3, n);
    for (Eigen::Index i = 0; i < 4; ++i) {
      cs(i) = cs_on[static_cast<std::size_t>(i)];
      cs(i + 4) = 0.0;
      for (Eigen::Index j = 0; j < 3; ++j) {
        h(j, i) = grid[static_cast<std::size_t>(j)];
        h(j, i + 4) = std::min(grid[static_cast<std::size_t>(j)] + 0.3, 0.99);
      }
    }
    const std::vector<double> mesh = { 0.9, 0.1 };
    const auto sel = select_bandwidth_from_h(h, cs, KernelKind::Epanechnikov, grid, mesh);
    CHECK(sel.bandwidth == 0.1);
    CHECK(sel.objective[1] == 0.0);
    CHECK(sel.objective[0] > 0.0);

    const std::vector<double> tied = { 0.2, 0.1, 0.05 };
    const auto t = select_bandwidth_from_h(h, cs, KernelKind::Epanechnikov, grid, tied);
    CHECK(t.bandwidth == 0.2);
  }

  TEST_CASE("l2 distance")
  {
    const auto grid = default_s_grid();
    SurrogateCurve identity, offset;
    for (double s : grid) {
      identity.points.push_back({ s, s, 10.0 });
      offset.points.push_back({ s, s + 0.1, 10.0 });
    }
    CHECK(l2_distance(identity, 0.3, 0.9) == 0.0);
    CHECK(std::abs(l2_distance(offset, 0.3, 0.9) - 0.006) <= 1e-12);
    const auto w = riemann_weights(grid, 0.3, 0.9);
    double total = 0.0;
    for (double x : w)
      total += x;
    CHECK(std::abs(total - 0.6) <= 1e-14);
    CHECK(grid.size() == 121);
    CHECK(grid.front() == 0.05);
    CHECK(grid.back() == 0.95);
    CHECK(*sup_deviation(offset, 0.2, 0.8) == doctest::Approx(0.1));
  }

  TEST_CASE("worker count does not change curves or selection")
  {
    const auto& sc = find_scenario("zip-medium");
    Rng rng(4);
    const auto data = generate(sc, 500, rng);
    const auto f = fit(sc.fits[1].spec, data);
    DiagnosticOptions one, four;
    four.workers = 4;
    const auto a = diagnose(f, data, one);
    const auto b = diagnose(f, data, four);
    CHECK(a.curve.bandwidth == b.curve.bandwidth);
    CHECK(a.selection->objective == b.selection->objective);
    for (std::size_t j = 0; j < a.curve.points.size(); ++j) {
      CHECK(a.curve.points[j].u == b.curve.points[j].u);
      CHECK(a.curve.points[j].effective_n == b.curve.points[j].effective_n);
    }
    CHECK(*a.l2 == *b.l2);
  }

  TEST_CASE("true model stays near the diagonal and an omitted covariate does not")
  {
    const auto& sc = find_scenario("poisson-missing-covariate-medium");
    Rng rng = stream_rng(12, 0);
    const auto data = generate(sc, 2000, rng);
    DiagnosticOptions options;
    const auto good = diagnose(fit(sc.fits[0].spec, data), data, options);
    const auto bad = diagnose(fit(sc.fits[1].spec, data), data, options);
    CHECK(*sup_deviation(good.curve, 0.2, 0.8) < 0.08);
    CHECK(*sup_deviation(bad.curve, 0.2, 0.8) > 0.2);
    CHECK(*bad.l2 > 10.0 * *good.l2);
  }

  TEST_CASE("selected bandwidth is stable across seeds")
  {
    const auto& sc = find_scenario("poisson-medium");
    std::vector<double> logs;
    double step = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng = stream_rng(2020, seed);
      const auto data = generate(sc, 2000, rng);
      const auto f = fit(sc.generator, data);
      const auto inputs = SurrogateInputs::from_fit(f, data);
      const auto mesh = default_bandwidth_mesh(inputs);
      step = std::log(mesh[1] / mesh[0]);
      const auto sel = select_bandwidth(inputs, KernelKind::Epanechnikov, default_s_grid(), mesh);
      logs.push_back(std::log(sel.bandwidth));
    }
    const double iqr = sample_quantile(logs, 0.75) - sample_quantile(logs, 0.25);
    MESSAGE("IQR of log bandwidth " << iqr << ", mesh step " << step);
    CHECK(iqr <= step);
  }
}
