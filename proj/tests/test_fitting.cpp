#include "oracles.hpp"

#include "discres/error.hpp"
#include "discres/fitting.hpp"
#include "discres/simlab.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace discres;

namespace {

Dataset
intercept_only(const std::vector<int>& y)
{
  Dataset d;
  d.design = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
  d.outcomes = Eigen::Map<const Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.column_names = { "(Intercept)" };
  return d;
}

ModelSpec
make_spec(FamilyKind kind, Link link, std::vector<Eigen::Index> count, std::vector<Eigen::Index> zero = {},
          std::vector<Eigen::Index> one = {})
{
  ModelSpec s;
  s.family = Family{ kind, link };
  s.count_columns = std::move(count);
  s.zero_columns = std::move(zero);
  s.one_columns = std::move(one);
  return s;
}

double
bisect(const std::function<double(double)>& f, double lo, double hi)
{
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(lo) < 0) == (f(mid) < 0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Draws a dataset with design [1, x1, x2] and outcomes from `spec` at `truth`.
Dataset
draw(const ModelSpec& spec, const Coefficients& truth, std::size_t n, std::uint64_t seed)
{
  Scenario s;
  s.name = "test";
  s.generator = spec;
  s.truth = truth;
  s.fits = { { "true", spec, true } };
  Rng rng(seed);
  return generate(s, n, rng);
}

Eigen::VectorXd
vec(std::initializer_list<double> v)
{
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v)
    out(i++) = x;
  return out;
}

} // namespace

TEST_SUITE("fitting")
{
  TEST_CASE("intercept-only Poisson is log of the mean")
  {
    const auto d = intercept_only({ 0, 1, 1, 3, 2, 0, 5, 1, 1, 2 });
    const auto f = fit(make_spec(FamilyKind::Poisson, Link::Log, { 0 }), d);
    CHECK(std::abs(f.coefficients.count(0) - std::log(1.6)) <= 1e-10);
    CHECK(f.converged);

    const auto ones = intercept_only({ 1, 1, 1, 1 });
    const auto g = fit(make_spec(FamilyKind::Poisson, Link::Log, { 0 }), ones);
    CHECK(std::abs(g.coefficients.count(0)) <= 1e-10);
  }

  TEST_CASE("intercept-only logistic with half ones is zero")
  {
    const auto d = intercept_only({ 0, 1, 0, 1, 1, 0 });
    const auto f = fit(make_spec(FamilyKind::Bernoulli, Link::Logit, { 0 }), d);
    CHECK(std::abs(f.coefficients.count(0)) <= 1e-10);
    const auto q = intercept_only({ 0, 1, 0, 0 });
    const auto g = fit(make_spec(FamilyKind::Bernoulli, Link::Logit, { 0 }), q);
    CHECK(std::abs(g.coefficients.count(0) - std::log(0.25 / 0.75)) <= 1e-10);
  }

  TEST_CASE("intercept-only square-root and identity links")
  {
    const auto d = intercept_only({ 0, 1, 1, 3, 2, 0, 5, 1, 1, 2 });
    const auto s = fit(make_spec(FamilyKind::Poisson, Link::Sqrt, { 0 }), d);
    CHECK(std::abs(s.coefficients.count(0) - std::sqrt(1.6)) <= 1e-10);
    const auto i = fit(make_spec(FamilyKind::Poisson, Link::Identity, { 0 }), d);
    CHECK(std::abs(i.coefficients.count(0) - 1.6) <= 1e-10);
  }

  TEST_CASE("intercept-only negative binomial mean is the sample mean")
  {
    const auto d = intercept_only({ 0, 0, 1, 7, 2, 0, 9, 1, 0, 4, 0, 3 });
    const auto f = fit(make_spec(FamilyKind::NegativeBinomial, Link::Log, { 0 }), d);
    CHECK(std::abs(f.coefficients.count(0) - std::log(27.0 / 12.0)) <= 1e-8);
    CHECK(f.coefficients.size > 0.0);
  }

  TEST_CASE("intercept-only ZIP matches the moment equations")
  {
    std::vector<int> y = { 0, 0, 0, 0, 0, 0, 1, 2, 2, 3, 1, 4, 0, 2, 5, 1 };
    const auto d = intercept_only(y);
    const double n = static_cast<double>(y.size());
    const double f0 = static_cast<double>(std::count(y.begin(), y.end(), 0)) / n;
    double ybar = 0.0;
    for (int v : y)
      ybar += v / n;
    const double lambda =
      bisect([&](double l) { return ybar * (1.0 - std::exp(-l)) - l * (1.0 - f0); }, 1e-3, 50.0);
    const double pi0 = 1.0 - ybar / lambda;
    const auto f = fit(make_spec(FamilyKind::ZIP, Link::Log, { 0 }, { 0 }), d);
    CHECK(std::abs(f.coefficients.count(0) - std::log(lambda)) <= 1e-8);
    CHECK(std::abs(inflation_probabilities(f.coefficients.zero(0), -INFINITY).pi0 - pi0) <= 1e-8);
  }

  TEST_CASE("intercept-only ZOIP reproduces the zero and one frequencies")
  {
    std::vector<int> y = { 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 3, 2, 4, 6, 3, 2, 0, 1, 5, 3 };
    const auto d = intercept_only(y);
    const double n = static_cast<double>(y.size());
    const double f0 = std::count(y.begin(), y.end(), 0) / n;
    const double f1 = std::count(y.begin(), y.end(), 1) / n;
    double sum2 = 0.0, n2 = 0.0;
    for (int v : y)
      if (v >= 2)
        sum2 += v, n2 += 1.0;
    const double m2 = sum2 / n2;
    const double lambda = bisect(
      [&](double l) {
        const double tail = 1.0 - std::exp(-l) - l * std::exp(-l);
        return (l - l * std::exp(-l)) / tail - m2;
      },
      1e-3, 50.0);
    const auto f = fit(make_spec(FamilyKind::ZOIP, Link::Log, { 0 }, { 0 }, { 0 }), d);
    const auto pi = inflation_probabilities(f.coefficients.zero(0), f.coefficients.one(0));
    const double lam = std::exp(f.coefficients.count(0));
    CHECK(std::abs(lam - lambda) <= 1e-8);
    const auto dist = Distribution::zoip(pi.pi0, pi.pi1, lam);
    CHECK(std::abs(dist.pmf(0) - f0) <= 1e-8);
    CHECK(std::abs(dist.pmf(1) - f1) <= 1e-8);
  }

  TEST_CASE("analytic score and Hessian match central differences")
  {
    struct Case
    {
      ModelSpec spec;
      Coefficients truth;
    };
    Coefficients c3;
    c3.count = vec({ 0.3, 0.6, 0.4 });
    Coefficients sq;
    sq.count = vec({ 1.2, 0.3, 0.4 });
    Coefficients id;
    id.count = vec({ 3.0, 0.4, 0.5 });
    Coefficients nb = c3;
    nb.size = 1.7;
    Coefficients zi = c3;
    zi.zero = vec({ -1.0, 0.8 });
    Coefficients zo = zi;
    zo.one = vec({ -1.5, 0.5 });
    auto nb_spec = make_spec(FamilyKind::NegativeBinomial, Link::Log, { 0, 1, 2 });
    nb_spec.family.size = 1.7;
    nb_spec.fixed_size = true;
    std::vector<Case> cases = {
      { make_spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), c3 },
      { make_spec(FamilyKind::Poisson, Link::Sqrt, { 0, 1, 2 }), sq },
      { make_spec(FamilyKind::Poisson, Link::Identity, { 0, 1, 2 }), id },
      { make_spec(FamilyKind::Bernoulli, Link::Logit, { 0, 1, 2 }), c3 },
      { nb_spec, nb },
      { make_spec(FamilyKind::ZIP, Link::Log, { 0, 1, 2 }, { 0, 1 }), zi },
      { make_spec(FamilyKind::ZOIP, Link::Log, { 0, 1, 2 }, { 0, 1 }, { 0, 2 }), zo },
    };
    Rng rng(2024);
    for (const auto& c : cases) {
      const auto data = draw(c.spec, c.truth, 300, 17);
      const Eigen::VectorXd center = pack(c.spec, c.truth);
      for (int point = 0; point < 5; ++point) {
        Eigen::VectorXd theta = center;
        for (Eigen::Index j = 0; j < theta.size(); ++j)
          theta(j) += 0.2 * (uniform01(rng) - 0.5);
        const auto at = [&](const Eigen::VectorXd& t) {
          return loglik(c.spec, data, unpack(c.spec, t, c.truth.size));
        };
        const auto coef = unpack(c.spec, theta, c.truth.size);
        const Eigen::VectorXd g = score(c.spec, data, coef);
        const Eigen::MatrixXd h = hessian(c.spec, data, coef);
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
          const double num = oracle::central_difference(
            [&](double x) {
              Eigen::VectorXd t = theta;
              t(j) = x;
              return at(t);
            },
            theta(j));
          CHECK(std::abs(g(j) - num) <= 1e-4 * std::max(1.0, std::abs(num)));
          for (Eigen::Index k = 0; k < theta.size(); ++k) {
            const double hn = oracle::central_difference(
              [&](double x) {
                Eigen::VectorXd t = theta;
                t(k) = x;
                return score(c.spec, data, unpack(c.spec, t, c.truth.size))(j);
              },
              theta(k));
            CHECK(std::abs(h(j, k) - hn) <= 1e-4 * std::max(1.0, std::abs(hn)));
          }
        }
      }
    }
  }

  TEST_CASE("log-likelihood examples")
  {
    const auto d = intercept_only({ 1 });
    Coefficients c;
    c.count = vec({ 0.0 });
    CHECK(loglik(make_spec(FamilyKind::Bernoulli, Link::Logit, { 0 }), d, c) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-15));

    Coefficients pc;
    pc.count = vec({ 0.4, 0.5, -0.3 });
    const auto spec = make_spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 });
    const auto data = draw(spec, pc, 200, 3);
    Coefficients zc = pc;
    zc.zero = vec({ -800.0 });
    const double a = loglik(spec, data, pc);
    const double b = loglik(make_spec(FamilyKind::ZIP, Link::Log, { 0, 1, 2 }, { 0 }), data, zc);
    CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
  }

  TEST_CASE("fit is a local maximum with consistent metadata")
  {
    Coefficients truth;
    truth.count = vec({ 0.0, 2.0, 1.0 });
    truth.zero = vec({ -2.0, 2.0 });
    const std::vector<ModelSpec> specs = {
      make_spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }),
      make_spec(FamilyKind::ZIP, Link::Log, { 0, 1, 2 }, { 0, 1 }),
    };
    for (const auto& spec : specs) {
      const auto data = draw(specs[1], truth, 800, 99);
      const auto f = fit(spec, data);
      CHECK(f.converged);
      CHECK(f.gradient_norm <= 1e-8);
      CHECK(std::abs(loglik(spec, data, f.coefficients) - f.loglik) <= 1e-8);
      const Eigen::VectorXd theta = pack(spec, f.coefficients);
      for (Eigen::Index j = 0; j < theta.size(); ++j)
        for (double delta : { -0.1, 0.1 }) {
          Eigen::VectorXd t = theta;
          t(j) += delta;
          CHECK(loglik(spec, data, unpack(spec, t, f.coefficients.size)) <= f.loglik);
        }
      const Eigen::MatrixXd info = -hessian(spec, data, f.coefficients);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(info).eigenvalues().minCoeff() >= -1e-8);
      CHECK((pack(spec, f.std_errors).array() > 0.0).all());
    }
  }

  TEST_CASE("predict_cdf examples")
  {
    FittedModel f;
    f.spec = make_spec(FamilyKind::Poisson, Link::Log, { 0 });
    f.coefficients.count = vec({ 0.0 });
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Ones(1);
    CHECK(predict_cdf(f, x, 1) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));

    f.spec = make_spec(FamilyKind::Bernoulli, Link::Logit, { 0 });
    CHECK(predict_cdf(f, x, 0) == doctest::Approx(0.5).epsilon(1e-15));

    f.spec = make_spec(FamilyKind::ZOIP, Link::Log, { 0 }, { 0 }, { 0 });
    // pi0 = 0.5, pi1 = 0.3 under the multinomial logit: e^a = 2.5, e^b = 1.5.
    f.coefficients.zero = vec({ std::log(2.5) });
    f.coefficients.one = vec({ std::log(1.5) });
    CHECK(predict_cdf(f, x, 0) == doctest::Approx(0.5 + 0.2 * std::exp(-1.0)).epsilon(1e-14));
  }

  TEST_CASE("errors")
  {
    Dataset d;
    d.design.resize(6, 3);
    d.design << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10, 1, 6, 12;
    d.outcomes.resize(6);
    d.outcomes << 0, 1, 2, 1, 3, 2;
    CHECK_THROWS_AS(fit(make_spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), d), SingularDesignError);

    Dataset s;
    s.design.resize(8, 2);
    s.design << 1, -4, 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3, 1, 4;
    s.outcomes.resize(8);
    s.outcomes << 0, 0, 0, 0, 1, 1, 1, 1;
    CHECK_THROWS_AS(fit(make_spec(FamilyKind::Bernoulli, Link::Logit, { 0, 1 }), s), SeparationError);

    Dataset bad = s;
    bad.outcomes(0) = 2;
    CHECK_THROWS_AS(fit(make_spec(FamilyKind::Bernoulli, Link::Logit, { 0, 1 }), bad), DomainError);
    CHECK_THROWS_AS(fit(make_spec(FamilyKind::Poisson, Link::Log, { 0, 5 }), s), DomainError);
    CHECK_THROWS_AS(fit(make_spec(FamilyKind::Bernoulli, Link::Log, { 0, 1 }), s), UnsupportedFamilyError);

    Coefficients truth;
    truth.count = vec({ 0.0, 2.0, 1.0 });
    const auto data = draw(make_spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), truth, 300, 5);
    FitOptions tight;
    tight.max_iterations = 1;
    try {
      fit(make_spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), data, tight);
      FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
      CHECK(e.last_iterate().coefficients.count.size() == 3);
      CHECK_FALSE(e.last_iterate().converged);
    }
  }

  TEST_CASE("estimation error shrinks with n")
  {
    const auto& sc = find_scenario("poisson-medium");
    std::vector<double> medians;
    for (std::size_t n : { 500, 2000, 8000 }) {
      std::vector<double> errors;
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng = stream_rng(777 + n, seed);
        const auto data = generate(sc, n, rng);
        const auto f = fit(sc.generator, data);
        errors.push_back((f.coefficients.count - sc.truth.count).norm());
      }
      medians.push_back(sample_median(errors));
    }
    CHECK(medians[0] > medians[1]);
    CHECK(medians[1] > medians[2]);
  }

  TEST_CASE("mixture, overdispersed and square-root fits recover the truth")
  {
    for (const char* name : { "nb-overdispersion", "zip-medium", "poisson-wrong-link" }) {
      const auto& sc = find_scenario(name);
      Rng rng = stream_rng(4242, 0);
      const auto data = generate(sc, 5000, rng);
      const auto f = fit(sc.true_fit().spec, data);
      const Eigen::VectorXd est = pack(sc.true_fit().spec, f.coefficients);
      const Eigen::VectorXd se = pack(sc.true_fit().spec, f.std_errors);
      const Eigen::VectorXd truth = pack(sc.true_fit().spec, sc.truth);
      for (Eigen::Index j = 0; j < est.size(); ++j)
        CHECK(std::abs(est(j) - truth(j)) <= 4.0 * se(j));
      if (sc.generator.family.kind == FamilyKind::NegativeBinomial)
        CHECK(std::abs(f.coefficients.size - 2.0) <= 4.0 * f.std_errors.size);
    }
  }

  TEST_CASE("square-root fits reach at least the likelihood of the truth")
  {
    const auto& sc = find_scenario("poisson-wrong-link");
    for (std::uint64_t r : { 146, 151, 182, 199 }) {
      Rng rng = stream_rng(7, r);
      const auto data = generate(sc, 2000, rng);
      const auto f = fit(sc.generator, data);
      CHECK(f.converged);
      CHECK(f.loglik >= loglik(sc.generator, data, sc.truth));
    }
  }

  TEST_CASE("square-root link allows a zero mean at a zero count")
  {
    const auto d = intercept_only({ 0 });
    Coefficients c;
    c.count = vec({ 0.0 });
    const auto spec = make_spec(FamilyKind::Poisson, Link::Sqrt, { 0 });
    CHECK(loglik(spec, d, c) == 0.0);
    CHECK(score(spec, d, c)(0) == 0.0);
    CHECK(hessian(spec, d, c)(0, 0) == -2.0);
  }
}
