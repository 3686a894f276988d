#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the library's probability or estimator code.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

inline double
poisson_pmf(double lambda, long k)
{
  long double p = std::exp(-static_cast<long double>(lambda));
  for (long j = 1; j <= k; ++j)
    p *= static_cast<long double>(lambda) / j;
  return static_cast<double>(p);
}

inline double
poisson_cdf(double lambda, long k)
{
  long double s = 0.0L;
  long double p = std::exp(-static_cast<long double>(lambda));
  for (long j = 0; j <= k; ++j) {
    if (j > 0)
      p *= static_cast<long double>(lambda) / j;
    s += p;
  }
  return static_cast<double>(s);
}

inline double
nb_pmf(double size, double mean, long k)
{
  const double kd = static_cast<double>(k);
  return std::exp(std::lgamma(kd + size) - std::lgamma(size) - std::lgamma(kd + 1.0) +
                  size * std::log(size / (size + mean)) + kd * std::log(mean / (size + mean)));
}

inline double
zoip_cdf(double pi0, double pi1, double lambda, long k)
{
  if (k < 0)
    return 0.0;
  const double w = 1.0 - pi0 - pi1;
  return pi0 + (k >= 1 ? pi1 : 0.0) + w * poisson_cdf(lambda, k);
}

// Nearest interior grid value by linear scan, with the one-sided clauses and
// the H+ tie rule.
inline double
nearest(const std::vector<double>& grid, double s)
{
  double plus = -1.0, minus = -1.0;
  for (const double g : grid) {
    if (g >= s && (plus < 0.0 || g < plus))
      plus = g;
    if (g <= s && (minus < 0.0 || g > minus))
      minus = g;
  }
  if (minus < 0.0)
    return plus;
  if (plus < 0.0)
    return minus;
  return plus + minus <= 2.0 * s ? plus : minus;
}

inline double
epanechnikov(double u)
{
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

// The binary-outcome display: sum K((F0_i - s)/eps) 1(Y_i = 0) / sum K(...).
inline double
binary_nadaraya_watson(const std::vector<double>& f0, const std::vector<int>& y, double s, double eps)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    const double w = epanechnikov((f0[i] - s) / eps);
    den += w;
    if (y[i] == 0)
      num += w;
  }
  return num / den;
}

inline double
ecdf(const std::vector<double>& values, double s)
{
  std::size_t count = 0;
  for (const double v : values)
    count += v <= s ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(values.size());
}

// Composite Simpson rule on [a, b].
inline double
simpson(const std::function<double(double)>& f, double a, double b, int intervals = 2000)
{
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i)
    s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double
central_difference(const std::function<double(double)>& f, double x, double h = 1e-5)
{
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracle
