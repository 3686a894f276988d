#include "discres/families.hpp"

#include "discres/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace discres {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogUnderflow = -700.0;
constexpr double kMaxMean = 1e10;

std::string
num(double x)
{
  return std::to_string(x);
}

double
base_log_pmf(FamilyKind kind, double mean, double size, long k)
{
  if (k < 0)
    return -kInf;
  if (mean == 0.0)
    return k == 0 ? 0.0 : -kInf;
  const double kd = static_cast<double>(k);
  if (kind == FamilyKind::NegativeBinomial) {
    return std::lgamma(kd + size) - std::lgamma(size) - log_factorial(k) +
           size * std::log(size / (size + mean)) + kd * std::log(mean / (size + mean));
  }
  return kd * std::log(mean) - mean - log_factorial(k);
}

double
base_pmf_zero(FamilyKind kind, double mean, double size)
{
  if (kind == FamilyKind::NegativeBinomial)
    return std::pow(size / (size + mean), size);
  return std::exp(-mean);
}

double
base_pmf(FamilyKind kind, double mean, double size, long k)
{
  if (k < 0)
    return 0.0;
  if (k == 0)
    return base_pmf_zero(kind, mean, size);
  return std::exp(base_log_pmf(kind, mean, size, k));
}

long
base_mode(FamilyKind kind, double mean, double size)
{
  if (kind == FamilyKind::NegativeBinomial)
    return size > 1.0 ? static_cast<long>(std::floor((size - 1.0) * mean / size)) : 0L;
  return static_cast<long>(std::floor(mean));
}

// Smallest k whose log-pmf clears the underflow threshold. The log-pmf is
// increasing on [0, mode].
long
base_start(FamilyKind kind, double mean, double size, long mode)
{
  if (base_log_pmf(kind, mean, size, 0) >= kLogUnderflow)
    return 0;
  long lo = 0, hi = mode;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (base_log_pmf(kind, mean, size, mid) >= kLogUnderflow)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

FamilyKind
base_kind(FamilyKind kind)
{
  return kind == FamilyKind::NegativeBinomial ? kind : FamilyKind::Poisson;
}

void
check_mean(double mean, const char* what)
{
  if (!std::isfinite(mean) || mean < 0.0 || mean > kMaxMean)
    throw DomainError(std::string(what) + " must be finite, non-negative and at most 1e10, got " +
                      num(mean));
}

void
check_mixture(double pi0, double pi1)
{
  if (!(pi0 >= 0.0) || !(pi1 >= 0.0) || !(pi0 + pi1 <= 1.0))
    throw DomainError("invalid mixture weights: pi0 = " + num(pi0) + ", pi1 = " + num(pi1) +
                      " (need pi0 >= 0, pi1 >= 0, pi0 + pi1 <= 1)");
}

double
sigmoid(double x)
{
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

} // namespace

std::string_view
to_string(FamilyKind kind)
{
  switch (kind) {
    case FamilyKind::Poisson:
      return "poisson";
    case FamilyKind::NegativeBinomial:
      return "nb";
    case FamilyKind::Bernoulli:
      return "bernoulli";
    case FamilyKind::ZIP:
      return "zip";
    case FamilyKind::ZOIP:
      return "zoip";
  }
  return "unknown";
}

std::string_view
to_string(Link link)
{
  switch (link) {
    case Link::Log:
      return "log";
    case Link::Logit:
      return "logit";
    case Link::Sqrt:
      return "sqrt";
    case Link::Identity:
      return "identity";
  }
  return "unknown";
}

FamilyKind
parse_family(std::string_view name)
{
  if (name == "poisson")
    return FamilyKind::Poisson;
  if (name == "nb" || name == "negbin" || name == "negative-binomial")
    return FamilyKind::NegativeBinomial;
  if (name == "bernoulli" || name == "binary" || name == "logistic")
    return FamilyKind::Bernoulli;
  if (name == "zip")
    return FamilyKind::ZIP;
  if (name == "zoip")
    return FamilyKind::ZOIP;
  throw UsageError("unknown family '" + std::string(name) +
                   "' (expected poisson, nb, bernoulli, zip, zoip)");
}

Link
parse_link(std::string_view name)
{
  if (name == "log")
    return Link::Log;
  if (name == "logit")
    return Link::Logit;
  if (name == "sqrt")
    return Link::Sqrt;
  if (name == "identity")
    return Link::Identity;
  throw UsageError("unknown link '" + std::string(name) +
                   "' (expected log, logit, sqrt, identity)");
}

Link
default_link(FamilyKind kind)
{
  return kind == FamilyKind::Bernoulli ? Link::Logit : Link::Log;
}

double
inverse_link(Link link, double eta)
{
  if (!std::isfinite(eta))
    throw DomainError("linear predictor must be finite, got " + num(eta));
  switch (link) {
    case Link::Log:
      return std::exp(eta);
    case Link::Logit:
      return sigmoid(eta);
    case Link::Sqrt:
      return eta * eta;
    case Link::Identity:
      if (eta < 0.0)
        throw DomainError("identity link produced a negative mean " + num(eta));
      return eta;
  }
  return eta;
}

InflationProbabilities
inflation_probabilities(double zero_logit, double one_logit)
{
  if (std::isnan(zero_logit) || std::isnan(one_logit) || zero_logit == kInf || one_logit == kInf)
    throw DomainError("inflation logits must be finite or -inf");
  const double m = std::max({ 0.0, zero_logit, one_logit });
  const double e0 = std::exp(zero_logit - m);
  const double e1 = std::exp(one_logit - m);
  const double denom = std::exp(-m) + e0 + e1;
  return { e0 / denom, e1 / denom };
}

double
log_factorial(long k)
{
  static const std::vector<double> table = [] {
    std::vector<double> t(1L << 15);
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (k < 0)
    throw DomainError("log_factorial of a negative integer");
  if (static_cast<std::size_t>(k) < table.size())
    return table[static_cast<std::size_t>(k)];
  return std::lgamma(static_cast<double>(k) + 1.0);
}

// ---------------------------------------------------------------------------
// Distribution

Distribution
Distribution::poisson(double lambda)
{
  check_mean(lambda, "Poisson mean");
  Distribution d;
  d.kind_ = FamilyKind::Poisson;
  d.location_ = lambda;
  return d;
}

Distribution
Distribution::negative_binomial(double size, double mean)
{
  check_mean(mean, "negative binomial mean");
  if (!std::isfinite(size) || size <= 0.0)
    throw DomainError("negative binomial size must be positive, got " + num(size));
  Distribution d;
  d.kind_ = FamilyKind::NegativeBinomial;
  d.location_ = mean;
  d.size_ = size;
  return d;
}

Distribution
Distribution::bernoulli(double p)
{
  if (!(p >= 0.0 && p <= 1.0))
    throw DomainError("Bernoulli probability must lie in [0, 1], got " + num(p));
  Distribution d;
  d.kind_ = FamilyKind::Bernoulli;
  d.location_ = p;
  return d;
}

Distribution
Distribution::zip(double pi0, double lambda)
{
  check_mixture(pi0, 0.0);
  check_mean(lambda, "Poisson mean");
  Distribution d;
  d.kind_ = FamilyKind::ZIP;
  d.location_ = lambda;
  d.pi0_ = pi0;
  return d;
}

Distribution
Distribution::zoip(double pi0, double pi1, double lambda)
{
  check_mixture(pi0, pi1);
  check_mean(lambda, "Poisson mean");
  Distribution d;
  d.kind_ = FamilyKind::ZOIP;
  d.location_ = lambda;
  d.pi0_ = pi0;
  d.pi1_ = pi1;
  return d;
}

double
Distribution::log_pmf(long k) const
{
  switch (kind_) {
    case FamilyKind::Poisson:
    case FamilyKind::NegativeBinomial:
      return base_log_pmf(kind_, location_, size_, k);
    default:
      return std::log(pmf(k));
  }
}

double
Distribution::pmf(long k) const
{
  if (k < 0)
    return 0.0;
  switch (kind_) {
    case FamilyKind::Bernoulli:
      return k == 0 ? 1.0 - location_ : (k == 1 ? location_ : 0.0);
    case FamilyKind::Poisson:
    case FamilyKind::NegativeBinomial:
      return base_pmf(kind_, location_, size_, k);
    case FamilyKind::ZIP:
    case FamilyKind::ZOIP: {
      const double w = 1.0 - pi0_ - pi1_;
      double p = w * base_pmf(FamilyKind::Poisson, location_, size_, k);
      if (k == 0)
        p += pi0_;
      if (k == 1)
        p += pi1_;
      return p;
    }
  }
  return 0.0;
}

double
Distribution::cdf(long k) const
{
  if (k < 0)
    return 0.0;
  CdfWalker walk(*this);
  double last = 0.0;
  while (walk.next()) {
    if (walk.k() > k)
      break;
    last = walk.cdf();
  }
  return std::min(last, 1.0);
}

double
Distribution::cdf_left(long k) const
{
  return k <= 0 ? 0.0 : cdf(k - 1);
}

long
Distribution::general_inverse(double s) const
{
  if (!(s > 0.0 && s < 1.0))
    throw DomainError("general inverse needs s in (0, 1), got " + num(s));
  CdfWalker walk(*this);
  long last = 0;
  while (walk.next()) {
    last = walk.k();
    if (s <= walk.cdf())
      return last;
  }
  return last;
}

long
Distribution::tail_limit() const
{
  CdfWalker walk(*this);
  long last = 0;
  while (walk.next()) {
    last = walk.k();
    if (walk.cdf() > 1.0 - kTailTolerance)
      return last;
  }
  return last;
}

long
Distribution::sample(Rng& rng) const
{
  const double u = uniform01(rng);
  CdfWalker walk(*this);
  long last = 0;
  while (walk.next()) {
    last = walk.k();
    if (u < walk.cdf())
      return last;
  }
  return last;
}

double
Distribution::mean() const
{
  switch (kind_) {
    case FamilyKind::Poisson:
    case FamilyKind::NegativeBinomial:
    case FamilyKind::Bernoulli:
      return location_;
    case FamilyKind::ZIP:
    case FamilyKind::ZOIP:
      return pi1_ + (1.0 - pi0_ - pi1_) * location_;
  }
  return location_;
}

double
Distribution::variance() const
{
  switch (kind_) {
    case FamilyKind::Poisson:
      return location_;
    case FamilyKind::NegativeBinomial:
      return location_ + location_ * location_ / size_;
    case FamilyKind::Bernoulli:
      return location_ * (1.0 - location_);
    case FamilyKind::ZIP:
    case FamilyKind::ZOIP: {
      const double w = 1.0 - pi0_ - pi1_;
      const double m = mean();
      const double second = pi1_ + w * (location_ + location_ * location_);
      return second - m * m;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// CdfWalker

CdfWalker::CdfWalker(const Distribution& dist)
  : dist_(dist)
{
  if (dist_.kind_ == FamilyKind::Bernoulli)
    return;
  const FamilyKind base = base_kind(dist_.kind_);
  base_mode_ = base_mode(base, dist_.location_, dist_.size_);
  base_start_ = base_start(base, dist_.location_, dist_.size_, base_mode_);
  explicit_until_ = dist_.kind_ == FamilyKind::ZIP ? 1 : (dist_.kind_ == FamilyKind::ZOIP ? 2 : 0);
}

bool
CdfWalker::next_base()
{
  if (base_done_)
    return false;
  const FamilyKind base = base_kind(dist_.kind_);
  const double mean = dist_.location_;
  const double size = dist_.size_;
  long k = base_k_ + 1;
  if (k < base_start_ && k >= explicit_until_)
    k = base_start_;

  double p;
  if (k < base_start_ || k == base_start_ || k == 0) {
    p = base_pmf(base, mean, size, k);
  } else if (base == FamilyKind::NegativeBinomial) {
    p = base_pmf_ * (static_cast<double>(k - 1) + size) / static_cast<double>(k) *
        (mean / (size + mean));
  } else {
    p = base_pmf_ * mean / static_cast<double>(k);
  }

  if (k > base_mode_ && k >= explicit_until_ && p == 0.0) {
    base_done_ = true;
    return false;
  }
  base_k_ = k;
  base_pmf_ = p;
  base_cdf_ += p;
  return true;
}

bool
CdfWalker::next()
{
  switch (dist_.kind_) {
    case FamilyKind::Bernoulli: {
      if (k_ >= 1)
        return false;
      ++k_;
      const double p = dist_.location_;
      if (k_ == 0) {
        pmf_ = 1.0 - p;
        cdf_ = 1.0 - p;
      } else {
        if (p == 0.0)
          return false;
        pmf_ = p;
        cdf_ = 1.0;
      }
      return true;
    }
    case FamilyKind::Poisson:
    case FamilyKind::NegativeBinomial:
      if (!next_base())
        return false;
      k_ = base_k_;
      pmf_ = base_pmf_;
      cdf_ = base_cdf_;
      return true;
    case FamilyKind::ZIP:
    case FamilyKind::ZOIP: {
      if (!next_base())
        return false;
      const double pi0 = dist_.pi0_;
      const double pi1 = dist_.pi1_;
      const double w = 1.0 - pi0 - pi1;
      k_ = base_k_;
      pmf_ = w * base_pmf_ + (k_ == 0 ? pi0 : 0.0) + (k_ == 1 ? pi1 : 0.0);
      cdf_ = (k_ == 0 ? pi0 : pi0 + pi1) + w * base_cdf_;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Family-level operations

Distribution
make_distribution(const Family& family, const LinearPredictor& predictor)
{
  const double mean = inverse_link(family.link, predictor.mean);
  switch (family.kind) {
    case FamilyKind::Poisson:
      return Distribution::poisson(mean);
    case FamilyKind::NegativeBinomial:
      return Distribution::negative_binomial(family.size, mean);
    case FamilyKind::Bernoulli:
      return Distribution::bernoulli(mean);
    case FamilyKind::ZIP: {
      const auto pi = inflation_probabilities(predictor.zero, -kInf);
      return Distribution::zip(pi.pi0, mean);
    }
    case FamilyKind::ZOIP: {
      const auto pi = inflation_probabilities(predictor.zero, predictor.one);
      return Distribution::zoip(pi.pi0, pi.pi1, mean);
    }
  }
  throw DomainError("unknown family");
}

double
pmf(const Family& family, long k, const LinearPredictor& predictor)
{
  return make_distribution(family, predictor).pmf(k);
}

double
cdf(const Family& family, long k, const LinearPredictor& predictor)
{
  return make_distribution(family, predictor).cdf(k);
}

double
cdf_left(const Family& family, long k, const LinearPredictor& predictor)
{
  return make_distribution(family, predictor).cdf_left(k);
}

long
general_inverse(const Family& family, double s, const LinearPredictor& predictor)
{
  return make_distribution(family, predictor).general_inverse(s);
}

long
sample(const Family& family, const LinearPredictor& predictor, Rng& rng)
{
  return make_distribution(family, predictor).sample(rng);
}

double
variance_function(const Family& family, double mean)
{
  switch (family.kind) {
    case FamilyKind::Poisson:
      if (!(mean > 0.0))
        throw DomainError("Poisson variance function needs a positive mean, got " + num(mean));
      return mean;
    case FamilyKind::NegativeBinomial:
      if (!(mean > 0.0))
        throw DomainError("NB variance function needs a positive mean, got " + num(mean));
      if (!(family.size > 0.0))
        throw DomainError("NB variance function needs a positive size");
      return mean + mean * mean / family.size;
    case FamilyKind::Bernoulli:
      if (!(mean > 0.0 && mean < 1.0))
        throw DomainError("Bernoulli variance function needs a mean in (0, 1), got " + num(mean));
      return mean * (1.0 - mean);
    default:
      throw UnsupportedFamilyError("no single-parameter variance function for " +
                                   std::string(to_string(family.kind)));
  }
}

double
saturated_loglik(const Family& family, long y)
{
  if (y < 0)
    throw DomainError("outcome must be non-negative");
  const double yd = static_cast<double>(y);
  switch (family.kind) {
    case FamilyKind::Poisson:
      return y == 0 ? 0.0 : yd * std::log(yd) - yd - log_factorial(y);
    case FamilyKind::Bernoulli:
      if (y > 1)
        throw DomainError("Bernoulli outcome must be 0 or 1");
      return 0.0;
    case FamilyKind::NegativeBinomial: {
      const double r = family.size;
      if (!(r > 0.0))
        throw DomainError("NB saturated log-likelihood needs a positive size");
      if (y == 0)
        return 0.0;
      return std::lgamma(yd + r) - std::lgamma(r) - log_factorial(y) +
             r * std::log(r / (r + yd)) + yd * std::log(yd / (r + yd));
    }
    default:
      throw UnsupportedFamilyError("saturated likelihood is not defined for " +
                                   std::string(to_string(family.kind)) +
                                   " (more than one location parameter)");
  }
}

} // namespace discres
