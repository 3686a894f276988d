#include "discres/fitting.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <set>

namespace discres {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinMean = 1e-10;
constexpr double kSeparationBound = 30.0;
constexpr double kMinLogSize = -4.605170185988091; // log 0.01
constexpr double kMaxLogSize = 4.605170185988091;  // log 100

double
sigmoid(double x)
{
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double
softplus(double x)
{
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double
logaddexp(double x, double y)
{
  if (x == -kInf)
    return y;
  if (y == -kInf)
    return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

MatrixXd
select_columns(const MatrixXd& x, const std::vector<Index>& columns)
{
  MatrixXd out(x.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    out.col(static_cast<Index>(j)) = x.col(columns[j]);
  return out;
}

VectorXd
least_squares(const MatrixXd& x, const VectorXd& y)
{
  return x.colPivHouseholderQr().solve(y);
}

// Index (within a block) of an all-ones column, or -1.
Index
intercept_index(const MatrixXd& block)
{
  for (Index j = 0; j < block.cols(); ++j)
    if ((block.col(j).array() == 1.0).all())
      return j;
  return -1;
}

// Per-observation log-likelihood and derivatives with respect to the linear
// predictors (mean, zero, one).
struct ObservationTerms
{
  double ll = 0.0;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  bool valid = true;
};

ObservationTerms
observation_terms(const Family& family, int y, double eta, double a, double b)
{
  ObservationTerms t;
  const double yd = static_cast<double>(y);
  const double lf = log_factorial(y);
  switch (family.kind) {
    case FamilyKind::Poisson:
      switch (family.link) {
        case Link::Log: {
          const double lambda = std::exp(eta);
          t.ll = yd * eta - lambda - lf;
          t.g(0) = yd - lambda;
          t.h(0, 0) = -lambda;
          t.valid = std::isfinite(lambda);
          break;
        }
        case Link::Sqrt: {
          const double lambda = eta * eta;
          t.valid = y == 0 || lambda > 0.0;
          t.ll = (y > 0 ? yd * std::log(lambda) : 0.0) - lambda - lf;
          t.g(0) = (y > 0 ? 2.0 * yd / eta : 0.0) - 2.0 * eta;
          t.h(0, 0) = (y > 0 ? -2.0 * yd / lambda : 0.0) - 2.0;
          break;
        }
        case Link::Identity: {
          t.valid = eta > kMinMean;
          t.ll = (y > 0 ? yd * std::log(eta) : 0.0) - eta - lf;
          t.g(0) = yd / eta - 1.0;
          t.h(0, 0) = -yd / (eta * eta);
          break;
        }
        case Link::Logit:
          t.valid = false;
          break;
      }
      break;
    case FamilyKind::NegativeBinomial: {
      const double r = family.size;
      const double lambda = std::exp(eta);
      t.ll = std::lgamma(yd + r) - std::lgamma(r) - lf + r * std::log(r) -
             (r + yd) * std::log(r + lambda) + yd * eta;
      t.g(0) = r * (yd - lambda) / (r + lambda);
      t.h(0, 0) = -r * lambda * (r + yd) / ((r + lambda) * (r + lambda));
      t.valid = std::isfinite(lambda);
      break;
    }
    case FamilyKind::Bernoulli: {
      const double p = sigmoid(eta);
      t.ll = yd * eta - softplus(eta);
      t.g(0) = yd - p;
      t.h(0, 0) = -p * (1.0 - p);
      break;
    }
    case FamilyKind::ZIP:
    case FamilyKind::ZOIP: {
      const double lambda = std::exp(eta);
      if (!std::isfinite(lambda)) {
        t.valid = false;
        break;
      }
      const auto pi = inflation_probabilities(a, b);
      const double m = std::max({ 0.0, a, b });
      const double log_denom = m + std::log(std::exp(-m) + std::exp(a - m) + std::exp(b - m));
      const double poisson_ll = yd * eta - lambda - lf;
      const double c = y == 0 ? a : (y == 1 ? b : -kInf);
      double r = 0.0;
      double term = poisson_ll;
      if (c != -kInf) {
        term = logaddexp(c, poisson_ll);
        r = sigmoid(c - poisson_ll);
      }
      const double resid = yd - lambda;
      t.ll = term - log_denom;
      t.g(0) = (1.0 - r) * resid;
      t.g(1) = (y == 0 ? r : 0.0) - pi.pi0;
      t.g(2) = (y == 1 ? r : 0.0) - pi.pi1;
      t.h(0, 0) = r * (1.0 - r) * resid * resid - (1.0 - r) * lambda;
      if (y <= 1 && c != -kInf) {
        const int ci = y == 0 ? 1 : 2;
        t.h(ci, ci) += r * (1.0 - r);
        t.h(ci, 0) = t.h(0, ci) = -r * (1.0 - r) * resid;
      }
      t.h(1, 1) -= pi.pi0 * (1.0 - pi.pi0);
      t.h(2, 2) -= pi.pi1 * (1.0 - pi.pi1);
      t.h(1, 2) += pi.pi0 * pi.pi1;
      t.h(2, 1) += pi.pi0 * pi.pi1;
      break;
    }
  }
  if (!std::isfinite(t.ll))
    t.valid = false;
  return t;
}

// Log-likelihood over the packed coefficient vector at a fixed NB size.
class Objective
{
public:
  Objective(const ModelSpec& spec, const Dataset& data, double size)
    : spec_(spec)
    , data_(data)
    , family_(spec.family)
  {
    family_.size = size;
    blocks_[0] = select_columns(data.design, spec.count_columns);
    blocks_[1] = select_columns(data.design, spec.zero_columns);
    blocks_[2] = select_columns(data.design, spec.one_columns);
    for (int b = 0; b < 3; ++b)
      offsets_[b + 1] = offsets_[b] + blocks_[b].cols();
  }

  struct Evaluation
  {
    double ll = 0.0;
    VectorXd grad;
    MatrixXd hess;
    bool valid = true;
  };

  Index dimension() const { return offsets_[3]; }

  // Under the square-root link the log-likelihood is -inf where x'b = 0 for
  // a positive count, and concave between those walls. Steps must not jump
  // a wall.
  bool crosses_wall(const VectorXd& from, const VectorXd& to) const
  {
    if (family_.link != Link::Sqrt)
      return false;
    const auto cols = blocks_[0].cols();
    const VectorXd a = blocks_[0] * from.head(cols);
    const VectorXd b = blocks_[0] * to.head(cols);
    for (Index i = 0; i < a.size(); ++i)
      if (data_.outcomes(i) > 0 && (a(i) > 0.0) != (b(i) > 0.0))
        return true;
    return false;
  }
  const MatrixXd& block(int b) const { return blocks_[b]; }
  Index offset(int b) const { return offsets_[b]; }
  const Family& family() const { return family_; }

  // order: 0 = log-likelihood only, 1 = + gradient, 2 = + Hessian.
  Evaluation evaluate(const VectorXd& theta, int order) const
  {
    const Index n = data_.rows();
    std::array<VectorXd, 3> eta;
    for (int b = 0; b < 3; ++b) {
      if (blocks_[b].cols() > 0)
        eta[b] = blocks_[b] * theta.segment(offsets_[b], blocks_[b].cols());
      else
        eta[b] = VectorXd::Constant(n, b == 0 ? 0.0 : -kInf);
    }
    Evaluation e;
    MatrixXd g(n, 3);
    std::array<std::array<VectorXd, 3>, 3> h;
    if (order >= 2)
      for (auto& row : h)
        for (auto& v : row)
          v.resize(n);
    for (Index i = 0; i < n; ++i) {
      const auto t = observation_terms(family_, data_.outcomes(i), eta[0](i), eta[1](i), eta[2](i));
      if (!t.valid) {
        e.valid = false;
        e.ll = -kInf;
        return e;
      }
      e.ll += t.ll;
      if (order >= 1)
        g.row(i) = t.g.transpose();
      if (order >= 2)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            h[b][c](i) = t.h(b, c);
    }
    if (order >= 1) {
      e.grad.resize(dimension());
      for (int b = 0; b < 3; ++b)
        if (blocks_[b].cols() > 0)
          e.grad.segment(offsets_[b], blocks_[b].cols()) = blocks_[b].transpose() * g.col(b);
    }
    if (order >= 2) {
      e.hess.resize(dimension(), dimension());
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          if (blocks_[b].cols() == 0 || blocks_[c].cols() == 0)
            continue;
          e.hess.block(offsets_[b], offsets_[c], blocks_[b].cols(), blocks_[c].cols()) =
            blocks_[b].transpose() * (blocks_[c].array().colwise() * h[b][c].array()).matrix();
        }
      }
    }
    return e;
  }

private:
  const ModelSpec& spec_;
  const Dataset& data_;
  Family family_;
  std::array<MatrixXd, 3> blocks_;
  std::array<Index, 4> offsets_{ 0, 0, 0, 0 };
};

struct NewtonOutcome
{
  VectorXd theta;
  double ll = -kInf;
  double gradient_norm = kInf;
  int iterations = 0;
  bool converged = false;
};

// Solves (-H) d = g, adding a ridge until the system is positive definite.
VectorXd
ascent_direction(const MatrixXd& hess, const VectorXd& grad)
{
  const MatrixXd info = -hess;
  const double scale = std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
  double ridge = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    MatrixXd a = info;
    a.diagonal().array() += ridge;
    Eigen::LDLT<MatrixXd> ldlt(a);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 1e-14 * scale).all()) {
      VectorXd d = ldlt.solve(grad);
      if (d.allFinite())
        return d;
    }
    ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 10.0;
  }
  return grad / scale;
}

NewtonOutcome
newton(const Objective& objective, VectorXd theta, const FitOptions& options, bool check_separation)
{
  NewtonOutcome out;
  auto current = objective.evaluate(theta, 2);
  if (!current.valid) {
    out.theta = theta;
    return out;
  }
  for (int iter = 0;; ++iter) {
    out.theta = theta;
    out.ll = current.ll;
    out.iterations = iter;
    out.gradient_norm = current.grad.cwiseAbs().maxCoeff();
    const VectorXd direction = ascent_direction(current.hess, current.grad);
    // Under separation the gradient vanishes while Newton steps stay O(1).
    const bool drifting = check_separation && direction.cwiseAbs().maxCoeff() > 0.1;
    if (out.gradient_norm <= options.gradient_tolerance && !drifting) {
      out.converged = true;
      return out;
    }
    if (iter >= options.max_iterations)
      return out;

    const double predicted = current.grad.dot(direction);
    if (predicted <= 1e-12 * std::max(1.0, std::abs(current.ll))) {
      // Gain below log-likelihood rounding: judge the full step by the
      // gradient instead.
      auto trial = objective.evaluate(theta + direction, 2);
      if (trial.valid && !objective.crosses_wall(theta, theta + direction) &&
          trial.grad.cwiseAbs().maxCoeff() < out.gradient_norm) {
        theta += direction;
        current = std::move(trial);
        if (check_separation && theta.cwiseAbs().maxCoeff() > kSeparationBound)
          throw SeparationError("logistic coefficients diverge (|beta| > 30): the outcomes are "
                                "(quasi-)completely separated by the covariates");
        continue;
      }
      out.converged = true;
      return out;
    }
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 50; ++halving, step *= 0.5) {
      const VectorXd candidate = theta + step * direction;
      const auto trial = objective.evaluate(candidate, 0);
      if (trial.valid && trial.ll >= current.ll && !objective.crosses_wall(theta, candidate)) {
        theta = candidate;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      return out;
    if (check_separation && theta.cwiseAbs().maxCoeff() > kSeparationBound)
      throw SeparationError("logistic coefficients diverge (|beta| > 30): the outcomes are "
                            "(quasi-)completely separated by the covariates");
    current = objective.evaluate(theta, 2);
  }
}

// Starting points for the count block under the family link.
std::vector<VectorXd>
count_block_starts(const Family& family, const MatrixXd& x, const CountVector& y)
{
  const VectorXd yd = y.cast<double>();
  const double ybar = yd.mean();
  const Index p = x.cols();
  const Index icpt = intercept_index(x);
  std::vector<VectorXd> starts;
  auto intercept_only = [&](double value) {
    VectorXd t = VectorXd::Zero(p);
    if (icpt >= 0)
      t(icpt) = value;
    return t;
  };
  switch (family.link) {
    case Link::Log:
      starts.push_back(least_squares(x, (yd.array() + 0.5).log().matrix()));
      starts.push_back(intercept_only(std::log(std::max(ybar, 1e-3))));
      break;
    case Link::Logit: {
      const VectorXd mu = (yd.array() + 0.5) / 2.0;
      starts.push_back(least_squares(x, (mu.array() / (1.0 - mu.array())).log().matrix()));
      starts.push_back(intercept_only(std::log(ybar / (1.0 - ybar))));
      break;
    }
    case Link::Identity:
      starts.push_back(least_squares(x, (yd.array() + 0.5).matrix()));
      starts.push_back(intercept_only(std::max(ybar, 1e-3)));
      break;
    case Link::Sqrt: {
      const VectorXd root = yd.array().sqrt().matrix();
      starts.push_back(intercept_only(std::sqrt(std::max(ybar, 1e-3))));
      starts.push_back(least_squares(x, (yd.array() + 0.5).sqrt().matrix()));
      // lambda = (x'b)^2 only sees |x'b|: the signed linear predictor is
      // recovered by a spectral start refined with alternating sign
      // assignment and least squares.
      const MatrixXd m = x.transpose() * (x.array().colwise() * yd.array()).matrix() /
                         static_cast<double>(x.rows());
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
      const auto refine = [&](VectorXd beta) {
        const double spread = (x * beta).squaredNorm() / static_cast<double>(x.rows());
        if (!(spread > 0.0))
          return;
        beta *= std::sqrt(std::max(ybar, 1e-3) / spread);
        for (int iter = 0; iter < 50; ++iter) {
          const VectorXd eta = x * beta;
          const VectorXd signed_root =
            (eta.array() >= 0.0).select(root.array(), -root.array()).matrix();
          beta = least_squares(x, signed_root);
        }
        starts.push_back(beta);
      };
      refine(starts.back());
      for (Index k = p - 1; k >= std::max<Index>(0, p - 2); --k)
        refine(eig.eigenvectors().col(k));
      if (p >= 2)
        refine(eig.eigenvectors().col(p - 1) + eig.eigenvectors().col(p - 2));
      break;
    }
  }
  return starts;
}

std::vector<VectorXd>
initial_points(const ModelSpec& spec, const Dataset& data, const Objective& objective,
               const FitOptions& options)
{
  const MatrixXd& xc = objective.block(0);
  const Index dim = objective.dimension();
  std::vector<VectorXd> starts;
  if (!spec.family.is_mixture()) {
    for (const auto& c : count_block_starts(spec.family, xc, data.outcomes)) {
      VectorXd t = VectorXd::Zero(dim);
      t.head(xc.cols()) = c;
      starts.push_back(t);
    }
    return starts;
  }

  // Two-stage start: plain Poisson on the count block, then inflation
  // intercepts from the excess zero / one frequencies.
  ModelSpec poisson_spec;
  poisson_spec.family = Family{ FamilyKind::Poisson, Link::Log };
  poisson_spec.count_columns = spec.count_columns;
  Objective poisson(poisson_spec, data, kNaN);
  NewtonOutcome best;
  for (const auto& c : count_block_starts(poisson_spec.family, xc, data.outcomes)) {
    auto o = newton(poisson, c, options, false);
    if (o.ll > best.ll)
      best = o;
  }
  VectorXd count = best.theta.size() == xc.cols() ? best.theta
                                                  : count_block_starts(poisson_spec.family, xc,
                                                                       data.outcomes)
                                                      .front();
  const VectorXd lambda = (xc * count).array().exp().matrix();
  const double n = static_cast<double>(data.rows());
  const double zeros = (data.outcomes.array() == 0).cast<double>().sum() / n;
  const double ones = (data.outcomes.array() == 1).cast<double>().sum() / n;
  const double expected_zeros = (-lambda.array()).exp().mean();
  const double expected_ones = (lambda.array() * (-lambda.array()).exp()).mean();
  const double pi0 = std::clamp(zeros - expected_zeros, 0.01, 0.5);
  const double pi1 = spec.family.kind == FamilyKind::ZOIP
                       ? std::clamp(ones - expected_ones, 0.01, 0.4)
                       : 0.0;
  const double w = 1.0 - pi0 - pi1;

  VectorXd t = VectorXd::Zero(dim);
  t.head(xc.cols()) = count;
  const Index z_icpt = intercept_index(objective.block(1));
  if (z_icpt >= 0)
    t(objective.offset(1) + z_icpt) = std::log(pi0 / w);
  if (spec.family.kind == FamilyKind::ZOIP) {
    const Index o_icpt = intercept_index(objective.block(2));
    if (o_icpt >= 0)
      t(objective.offset(2) + o_icpt) = std::log(pi1 / w);
  }
  starts.push_back(t);
  return starts;
}

NewtonOutcome
best_of_starts(const Objective& objective, const std::vector<VectorXd>& starts,
               const FitOptions& options, bool check_separation)
{
  NewtonOutcome best;
  bool have = false;
  for (const auto& s : starts) {
    if (!objective.evaluate(s, 0).valid)
      continue;
    auto o = newton(objective, s, options, check_separation);
    const bool better = !have || (o.converged && !best.converged) ||
                        (o.converged == best.converged && o.ll > best.ll);
    if (better) {
      best = std::move(o);
      have = true;
    }
  }
  if (!have)
    throw DomainError("no admissible starting point (fitted means outside the link's domain)");
  return best;
}

void
check_block(const Dataset& data, const std::vector<Index>& columns, const char* name)
{
  for (const auto c : columns)
    if (c < 0 || c >= data.design.cols())
      throw DomainError(std::string(name) + " block references column " + std::to_string(c) +
                        " but the design has " + std::to_string(data.design.cols()) + " columns");
  if (columns.empty())
    return;
  const MatrixXd x = select_columns(data.design, columns);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  if (qr.rank() < x.cols())
    throw SingularDesignError(std::string(name) + " block design is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(x.cols()) + ")");
}

} // namespace

bool
has_continuous_covariate(const Dataset& data)
{
  for (Index j = 0; j < data.design.cols(); ++j) {
    std::set<double> distinct;
    for (Index i = 0; i < data.design.rows() && distinct.size() <= 2; ++i)
      distinct.insert(data.design(i, j));
    if (distinct.size() > 2)
      return true;
  }
  return false;
}

Index
ModelSpec::parameter_count() const
{
  return static_cast<Index>(count_columns.size() + zero_columns.size() + one_columns.size());
}

Family
FittedModel::family() const
{
  Family f = spec.family;
  if (f.kind == FamilyKind::NegativeBinomial)
    f.size = coefficients.size;
  return f;
}

void
validate(const ModelSpec& spec, const Dataset& data)
{
  const auto& fam = spec.family;
  const bool link_ok =
    (fam.kind == FamilyKind::Poisson &&
     (fam.link == Link::Log || fam.link == Link::Sqrt || fam.link == Link::Identity)) ||
    (fam.kind == FamilyKind::Bernoulli && fam.link == Link::Logit) ||
    (fam.kind != FamilyKind::Poisson && fam.kind != FamilyKind::Bernoulli && fam.link == Link::Log);
  if (!link_ok)
    throw UnsupportedFamilyError("link '" + std::string(to_string(fam.link)) +
                                 "' is not supported for family '" +
                                 std::string(to_string(fam.kind)) + "'");
  if (data.design.rows() != data.outcomes.size())
    throw DomainError("design has " + std::to_string(data.design.rows()) + " rows but there are " +
                      std::to_string(data.outcomes.size()) + " outcomes");
  if (data.design.rows() == 0)
    throw DomainError("empty dataset");
  if (!data.design.allFinite())
    throw DomainError("design contains non-finite values");
  if (spec.count_columns.empty())
    throw DomainError("count/mean block has no columns");
  const bool wants_zero = fam.is_mixture();
  const bool wants_one = fam.kind == FamilyKind::ZOIP;
  if (wants_zero != !spec.zero_columns.empty())
    throw DomainError(wants_zero ? "zero-inflation block has no columns"
                                 : "zero-inflation block given for a non-mixture family");
  if (wants_one != !spec.one_columns.empty())
    throw DomainError(wants_one ? "one-inflation block has no columns"
                                : "one-inflation block given for a family without one inflation");
  if (fam.kind == FamilyKind::NegativeBinomial && spec.fixed_size && !(fam.size > 0.0))
    throw DomainError("fixed NB size must be positive");
  if (data.design.rows() < spec.parameter_count())
    throw DomainError("fewer observations than parameters");
  for (Index i = 0; i < data.outcomes.size(); ++i) {
    if (data.outcomes(i) < 0)
      throw DomainError("negative outcome at row " + std::to_string(i + 1));
    if (fam.kind == FamilyKind::Bernoulli && data.outcomes(i) > 1)
      throw DomainError("Bernoulli outcome must be 0 or 1 (row " + std::to_string(i + 1) + ")");
  }
  check_block(data, spec.count_columns, "count");
  check_block(data, spec.zero_columns, "zero");
  check_block(data, spec.one_columns, "one");
}

VectorXd
pack(const ModelSpec& spec, const Coefficients& c)
{
  VectorXd theta(spec.parameter_count());
  Index o = 0;
  auto put = [&](const VectorXd& v, std::size_t expected, const char* name) {
    if (static_cast<std::size_t>(v.size()) != expected)
      throw DomainError(std::string(name) + " coefficients have the wrong length");
    theta.segment(o, v.size()) = v;
    o += v.size();
  };
  put(c.count, spec.count_columns.size(), "count");
  put(c.zero, spec.zero_columns.size(), "zero");
  put(c.one, spec.one_columns.size(), "one");
  return theta;
}

Coefficients
unpack(const ModelSpec& spec, const VectorXd& theta, double size)
{
  Coefficients c;
  const auto nc = static_cast<Index>(spec.count_columns.size());
  const auto nz = static_cast<Index>(spec.zero_columns.size());
  const auto no = static_cast<Index>(spec.one_columns.size());
  c.count = theta.segment(0, nc);
  c.zero = theta.segment(nc, nz);
  c.one = theta.segment(nc + nz, no);
  c.size = size;
  return c;
}

LinearPredictor
linear_predictor(const ModelSpec& spec, const Coefficients& c,
                 const Eigen::Ref<const Eigen::RowVectorXd>& row)
{
  auto dot = [&](const std::vector<Index>& cols, const VectorXd& beta) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j)
      s += row(cols[j]) * beta(static_cast<Index>(j));
    return s;
  };
  LinearPredictor lp;
  lp.mean = dot(spec.count_columns, c.count);
  if (!spec.zero_columns.empty())
    lp.zero = dot(spec.zero_columns, c.zero);
  if (!spec.one_columns.empty())
    lp.one = dot(spec.one_columns, c.one);
  return lp;
}

namespace {
double
size_for(const ModelSpec& spec, const Coefficients& c)
{
  if (spec.family.kind != FamilyKind::NegativeBinomial)
    return kNaN;
  const double size = std::isnan(c.size) ? spec.family.size : c.size;
  if (!(size > 0.0))
    throw DomainError("NB size must be positive");
  return size;
}
// Observed information over (beta, size) for NB: appends the size row and
// column to the beta block. psi(y + r) - psi(r) and its derivative are the
// finite sums over j < y of 1 / (r + j) and -1 / (r + j)^2.
MatrixXd
augment_with_size(const MatrixXd& info, const MatrixXd& x, const CountVector& y, const VectorXd& beta,
                  double r)
{
  const Index p = info.rows();
  MatrixXd out = MatrixXd::Zero(p + 1, p + 1);
  out.topLeftCorner(p, p) = info;
  const VectorXd eta = x * beta;
  double hrr = 0.0;
  VectorXd hrb = VectorXd::Zero(p);
  for (Index i = 0; i < x.rows(); ++i) {
    const double yd = y(i);
    const double lambda = std::exp(eta(i));
    double trigamma_diff = 0.0;
    for (long j = 0; j < y(i); ++j)
      trigamma_diff -= 1.0 / ((r + j) * (r + j));
    const double rl = r + lambda;
    hrr += trigamma_diff + 1.0 / r - 2.0 / rl + (r + yd) / (rl * rl);
    hrb += x.row(i).transpose() * ((yd - lambda) * lambda / (rl * rl));
  }
  out(p, p) = -hrr;
  out.block(0, p, p, 1) = -hrb;
  out.block(p, 0, 1, p) = -hrb.transpose();
  return out;
}

} // namespace

double
loglik(const ModelSpec& spec, const Dataset& data, const Coefficients& coefficients)
{
  Objective objective(spec, data, size_for(spec, coefficients));
  return objective.evaluate(pack(spec, coefficients), 0).ll;
}

VectorXd
score(const ModelSpec& spec, const Dataset& data, const Coefficients& coefficients)
{
  Objective objective(spec, data, size_for(spec, coefficients));
  auto e = objective.evaluate(pack(spec, coefficients), 1);
  if (!e.valid)
    throw DomainError("score evaluated outside the parameter domain");
  return e.grad;
}

MatrixXd
hessian(const ModelSpec& spec, const Dataset& data, const Coefficients& coefficients)
{
  Objective objective(spec, data, size_for(spec, coefficients));
  auto e = objective.evaluate(pack(spec, coefficients), 2);
  if (!e.valid)
    throw DomainError("Hessian evaluated outside the parameter domain");
  return e.hess;
}

FittedModel
fit(const ModelSpec& spec, const Dataset& data, const FitOptions& options)
{
  validate(spec, data);
  const bool logistic = spec.family.kind == FamilyKind::Bernoulli;
  if (logistic) {
    const double ybar = data.outcomes.cast<double>().mean();
    if (ybar == 0.0 || ybar == 1.0)
      throw SeparationError("all outcomes are identical; the logistic MLE does not exist");
  }

  NewtonOutcome result;
  double size = kNaN;
  if (spec.family.kind == FamilyKind::NegativeBinomial && !spec.fixed_size) {
    // Profile likelihood over log(size), golden-section search.
    ModelSpec fixed = spec;
    Objective pilot(fixed, data, 1.0);
    VectorXd warm = best_of_starts(pilot, initial_points(fixed, data, pilot, options), options,
                                   false)
                      .theta;
    auto profile = [&](double log_size) {
      Objective o(fixed, data, std::exp(log_size));
      auto r = newton(o, warm, options, false);
      if (!r.converged) {
        r = best_of_starts(o, initial_points(fixed, data, o, options), options, false);
      }
      if (r.converged)
        warm = r.theta;
      return r.ll;
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = kMinLogSize, hi = kMaxLogSize;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = profile(x1), f2 = profile(x2);
    while (hi - lo > 1e-7) {
      if (f1 >= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = profile(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = profile(x2);
      }
    }
    size = std::exp(0.5 * (lo + hi));
    Objective final_objective(fixed, data, size);
    std::vector<VectorXd> starts{ warm };
    for (auto& s : initial_points(fixed, data, final_objective, options))
      starts.push_back(s);
    result = best_of_starts(final_objective, starts, options, false);
  } else {
    if (spec.family.kind == FamilyKind::NegativeBinomial)
      size = spec.family.size;
    Objective objective(spec, data, size);
    result = best_of_starts(objective, initial_points(spec, data, objective, options), options,
                            logistic);
  }

  // lambda = (x'b)^2 is invariant under b -> -b; report the sign whose linear
  // predictor is positive on average.
  if (spec.family.kind == FamilyKind::Poisson && spec.family.link == Link::Sqrt) {
    const MatrixXd xc = select_columns(data.design, spec.count_columns);
    if ((xc * result.theta).sum() < 0.0)
      result.theta = -result.theta;
  }

  FittedModel model;
  model.spec = spec;
  model.coefficients = unpack(spec, result.theta, size);
  model.iterations = result.iterations;
  model.converged = result.converged;
  model.gradient_norm = result.gradient_norm;

  Objective objective(spec, data, size);
  const auto at_optimum = objective.evaluate(result.theta, 2);
  model.loglik = at_optimum.ll;
  const bool profiled = spec.family.kind == FamilyKind::NegativeBinomial && !spec.fixed_size;
  const Index p = result.theta.size();
  VectorXd se = VectorXd::Constant(p, kNaN);
  double size_se = kNaN;
  if (at_optimum.valid) {
    MatrixXd info = -at_optimum.hess;
    if (profiled)
      info = augment_with_size(info, select_columns(data.design, spec.count_columns), data.outcomes,
                               result.theta, size);
    Eigen::LDLT<MatrixXd> ldlt(info);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 0.0).all()) {
      const MatrixXd cov = ldlt.solve(MatrixXd::Identity(info.rows(), info.cols()));
      const VectorXd d = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
      se = d.head(p);
      if (profiled)
        size_se = d(p);
    }
  }
  model.std_errors = unpack(spec, se, size_se);

  if (!model.converged)
    throw ConvergenceError("Newton-Raphson did not converge in " +
                             std::to_string(options.max_iterations) +
                             " iterations (gradient max-norm " +
                             std::to_string(model.gradient_norm) + ")",
                           model);
  return model;
}

Distribution
predict_distribution(const FittedModel& fitted, const Eigen::Ref<const Eigen::RowVectorXd>& row)
{
  return make_distribution(fitted.family(),
                           linear_predictor(fitted.spec, fitted.coefficients, row));
}

double
predict_cdf(const FittedModel& fitted, const Eigen::Ref<const Eigen::RowVectorXd>& row, long k)
{
  return predict_distribution(fitted, row).cdf(k);
}

} // namespace discres
