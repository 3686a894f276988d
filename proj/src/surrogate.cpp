#include "discres/surrogate.hpp"

#include "discres/error.hpp"
#include "discres/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace discres {

std::string_view
to_string(KernelKind kind)
{
  return kind == KernelKind::Quartic ? "quartic" : "epanechnikov";
}

KernelKind
parse_kernel(std::string_view name)
{
  if (name == "epanechnikov")
    return KernelKind::Epanechnikov;
  if (name == "quartic" || name == "biweight")
    return KernelKind::Quartic;
  throw UsageError("unknown kernel '" + std::string(name) + "' (expected epanechnikov, quartic)");
}

double
kernel_eval(KernelKind kind, double u)
{
  if (!(std::abs(u) <= 1.0))
    return 0.0;
  const double v = 1.0 - u * u;
  if (kind == KernelKind::Quartic)
    return 15.0 / 16.0 * v * v;
  return 0.75 * v;
}

Quadrature
gauss_legendre(int order)
{
  // Jacobi matrix of the Legendre recurrence: off-diagonal k / sqrt(4k^2 - 1).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Quadrature q;
  q.nodes = eig.eigenvalues();
  q.weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
  return q;
}

KernelConstants
kernel_constants(KernelKind kind)
{
  const auto q = gauss_legendre(8);
  KernelConstants c;
  for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
    const double u = q.nodes(i);
    const double k = kernel_eval(kind, u);
    c.integral += q.weights(i) * k;
    c.r2 += q.weights(i) * k * k;
    c.kappa2 += q.weights(i) * u * u * k;
  }
  return c;
}

UHat
u_hat_from(double s, std::span<const double> h, std::span<const double> cox_snell,
           KernelKind kernel, double bandwidth)
{
  if (!(bandwidth > 0.0))
    throw DomainError("bandwidth must be positive");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double w = kernel_eval(kernel, (h[i] - s) / bandwidth);
    if (cox_snell[i] <= h[i])
      num += w;
    den += w;
  }
  UHat out;
  out.effective_n = den;
  if (den > 0.0) {
    out.defined = true;
    out.value = num / den;
  }
  return out;
}

Eigen::VectorXd
surrogate_weights(double s, std::span<const double> h, KernelKind kernel, double bandwidth)
{
  Eigen::VectorXd w(static_cast<Eigen::Index>(h.size()));
  for (std::size_t i = 0; i < h.size(); ++i)
    w(static_cast<Eigen::Index>(i)) = kernel_eval(kernel, (h[i] - s) / bandwidth);
  const double total = w.sum();
  if (total > 0.0)
    w /= total;
  return w;
}

SurrogateInputs::SurrogateInputs(std::vector<DistributionGrid> grids, Eigen::VectorXd cox_snell)
  : grids_(std::move(grids))
  , cox_snell_(std::move(cox_snell))
{
  if (static_cast<Eigen::Index>(grids_.size()) != cox_snell_.size())
    throw DomainError("one grid per Cox-Snell residual is required");
}

SurrogateInputs
SurrogateInputs::from_fit(const FittedModel& fitted, const Dataset& data)
{
  std::vector<DistributionGrid> grids;
  grids.reserve(static_cast<std::size_t>(data.rows()));
  Eigen::VectorXd cs(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto dist = predict_distribution(fitted, data.design.row(i));
    grids.push_back(build_grid(dist));
    cs(i) = dist.cdf(data.outcomes(i));
  }
  return SurrogateInputs(std::move(grids), std::move(cs));
}

Eigen::VectorXd
SurrogateInputs::h_values(double s) const
{
  Eigen::VectorXd h(static_cast<Eigen::Index>(grids_.size()));
  for (std::size_t i = 0; i < grids_.size(); ++i)
    h(static_cast<Eigen::Index>(i)) = h_nearest(s, grids_[i]).value;
  return h;
}

Eigen::MatrixXd
SurrogateInputs::h_matrix(std::span<const double> s_grid, int workers) const
{
  Eigen::MatrixXd h(static_cast<Eigen::Index>(s_grid.size()), static_cast<Eigen::Index>(grids_.size()));
  parallel_for(s_grid.size(), workers, [&](std::size_t j) {
    h.row(static_cast<Eigen::Index>(j)) = h_values(s_grid[j]).transpose();
  });
  return h;
}

UHat
u_hat(double s, const SurrogateInputs& inputs, KernelKind kernel, double bandwidth)
{
  const Eigen::VectorXd h = inputs.h_values(s);
  const auto& cs = inputs.cox_snell();
  return u_hat_from(s, { h.data(), static_cast<std::size_t>(h.size()) },
                    { cs.data(), static_cast<std::size_t>(cs.size()) }, kernel, bandwidth);
}

SurrogateCurve
surrogate_curve_from_h(const Eigen::MatrixXd& h, const Eigen::VectorXd& cox_snell, KernelKind kernel,
                       double bandwidth, std::span<const double> s_grid, int workers)
{
  if (h.rows() != static_cast<Eigen::Index>(s_grid.size()) || h.cols() != cox_snell.size())
    throw DomainError("grid-point matrix does not match the s-grid and observations");
  for (const double s : s_grid)
    if (!(s > 0.0 && s < 1.0))
      throw DomainError("s-grid values must lie in (0, 1)");
  SurrogateCurve curve;
  curve.bandwidth = bandwidth;
  curve.kernel = kernel;
  curve.points.resize(s_grid.size());
  const std::span<const double> cs{ cox_snell.data(), static_cast<std::size_t>(cox_snell.size()) };
  parallel_for(s_grid.size(), workers, [&](std::size_t j) {
    // Row of a column-major matrix: copy to contiguous storage.
    const Eigen::VectorXd row = h.row(static_cast<Eigen::Index>(j)).transpose();
    const auto u = u_hat_from(s_grid[j], { row.data(), static_cast<std::size_t>(row.size()) }, cs,
                              kernel, bandwidth);
    CurvePoint p;
    p.s = s_grid[j];
    p.effective_n = u.effective_n;
    if (u.defined)
      p.u = u.value;
    curve.points[j] = p;
  });
  return curve;
}

SurrogateCurve
surrogate_curve(const SurrogateInputs& inputs, KernelKind kernel, double bandwidth,
                std::span<const double> s_grid, int workers)
{
  return surrogate_curve_from_h(inputs.h_matrix(s_grid, workers), inputs.cox_snell(), kernel,
                                bandwidth, s_grid, workers);
}

std::vector<double>
linspace(double lo, double hi, std::size_t count)
{
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t j = 0; j < count; ++j)
    out[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  return out;
}

std::vector<double>
default_s_grid()
{
  return linspace(0.05, 0.95, 121);
}

std::vector<double>
riemann_weights(std::span<const double> s, double lo, double hi)
{
  std::vector<double> w(s.size(), 0.0);
  std::vector<std::size_t> inside;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s[j] >= lo && s[j] <= hi)
      inside.push_back(j);
  for (std::size_t m = 0; m < inside.size(); ++m) {
    const std::size_t j = inside[m];
    const double left = m == 0 ? lo : 0.5 * (s[inside[m - 1]] + s[j]);
    const double right = m + 1 == inside.size() ? hi : 0.5 * (s[j] + s[inside[m + 1]]);
    w[j] = right - left;
  }
  return w;
}

namespace {
std::vector<double>
curve_s(const SurrogateCurve& curve)
{
  std::vector<double> s(curve.points.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    s[j] = curve.points[j].s;
  return s;
}
} // namespace

double
bandwidth_objective(const SurrogateCurve& curve)
{
  if (curve.points.empty())
    return 0.0;
  const auto s = curve_s(curve);
  const auto w = riemann_weights(s, s.front(), s.back());
  double total = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& p = curve.points[j];
    const double dev = p.defined() ? *p.u - p.s : std::max(p.s, 1.0 - p.s);
    total += dev * dev * w[j];
  }
  return total;
}

BandwidthSelection
select_bandwidth_from_h(const Eigen::MatrixXd& h, const Eigen::VectorXd& cox_snell, KernelKind kernel,
                        std::span<const double> s_grid, std::span<const double> mesh, int workers)
{
  if (mesh.empty())
    throw DomainError("bandwidth mesh is empty");
  for (const double e : mesh)
    if (!(e > 0.0))
      throw DomainError("bandwidth mesh values must be positive");
  BandwidthSelection sel;
  sel.mesh.assign(mesh.begin(), mesh.end());
  sel.objective.assign(mesh.size(), 0.0);
  std::vector<char> any_defined(mesh.size(), 0);
  parallel_for(mesh.size(), workers, [&](std::size_t m) {
    const auto curve = surrogate_curve_from_h(h, cox_snell, kernel, mesh[m], s_grid, 1);
    sel.objective[m] = bandwidth_objective(curve);
    any_defined[m] = std::any_of(curve.points.begin(), curve.points.end(),
                                 [](const CurvePoint& p) { return p.defined(); });
  });
  std::size_t best = mesh.size();
  for (std::size_t m = 0; m < mesh.size(); ++m) {
    if (!any_defined[m])
      continue;
    if (best == mesh.size() || sel.objective[m] < sel.objective[best])
      best = m;
  }
  if (best == mesh.size())
    throw SelectionError("U-hat is undefined at every s for every bandwidth on the mesh");
  sel.bandwidth = mesh[best];
  return sel;
}

BandwidthSelection
select_bandwidth(const SurrogateInputs& inputs, KernelKind kernel, std::span<const double> s_grid,
                 std::span<const double> mesh, int workers)
{
  return select_bandwidth_from_h(inputs.h_matrix(s_grid, workers), inputs.cox_snell(), kernel,
                                 s_grid, mesh, workers);
}

std::vector<double>
default_bandwidth_mesh(const SurrogateInputs& inputs, std::size_t count)
{
  const Eigen::VectorXd h = inputs.h_values(0.5);
  const double n = static_cast<double>(h.size());
  double sd = 0.0;
  if (h.size() > 1)
    sd = std::sqrt((h.array() - h.mean()).square().sum() / (n - 1.0));
  // A constant H(0.5; X) (no covariate variation) has no natural scale.
  sd = std::max(sd, 1e-3);
  const double pilot = std::pow(n, -0.2) * sd;
  const double lo = std::log(0.5 * pilot);
  const double hi = std::log(3.0 * pilot);
  std::vector<double> mesh = linspace(lo, hi, count);
  for (auto& e : mesh)
    e = std::exp(e);
  return mesh;
}

double
l2_distance(const SurrogateCurve& curve, double lo, double hi)
{
  const auto s = curve_s(curve);
  const auto w = riemann_weights(s, lo, hi);
  double total = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& p = curve.points[j];
    if (w[j] == 0.0 || !p.defined())
      continue;
    any = true;
    const double dev = *p.u - p.s;
    total += dev * dev * w[j];
  }
  if (!any)
    throw UndefinedDistanceError("no defined curve point in [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
  return total;
}

std::optional<double>
sup_deviation(const SurrogateCurve& curve, double lo, double hi)
{
  std::optional<double> out;
  for (const auto& p : curve.points) {
    if (p.s < lo || p.s > hi || !p.defined())
      continue;
    const double dev = std::abs(*p.u - p.s);
    out = out ? std::max(*out, dev) : dev;
  }
  return out;
}

Diagnostic
diagnose(const FittedModel& fitted, const Dataset& data, const DiagnosticOptions& options)
{
  const auto inputs = SurrogateInputs::from_fit(fitted, data);
  const Eigen::MatrixXd h = inputs.h_matrix(options.s_grid, options.workers);
  Diagnostic out;
  double bandwidth;
  if (options.bandwidth) {
    bandwidth = *options.bandwidth;
  } else {
    const auto mesh = default_bandwidth_mesh(inputs, options.mesh_size);
    out.selection = select_bandwidth_from_h(h, inputs.cox_snell(), options.kernel, options.s_grid,
                                            mesh, options.workers);
    bandwidth = out.selection->bandwidth;
  }
  out.curve = surrogate_curve_from_h(h, inputs.cox_snell(), options.kernel, bandwidth,
                                     options.s_grid, options.workers);
  try {
    out.l2 = l2_distance(out.curve, options.l2_lo, options.l2_hi);
  } catch (const UndefinedDistanceError&) {
    out.l2.reset();
  }
  return out;
}

} // namespace discres
