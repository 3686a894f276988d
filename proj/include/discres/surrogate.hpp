#pragma once

#include "discres/fitting.hpp"
#include "discres/grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace discres {

enum class KernelKind
{
  Epanechnikov,
  Quartic,
};

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

//! Compactly supported kernel on [-1, 1].
double kernel_eval(KernelKind kind, double u);

//! Integral of K, R2 = int K^2 and kappa2 = int u^2 K, by Gauss-Legendre
//! quadrature (exact for the polynomial kernels here).
struct KernelConstants
{
  double integral = 0.0;
  double r2 = 0.0;
  double kappa2 = 0.0;
};
KernelConstants kernel_constants(KernelKind kind);

//! Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
struct Quadrature
{
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
Quadrature gauss_legendre(int order);

//! Value of U-hat at one s. `defined` is false when every kernel weight is
//! zero; `effective_n` is the unnormalized weight mass sum_i K[(H_i - s)/eps].
struct UHat
{
  double value = 0.0;
  double effective_n = 0.0;
  bool defined = false;
};

//! U-hat(s) = sum_i W_i 1[F-hat(Y_i|X_i) <= H_i] with W_i proportional to
//! K[(H_i - s)/eps], given the grid points H_i = H(s; X_i).
UHat u_hat_from(double s, std::span<const double> h, std::span<const double> cox_snell,
                KernelKind kernel, double bandwidth);

//! Normalized weights W_i(s); all zero when U-hat is undefined at s.
Eigen::VectorXd surrogate_weights(double s, std::span<const double> h, KernelKind kernel,
                                  double bandwidth);

//! Per-observation distribution grids and Cox-Snell residuals under a fit.
class SurrogateInputs
{
public:
  SurrogateInputs(std::vector<DistributionGrid> grids, Eigen::VectorXd cox_snell);

  static SurrogateInputs from_fit(const FittedModel& fitted, const Dataset& data);

  std::size_t size() const { return grids_.size(); }
  const std::vector<DistributionGrid>& grids() const { return grids_; }
  const Eigen::VectorXd& cox_snell() const { return cox_snell_; }

  //! H(s; X_i) for every observation.
  Eigen::VectorXd h_values(double s) const;
  //! Row j holds H(s_grid[j]; X_i) over observations i.
  Eigen::MatrixXd h_matrix(std::span<const double> s_grid, int workers = 1) const;

private:
  std::vector<DistributionGrid> grids_;
  Eigen::VectorXd cox_snell_;
};

UHat u_hat(double s, const SurrogateInputs& inputs, KernelKind kernel, double bandwidth);

//! A point is low-information when its kernel mass is below this.
inline constexpr double kLowInformationMass = 5.0;

struct CurvePoint
{
  double s = 0.0;
  std::optional<double> u; //!< empty where U-hat is undefined
  double effective_n = 0.0;

  bool defined() const { return u.has_value(); }
  bool low_information() const { return effective_n < kLowInformationMass; }
};

struct SurrogateCurve
{
  std::vector<CurvePoint> points;
  double bandwidth = 0.0;
  KernelKind kernel = KernelKind::Epanechnikov;
};

SurrogateCurve surrogate_curve(const SurrogateInputs& inputs, KernelKind kernel, double bandwidth,
                               std::span<const double> s_grid, int workers = 1);

//! Curve from precomputed grid points (rows of `h` indexed like `s_grid`).
SurrogateCurve surrogate_curve_from_h(const Eigen::MatrixXd& h, const Eigen::VectorXd& cox_snell,
                                      KernelKind kernel, double bandwidth,
                                      std::span<const double> s_grid, int workers = 1);

struct BandwidthSelection
{
  double bandwidth = 0.0;
  std::vector<double> mesh;
  std::vector<double> objective;
};

//! Argmin over `mesh` of the Riemann sum of (U-hat(s) - s)^2 over `s_grid`.
//! Undefined points are charged max(s, 1 - s)^2. Ties go to the smaller mesh
//! index. Throws SelectionError when no mesh value defines any point.
BandwidthSelection select_bandwidth(const SurrogateInputs& inputs, KernelKind kernel,
                                    std::span<const double> s_grid, std::span<const double> mesh,
                                    int workers = 1);
BandwidthSelection select_bandwidth_from_h(const Eigen::MatrixXd& h,
                                           const Eigen::VectorXd& cox_snell, KernelKind kernel,
                                           std::span<const double> s_grid,
                                           std::span<const double> mesh, int workers = 1);

double bandwidth_objective(const SurrogateCurve& curve);

//! `count` log-spaced values on [0.5, 3] * n^{-1/5} * sd(H(0.5; X_i)).
std::vector<double> default_bandwidth_mesh(const SurrogateInputs& inputs, std::size_t count = 25);

std::vector<double> linspace(double lo, double hi, std::size_t count);

//! 121 equally spaced points on [0.05, 0.95].
std::vector<double> default_s_grid();

//! Midpoint-cell widths of the grid points inside [lo, hi]: each point owns
//! the half-way interval to its neighbours, clipped to [lo, hi]. Points
//! outside the range get zero. The widths sum to hi - lo when any point is
//! inside.
std::vector<double> riemann_weights(std::span<const double> s_grid, double lo, double hi);

//! Riemann sum of (U-hat(s) - s)^2 over the defined points in [lo, hi].
//! Throws UndefinedDistanceError when none is defined.
double l2_distance(const SurrogateCurve& curve, double lo, double hi);

//! max |U-hat(s) - s| over defined points in [lo, hi]; nullopt when none.
std::optional<double> sup_deviation(const SurrogateCurve& curve, double lo, double hi);

struct DiagnosticOptions
{
  KernelKind kernel = KernelKind::Epanechnikov;
  std::vector<double> s_grid = default_s_grid();
  std::optional<double> bandwidth; //!< selected from the mesh when empty
  std::size_t mesh_size = 25;
  double l2_lo = 0.3;
  double l2_hi = 0.9;
  int workers = 1;
};

struct Diagnostic
{
  SurrogateCurve curve;
  std::optional<BandwidthSelection> selection;
  std::optional<double> l2; //!< empty when undefined over the L2 range
};

//! Grids, bandwidth selection, curve and L2 distance for one fitted model.
Diagnostic diagnose(const FittedModel& fitted, const Dataset& data, const DiagnosticOptions& options);

} // namespace discres
