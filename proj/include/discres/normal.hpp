#pragma once

namespace discres {

//! Standard normal distribution function.
double normal_cdf(double x);

//! Standard normal quantile (Wichura's AS 241, ~1e-16 relative accuracy).
//! Inputs are clamped to [1e-15, 1 - 1e-15] so the result is always finite.
double normal_quantile(double p);

inline constexpr double kQuantileClamp = 1e-15;

} // namespace discres
