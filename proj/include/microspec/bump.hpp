#pragma once

namespace microspec {

// Profile b(u) = exp(-u^2 / (1 - u^2)) on |u| < 1, zero elsewhere; b(0) = 1.
double bump(double u);
double bump_d1(double u);
double bump_d2(double u);

/// Fourier transform of the profile, int b(u) exp(-i kappa u) du (real, even).
/// Tabulated by piecewise Chebyshev interpolation; zero beyond kBumpFtCutoff.
double bump_ft(double kappa);

/// Non-increasing upper bound of |bump_ft| on [|kappa|, infinity).
double bump_ft_envelope(double kappa);

inline constexpr double kBumpFtCutoff = 1200.0;

/// Same profile evaluated by a direct trapezoid sum (slow, used for checks).
double bump_ft_direct(double kappa);

}  // namespace microspec
