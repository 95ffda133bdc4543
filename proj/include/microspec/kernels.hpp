#pragma once

#include <functional>
#include <vector>

#include "microspec/microlocal.hpp"

namespace microspec {

// One-dimensional reference distributions. Each kernel pairs with ordinary
// test functions in position space and with spectrally given test functions
// through its Fourier transform u^, using u(g) = (1/2pi) int g^(q) u^(-q) dq.

SmearableKernel delta_kernel(double a = 0.0);
/// f -> -f'(a).
SmearableKernel delta_prime_kernel(double a = 0.0);
/// f -> int_a^inf f.
SmearableKernel heaviside_kernel(double a = 0.0);
/// f -> int f(x) exp(-(x - a)^2) dx.
SmearableKernel gaussian_density_kernel(double a = 0.0);
/// f -> lim int f(x) / (x - a + i eps) dx = -i int_0^inf exp(-i q a) f^(-q) dq.
SmearableKernel boundary_value_kernel(double a = 0.0);

struct ReferenceKernel {
    SmearableKernel kernel;
    /// Analytic wavefront set membership of (x, direction sign).
    std::function<bool(double, double)> in_wavefront;
};

/// The five kernels above, each centred at the origin.
std::vector<ReferenceKernel> reference_kernels();

/// Spectral description of a 1D test function (transform, bound, support, panel width).
SpectralTest spectral_test(const TestFunction& f);

/// int f(x) w(x) dx over [lo, hi] for a 1D test function, term by term with
/// panels fine enough for the modulation.
cplx integrate_against(const TestFunction& f, const std::function<double(double)>& w, double lo,
                       double hi);

}  // namespace microspec
