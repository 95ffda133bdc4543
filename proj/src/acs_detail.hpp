#pragma once

#include <vector>

#include "microspec/acs.hpp"

namespace microspec::detail {

// One factor F[fn](s omega + shift0, t k + shift1) of a mode integrand. A
// one-dimensional fn only sees the time argument.
struct Factor {
    const TestFunction* fn = nullptr;
    int s = 0;
    int t = 0;
    Vec2 shift = Vec2::Zero();
};

// int dk / (4 pi omega) weight(omega) prod_j factor_j over the channel.
// `smooth` integrands (no oscillation in k) use geometric panels.
cplx factor_integral(const ModeChannel& ch, double mass, const std::vector<Factor>& fs,
                     double skip_tol, bool smooth = false);
// Same integral of the product of term-wise transform magnitudes.
double factor_magnitude(const ModeChannel& ch, double mass, const std::vector<Factor>& fs,
                        double skip_tol);

// Envelope and element of one Weyl slot at a fixed scale. The element
// already carries the field strength eps.
struct WeylSlot {
    TestFunction element{2};
    TestFunction envelope{2};
};

// First-order expansion of
//   int exp(-i sum_j K_j.y_j) prod_j h_j(y_j) omega(W(alpha_{y_1} f_1) ...) dy
// in the connected two-point contributions. `remainder` bounds the rest
// uniformly in K; both are divided by prod_j |h_j|_1.
class WeylExpansion {
public:
    WeylExpansion(const QuasifreeState& state, std::vector<WeylSlot> slots, double skip_tol);
    cplx value(const std::vector<Vec2>& K) const;
    double remainder() const { return remainder_; }
    double envelope_norm() const { return norm_; }
    cplx phase0() const { return phi0_; }

private:
    const QuasifreeState* state_;
    std::vector<WeylSlot> slots_;
    double skip_tol_;
    std::vector<ModeChannel> diagonal_;  // sf + sh = 0
    std::vector<ModeChannel> oscillating_;
    cplx phi0_ = 0.0;
    double remainder_ = 0.0;
    double norm_ = 1.0;
};

// Ladder with the remainder rule: a rung is trusted when its amplitude
// exceeds ten times the remainder; a regular verdict needs every remainder
// under the floor.
DecayLadder classify_with_remainder(const std::vector<double>& scales, const std::vector<double>& amps,
                                    const std::vector<double>& rems, const LadderConfig& cfg);

}  // namespace microspec::detail
