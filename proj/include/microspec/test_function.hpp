#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "microspec/quadrature.hpp"

namespace microspec {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Constant-coefficient differential operator of order at most two,
/// sum_a d_a * (d/dx)^a. Index order: 1, d0, d1, d0d0, d0d1, d1d1.
struct DiffPoly {
    std::array<cplx, 6> c{cplx(1.0), 0.0, 0.0, 0.0, 0.0, 0.0};

    static DiffPoly identity() { return {}; }
    static DiffPoly zero();
    static DiffPoly partial(int axis);
    /// Klein-Gordon operator d0^2 - d1^2 + m^2.
    static DiffPoly klein_gordon(double mass);

    int order() const;
    bool is_identity() const;
    DiffPoly compose(const DiffPoly& other) const;  // this o other
    DiffPoly transpose() const;                     // formal adjoint without conjugation
    DiffPoly operator*(cplx s) const;
    DiffPoly operator+(const DiffPoly& o) const;

    /// Fourier multiplier sum_a d_a (i Q)^a.
    cplx symbol(double q0, double q1) const;
    /// Multiplier on the mass shell Q = +-(omega, -k), using Q0^2 = k^2 + m^2
    /// and Q1^2 = k^2 so that the Klein-Gordon symbol vanishes exactly.
    cplx symbol_on_shell(double q0, double q1, double k, double mass) const;
    /// Upper bound of |symbol| for |Q_i| <= qmax_i.
    double symbol_bound(double qmax0, double qmax1) const;
};

enum class Envelope { bump, gaussian };

/// One term: coef * D[ B(M (x - c)) exp(i q.x) ] with envelope B.
struct TestTerm {
    cplx coef{1.0};
    Envelope envelope = Envelope::bump;
    Vec2 center = Vec2::Zero();
    Mat2 shape = Mat2::Identity();
    Vec2 modulation = Vec2::Zero();
    DiffPoly diff;

    bool diagonal() const { return shape(0, 1) == 0.0 && shape(1, 0) == 0.0; }
};

struct Box {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Zero();
};

/// Smooth compactly supported (bump) or Schwartz (gaussian) test function on
/// R or R^2, stored as a finite sum of closed-form terms.
class TestFunction {
public:
    TestFunction() = default;
    explicit TestFunction(int dim) : dim_(dim) {}

    static TestFunction bump(int dim, const Vec2& center, double radius,
                             const Vec2& modulation = Vec2::Zero(), cplx coef = 1.0);
    static TestFunction gaussian(int dim, const Vec2& center, double width,
                                 const Vec2& modulation = Vec2::Zero(), cplx coef = 1.0);
    /// Real function amp * bump * cos(q.x).
    static TestFunction cosine_bump(int dim, const Vec2& center, double radius, const Vec2& q,
                                    double amp = 1.0);

    int dim() const { return dim_; }
    bool empty() const { return terms_.empty(); }
    const std::vector<TestTerm>& terms() const { return terms_; }
    void add_term(const TestTerm& t) { terms_.push_back(t); }

    cplx value(const Vec2& x) const;
    cplx fourier(const Vec2& k) const;  // int f(x) exp(-i k.x) dx
    Box support() const;

    TestFunction operator+(const TestFunction& o) const;
    TestFunction scaled(cplx s) const;
    TestFunction translated(const Vec2& y) const;  // x -> f(x - y)
    TestFunction pulled_back(const Mat2& a) const;  // x -> f(a x)
    TestFunction modulated(const Vec2& q) const;    // x -> f(x) exp(i q.x)
    TestFunction conjugated() const;
    TestFunction apply(const DiffPoly& d) const;
    TestFunction derivative(int axis) const { return apply(DiffPoly::partial(axis)); }

    /// Crude sup-norm bound sum |coef| * sup|D(B e)|.
    double sup_bound() const;
    /// L1 norm by quadrature over the support box.
    double l1_norm(int nodes_per_axis = 64) const;

private:
    int dim_ = 1;
    std::vector<TestTerm> terms_;
};

/// Value of a single term.
cplx term_value(const TestTerm& t, int dim, const Vec2& x);
/// Fourier transform of a single term at Q.
cplx term_fourier(const TestTerm& t, int dim, const Vec2& q);
/// Same with the differential operator of the term left out.
cplx term_fourier_undifferentiated(const TestTerm& t, int dim, const Vec2& q);
/// Fourier transform of the envelope (no coefficient, phase or multiplier) at kappa.
double envelope_fourier(Envelope e, int dim, const Vec2& kappa);
/// Non-increasing bound for one axis of the envelope transform.
double envelope_axis_bound(Envelope e, double kappa);
/// Axis argument beyond which the envelope transform is treated as zero.
double envelope_cutoff(Envelope e);

}  // namespace microspec
