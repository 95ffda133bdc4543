#include <random>

#include "doctest.h"
#include "microspec/bump.hpp"
#include "microspec/expression.hpp"
#include "microspec/errors.hpp"
#include "microspec/quadrature.hpp"
#include "microspec/test_function.hpp"

using namespace microspec;

namespace {

// Brute-force 2D transform on a uniform midpoint grid over the support box.
cplx brute_fourier_2d(const TestFunction& f, const Vec2& k, int n = 400) {
    const Box b = f.support();
    const double h0 = (b.hi[0] - b.lo[0]) / n, h1 = (b.hi[1] - b.lo[1]) / n;
    cplx s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 x(b.lo[0] + (i + 0.5) * h0, b.lo[1] + (j + 0.5) * h1);
            s += f.value(x) * std::polar(1.0, -k.dot(x));
        }
    return s * h0 * h1;
}

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    for (int n : {4, 12, 16}) {
        const GaussRule& r = gauss_legendre(n);
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            s += r.weights[i] * std::pow(r.nodes[i], 2 * n - 2);
        CHECK(s == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-13));
    }
}

TEST_CASE("interval intersection") {
    const IntervalSet a{{0, 2}, {5, 7}};
    const IntervalSet b{{1, 6}};
    const IntervalSet c = intersect(a, b);
    REQUIRE(c.size() == 2);
    CHECK(c[0].lo == 1);
    CHECK(c[0].hi == 2);
    CHECK(c[1].lo == 5);
    CHECK(c[1].hi == 6);
}

TEST_CASE("bump transform table matches the direct trapezoid sum") {
    // Independent reference values from a 50-digit quadrature of the profile.
    CHECK(bump_ft(0.0) == doctest::Approx(1.2069003224).epsilon(1e-9));
    CHECK(bump_ft(64.0) == doctest::Approx(-1.59019e-5).epsilon(1e-4));
    double worst = 0.0;
    for (double k = 0.0; k < 1100.0; k += 3.7)
        worst = std::max(worst, std::abs(bump_ft(k) - bump_ft_direct(k)));
    CHECK(worst < 5e-15);
}

TEST_CASE("bump envelope dominates the transform") {
    for (double k = 0.0; k < 1199.0; k += 0.093)
        REQUIRE(std::abs(bump_ft(k)) <= bump_ft_envelope(k));
}

TEST_CASE("bump derivatives match finite differences") {
    for (double u : {-0.8, -0.3, 0.0, 0.45, 0.9}) {
        const double h = 1e-5;
        CHECK(bump_d1(u) == doctest::Approx((bump(u + h) - bump(u - h)) / (2 * h)).epsilon(1e-6));
        CHECK(bump_d2(u) ==
              doctest::Approx((bump_d1(u + h) - bump_d1(u - h)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("closed-form transforms agree with brute-force quadrature") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        TestFunction f = TestFunction::bump(2, Vec2(U(rng), U(rng)), 0.4 + 0.2 * std::abs(U(rng)),
                                            Vec2(3 * U(rng), 3 * U(rng)), cplx(U(rng), U(rng)));
        if (trial % 2 == 1)
            f = f.apply(DiffPoly::klein_gordon(1.0));
        if (trial == 2)
            f = f.pulled_back((Mat2() << 1.2, 0.3, -0.1, 0.9).finished());
        const Vec2 k(4 * U(rng), 4 * U(rng));
        const cplx a = f.fourier(k), b = brute_fourier_2d(f, k);
        CHECK(std::abs(a - b) < 1e-6 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("gaussian envelope transform") {
    const TestFunction g = TestFunction::gaussian(1, Vec2(0.3, 0), 0.7);
    const double k = 2.0;
    const cplx ref = integrate_composite(
        [&](double x) { return g.value(Vec2(x, 0)) * std::polar(1.0, -k * x); }, -7, 7, 0.05, 16);
    CHECK(std::abs(g.fourier(Vec2(k, 0)) - ref) < 1e-12);
}

TEST_CASE("translation, modulation and conjugation act on values") {
    const TestFunction f = TestFunction::bump(2, Vec2(0.1, -0.2), 0.5, Vec2(2.0, -1.0), cplx(0.5, 0.2));
    const Vec2 y(0.3, 0.05), x(0.25, -0.1);
    CHECK(std::abs(f.translated(y).value(x + y) - f.value(x)) < 1e-14);
    const Vec2 q(1.5, 0.5);
    CHECK(std::abs(f.modulated(q).value(x) - f.value(x) * std::polar(1.0, q.dot(x))) < 1e-14);
    CHECK(std::abs(f.conjugated().value(x) - std::conj(f.value(x))) < 1e-14);
    const Mat2 a = (Mat2() << 2.0, 0.5, 0.0, 1.5).finished();
    CHECK(std::abs(f.pulled_back(a).value(x) - f.value(a * x)) < 1e-14);
}

TEST_CASE("derivative terms match finite differences of values") {
    const TestFunction f = TestFunction::bump(2, Vec2(0.0, 0.1), 0.6, Vec2(1.0, 2.0));
    const Vec2 x(0.2, 0.05);
    const double h = 1e-5;
    const Vec2 e0(h, 0), e1(0, h);
    const cplx d0 = (f.value(x + e0) - f.value(x - e0)) / (2 * h);
    const cplx d11 = (f.value(x + e1) - 2.0 * f.value(x) + f.value(x - e1)) / (h * h);
    CHECK(std::abs(f.derivative(0).value(x) - d0) < 1e-6);
    CHECK(std::abs(f.derivative(1).derivative(1).value(x) - d11) < 1e-3);
    CHECK_THROWS(f.derivative(0).derivative(0).derivative(1));
}

TEST_CASE("klein-gordon symbol vanishes exactly on shell") {
    const DiffPoly kg = DiffPoly::klein_gordon(1.3);
    for (double k : {0.0, 0.7, 123.4, 5e4}) {
        const double w = std::sqrt(k * k + 1.3 * 1.3);
        CHECK(kg.symbol_on_shell(w, -k, k, 1.3) == cplx(0.0));
        CHECK(std::abs(kg.symbol(w, -k)) < 1e-9 * (1 + k * k));
    }
}

TEST_CASE("expression grammar") {
    auto f = compile_expression("exp(2*t) + pow(x, 2)/4 - -1");
    CHECK(f(0.5, 2.0) == doctest::Approx(std::exp(1.0) + 1.0 + 1.0));
    CHECK_THROWS_AS(compile_expression("exp(t"), ConfigError);
    CHECK_THROWS_AS(compile_expression("y + 1"), ConfigError);
    CHECK_THROWS_AS(compile_expression("1 +"), ConfigError);
}

TEST_CASE("line fit") {
    const LineFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.r2 == doctest::Approx(1.0));
}
