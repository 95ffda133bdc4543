#include "microspec/kernels.hpp"

#include <cmath>

namespace microspec {

namespace {

constexpr double kPvSplit = 1.0;

double term_reach(const TestTerm& t) { return t.envelope == Envelope::bump ? 1.0 : 8.0; }

cplx delta_value(const TestFunction& f, double a) { return f.value(Vec2(a, 0.0)); }

// int g^(q) m(q) dq over the support of g^, with |m| <= mbound on [lo, hi].
template <class M, class MB>
cplx spectral_integral(const SpectralTest& g, M&& m, MB&& mbound, const IntervalSet& domain) {
    return integrate_skipping([&](double q) { return g.fourier(q) * m(q); },
                              [&](double lo, double hi) { return g.bound(lo, hi) * mbound(lo, hi); },
                              domain, g.fine_width, 1e-26);
}

double max_abs(double lo, double hi) { return std::max(std::abs(lo), std::abs(hi)); }

double min_abs(double lo, double hi) {
    return (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
}

SmearableKernel base_kernel(const std::string& name, const std::string& reference) {
    SmearableKernel k;
    k.name = name;
    k.reference = reference;
    k.arity = 1;
    k.dim = 1;
    return k;
}

}  // namespace

cplx integrate_against(const TestFunction& f, const std::function<double(double)>& w, double lo,
                       double hi) {
    cplx sum = 0.0;
    for (const TestTerm& t : f.terms()) {
        const double half = term_reach(t) / std::abs(t.shape(0, 0));
        const double a = std::max(lo, t.center[0] - half);
        const double b = std::min(hi, t.center[0] + half);
        if (!(b > a))
            continue;
        const double width = std::min(2.0 * half / 24.0, 3.0 / (std::abs(t.modulation[0]) + 1e-9));
        sum += integrate_composite(
            [&](double x) { return term_value(t, 1, Vec2(x, 0.0)) * w(x); }, a, b, width);
    }
    return sum;
}

SpectralTest spectral_test(const TestFunction& f) {
    SpectralTest g;
    double width = 1e300;
    for (const TestTerm& t : f.terms()) {
        const double s = std::abs(t.shape(0, 0));
        const double reach = envelope_cutoff(t.envelope) * s;
        g.domain.push_back({t.modulation[0] - reach, t.modulation[0] + reach});
        width = std::min(width, 2.0 / (std::abs(t.center[0]) + term_reach(t) / s + 0.2));
    }
    g.domain = normalized(g.domain);
    g.fine_width = width;
    g.fourier = [f](double q) { return f.fourier(Vec2(q, 0.0)); };
    g.bound = [f](double lo, double hi) {
        double b = 0.0;
        for (const TestTerm& t : f.terms()) {
            const double s = std::abs(t.shape(0, 0));
            const double kap = min_abs(lo - t.modulation[0], hi - t.modulation[0]) / s;
            b += std::abs(t.coef) * t.diff.symbol_bound(max_abs(lo, hi), 0.0) *
                 envelope_axis_bound(t.envelope, kap) / s;
        }
        return b;
    };
    return g;
}

SmearableKernel delta_kernel(double a) {
    SmearableKernel k = base_kernel("delta", "point evaluation; singular at a in both directions");
    k.pair1 = [a](const TestFunction& f) { return delta_value(f, a); };
    k.spectral = [a](const SpectralTest& g) {
        return spectral_integral(
                   g, [a](double q) { return std::polar(1.0, q * a); },
                   [](double, double) { return 1.0; }, g.domain) /
               (2.0 * kPi);
    };
    return k;
}

SmearableKernel delta_prime_kernel(double a) {
    SmearableKernel k = base_kernel("delta-prime", "minus derivative at a; singular at a");
    k.pair1 = [a](const TestFunction& f) { return -delta_value(f.derivative(0), a); };
    k.spectral = [a](const SpectralTest& g) {
        return -spectral_integral(
                    g, [a](double q) { return cplx(0.0, q) * std::polar(1.0, q * a); },
                    [](double lo, double hi) { return max_abs(lo, hi); }, g.domain) /
               (2.0 * kPi);
    };
    return k;
}

SmearableKernel heaviside_kernel(double a) {
    SmearableKernel k = base_kernel("heaviside", "step at a; singular at a in both directions");
    // Terms supported entirely right of a contribute their transform at zero,
    // which avoids quadrature roundoff growing with the modulation frequency.
    k.pair1 = [a](const TestFunction& f) {
        cplx sum = 0.0;
        for (const TestTerm& t : f.terms()) {
            const double half = term_reach(t) / std::abs(t.shape(0, 0));
            if (t.center[0] - half >= a) {
                sum += term_fourier(t, 1, Vec2::Zero());
            } else if (t.center[0] + half > a) {
                TestFunction one(1);
                one.add_term(t);
                sum += integrate_against(one, [](double) { return 1.0; }, a,
                                         std::numeric_limits<double>::max());
            }
        }
        return sum;
    };
    // u(g) = g^(0)/2 + (1/2pi) PV int i g_a(q) / q dq with g_a(q) = exp(iqa) g^(q);
    // the principal value is kPvSplit at |q| = 1.
    k.spectral = [a](const SpectralTest& g) {
        auto ga = [&](double q) { return std::polar(1.0, q * a) * g.fourier(q); };
        const IntervalSet outer = intersect(g.domain, {{-1e300, -kPvSplit}, {kPvSplit, 1e300}});
        const cplx far = spectral_integral(
            g, [a](double q) { return cplx(0.0, 1.0) * std::polar(1.0, q * a) / q; },
            [](double lo, double hi) { return 1.0 / std::max(kPvSplit, min_abs(lo, hi)); }, outer);
        const cplx near = integrate_composite(
            [&](double q) { return cplx(0.0, 1.0) * (ga(q) - ga(-q)) / q; }, 0.0, kPvSplit,
            std::min(g.fine_width, kPvSplit / 8.0));
        return 0.5 * g.fourier(0.0) + (far + near) / (2.0 * kPi);
    };
    return k;
}

SmearableKernel gaussian_density_kernel(double a) {
    SmearableKernel k = base_kernel("gaussian", "smooth density exp(-(x-a)^2); no singularities");
    k.prefers_spectral = true;
    k.pair1 = [a](const TestFunction& f) {
        return integrate_against(f, [a](double x) { return std::exp(-(x - a) * (x - a)); },
                                 -std::numeric_limits<double>::max(),
                                 std::numeric_limits<double>::max());
    };
    k.spectral = [a](const SpectralTest& g) {
        const double rp = std::sqrt(kPi);
        return spectral_integral(
                   g, [a, rp](double q) { return rp * std::exp(-0.25 * q * q) * std::polar(1.0, q * a); },
                   [rp](double lo, double hi) {
                       const double m = min_abs(lo, hi);
                       return rp * std::exp(-0.25 * m * m);
                   },
                   intersect(g.domain, {{-80.0, 80.0}})) /
               (2.0 * kPi);
    };
    return k;
}

SmearableKernel boundary_value_kernel(double a) {
    SmearableKernel k =
        base_kernel("boundary-value", "1/(x - a + i0); singular at a for positive directions only");
    auto via_fourier = [a](const std::function<cplx(double)>& fhat_neg,
                           const std::function<double(double, double)>& bound_neg,
                           const IntervalSet& dom, double width) {
        return cplx(0.0, -1.0) *
               integrate_skipping([&](double q) { return std::polar(1.0, -q * a) * fhat_neg(q); },
                                  bound_neg, intersect(dom, {{0.0, 1e300}}), width, 1e-26);
    };
    // Per term: plain quadrature when the support avoids a; the momentum
    // integral when the spectral mass of f^(-q) sits at q < 0 (only a tail
    // enters, no cancellation); otherwise PV 1/(x - a) - i pi delta_a with the
    // principal value symmetrized around a.
    k.pair1 = [via_fourier, a](const TestFunction& f) {
        cplx sum = 0.0;
        for (const TestTerm& t : f.terms()) {
            const double s = std::abs(t.shape(0, 0));
            const double half = term_reach(t) / s;
            const double lo = t.center[0] - half, hi = t.center[0] + half;
            const double width = std::min(2.0 * half / 24.0, 3.0 / (std::abs(t.modulation[0]) + 1e-9));
            auto val = [&](double x) { return term_value(t, 1, Vec2(x, 0.0)); };
            auto plain = [&](double x) { return val(x) / (x - a); };
            if (!(lo < a && a < hi)) {
                sum += integrate_composite(plain, lo, hi, width);
            } else if (t.modulation[0] > 0.0) {
                const double reach = envelope_cutoff(t.envelope) * s;
                const IntervalSet dom{{-t.modulation[0] - reach, -t.modulation[0] + reach}};
                auto fneg = [&](double q) { return term_fourier(t, 1, Vec2(-q, 0.0)); };
                auto bound = [&](double qlo, double qhi) {
                    const double kap = min_abs(-qhi - t.modulation[0], -qlo - t.modulation[0]) / s;
                    return std::abs(t.coef) * t.diff.symbol_bound(max_abs(qlo, qhi), 0.0) *
                           envelope_axis_bound(t.envelope, kap) / s;
                };
                sum += via_fourier(fneg, bound, dom, 2.0 / (std::abs(t.center[0] - a) + half + 0.2));
            } else {
                const double L = std::min(a - lo, hi - a);
                sum += cplx(0.0, -kPi) * val(a);
                sum += integrate_composite([&](double u) { return (val(a + u) - val(a - u)) / u; }, 0.0,
                                           L, width);
                sum += integrate_composite(plain, lo, a - L, width);
                sum += integrate_composite(plain, a + L, hi, width);
            }
        }
        return sum;
    };
    k.spectral = [via_fourier](const SpectralTest& g) {
        IntervalSet neg;
        for (const Interval& iv : g.domain)
            neg.push_back({-iv.hi, -iv.lo});
        return via_fourier([&g](double q) { return g.fourier(-q); },
                           [&g](double lo, double hi) { return g.bound(-hi, -lo); }, normalized(neg),
                           g.fine_width);
    };
    return k;
}

std::vector<ReferenceKernel> reference_kernels() {
    auto at_origin = [](double x) { return std::abs(x) < 1e-12; };
    return {
        {delta_kernel(0.0), [at_origin](double x, double) { return at_origin(x); }},
        {delta_prime_kernel(0.0), [at_origin](double x, double) { return at_origin(x); }},
        {heaviside_kernel(0.0), [at_origin](double x, double) { return at_origin(x); }},
        {gaussian_density_kernel(0.0), [](double, double) { return false; }},
        {boundary_value_kernel(0.0), [at_origin](double x, double d) { return at_origin(x) && d > 0; }},
    };
}

}  // namespace microspec
