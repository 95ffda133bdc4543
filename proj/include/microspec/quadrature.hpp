#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace microspec {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached rule of the given order (computed once, thread-safe).
const GaussRule& gauss_legendre(int order);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(hi > lo); }
    double length() const { return empty() ? 0.0 : hi - lo; }
};

using IntervalSet = std::vector<Interval>;

/// Sorts and merges overlapping intervals, dropping empty ones.
IntervalSet normalized(IntervalSet set);
IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);

inline IntervalSet whole_line() {
    constexpr double big = std::numeric_limits<double>::infinity();
    return {{-big, big}};
}

/// Composite Gauss-Legendre over [a, b] with panels no wider than `width`.
template <class F>
auto integrate_composite(F&& f, double a, double b, double width, int order = 12)
    -> decltype(f(0.0)) {
    using R = decltype(f(0.0));
    R sum{};
    if (!(b > a))
        return sum;
    const GaussRule& rule = gauss_legendre(order);
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            sum += f(mid + 0.5 * h * rule.nodes[i]) * (0.5 * h * rule.weights[i]);
    }
    return sum;
}

/// Statistics of a skipping panel integration.
struct PanelStats {
    long nodes = 0;
    long panels_skipped = 0;
    double abs_integral = 0.0;
};

/// Integrates f over the interval set, subdividing each interval into coarse
/// blocks and fine panels. A block or panel whose `bound(lo, hi)` times its
/// length is below `skip_tol` contributes nothing.
template <class F, class Bound>
cplx integrate_skipping(F&& f, Bound&& bound, const IntervalSet& domain, double fine_width,
                        double skip_tol, PanelStats* stats = nullptr, int order = 12,
                        int coarse_factor = 32) {
    const GaussRule& rule = gauss_legendre(order);
    cplx sum{};
    PanelStats local;
    const double coarse_width = fine_width * coarse_factor;
    for (const Interval& iv : domain) {
        if (iv.empty() || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            continue;
        const int blocks = std::max(1, static_cast<int>(std::ceil(iv.length() / coarse_width)));
        const double bw = iv.length() / blocks;
        for (int blk = 0; blk < blocks; ++blk) {
            const double b0 = iv.lo + blk * bw;
            const double b1 = (blk + 1 == blocks) ? iv.hi : b0 + bw;
            if (bound(b0, b1) * (b1 - b0) < skip_tol) {
                ++local.panels_skipped;
                continue;
            }
            const int fine = std::max(1, static_cast<int>(std::ceil((b1 - b0) / fine_width)));
            const double h = (b1 - b0) / fine;
            for (int p = 0; p < fine; ++p) {
                const double lo = b0 + p * h;
                const double hi = lo + h;
                if (bound(lo, hi) * h < skip_tol) {
                    ++local.panels_skipped;
                    continue;
                }
                const double mid = 0.5 * (lo + hi);
                for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                    const cplx v = f(mid + 0.5 * h * rule.nodes[i]);
                    const double w = 0.5 * h * rule.weights[i];
                    sum += v * w;
                    local.abs_integral += std::abs(v) * w;
                }
                local.nodes += static_cast<long>(rule.nodes.size());
            }
        }
    }
    if (stats) {
        stats->nodes += local.nodes;
        stats->panels_skipped += local.panels_skipped;
        stats->abs_integral += local.abs_integral;
    }
    return sum;
}

/// Least-squares line fit y = c + s x with coefficient of determination.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace microspec
