#include "microspec/quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace microspec {

namespace {

GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
    if (order < 1 || order > 128)
        throw std::invalid_argument("gauss_legendre: order out of range");
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

IntervalSet normalized(IntervalSet set) {
    set.erase(std::remove_if(set.begin(), set.end(), [](const Interval& i) { return i.empty(); }),
              set.end());
    std::sort(set.begin(), set.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    IntervalSet out;
    for (const Interval& iv : set) {
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
    IntervalSet out;
    for (const Interval& x : a)
        for (const Interval& y : b) {
            Interval z{std::max(x.lo, y.lo), std::min(x.hi, y.hi)};
            if (!z.empty())
                out.push_back(z);
        }
    return normalized(std::move(out));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit fit;
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += r * r;
    }
    fit.r2 = syy > 1e-300 * n ? 1.0 - ssr / syy : 1.0;
    return fit;
}

}  // namespace microspec
