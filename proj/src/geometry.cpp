#include "microspec/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "microspec/errors.hpp"
#include "microspec/expression.hpp"

namespace microspec {

namespace {

constexpr double kPiG = 3.14159265358979323846;
constexpr double kFdStep = 1e-3;

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

// Fourth-order central difference of a scalar function along one axis.
template <class F>
double central_diff(F&& f, const Vec2& p, int axis) {
    Vec2 e = Vec2::Zero();
    e[axis] = kFdStep;
    return (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * kFdStep);
}

}  // namespace

SpacetimeModel SpacetimeModel::minkowski(const ChartDomain& domain) {
    SpacetimeModel m;
    m.kind_ = ModelKind::minkowski;
    m.domain_ = domain;
    return m;
}

SpacetimeModel SpacetimeModel::conformally_flat(std::function<double(double, double)> omega2,
                                                const ChartDomain& domain, std::string expr) {
    SpacetimeModel m;
    m.kind_ = ModelKind::conformal;
    m.domain_ = domain;
    m.omega2_ = std::move(omega2);
    m.expr_ = std::move(expr);
    m.check_invariants();
    return m;
}

SpacetimeModel SpacetimeModel::conformally_flat(const std::string& expr, const ChartDomain& domain) {
    return conformally_flat(compile_expression(expr), domain, expr);
}

SpacetimeModel SpacetimeModel::general(MetricFn metric, const ChartDomain& domain,
                                       VectorFn orientation) {
    SpacetimeModel m;
    m.kind_ = ModelKind::general;
    m.domain_ = domain;
    m.metric_ = std::move(metric);
    m.orientation_ = std::move(orientation);
    m.check_invariants();
    return m;
}

Mat2 SpacetimeModel::metric(const Vec2& p) const {
    switch (kind_) {
    case ModelKind::minkowski:
        return Vec2(1.0, -1.0).asDiagonal();
    case ModelKind::conformal:
        return omega2_(p[0], p[1]) * Mat2(Vec2(1.0, -1.0).asDiagonal());
    case ModelKind::general:
        return metric_(p);
    }
    return Mat2::Identity();
}

Vec2 SpacetimeModel::orientation(const Vec2& p) const {
    if (orientation_)
        return orientation_(p);
    return Vec2(1.0, 0.0);
}

std::array<Mat2, 2> SpacetimeModel::christoffel(const Vec2& p) const {
    std::array<Mat2, 2> gam{Mat2::Zero(), Mat2::Zero()};
    if (kind_ == ModelKind::minkowski)
        return gam;
    if (kind_ == ModelKind::conformal) {
        auto phi = [this](const Vec2& x) { return 0.5 * std::log(omega2_(x[0], x[1])); };
        const Vec2 dphi(central_diff(phi, p, 0), central_diff(phi, p, 1));
        const Mat2 eta = Vec2(1.0, -1.0).asDiagonal();
        const Vec2 up = eta * dphi;  // eta^{ad} d_d phi
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    gam[a](b, c) = (a == b ? dphi[c] : 0.0) + (a == c ? dphi[b] : 0.0) -
                                   eta(b, c) * up[a];
        return gam;
    }
    std::array<Mat2, 2> dg;
    for (int d = 0; d < 2; ++d) {
        Mat2 acc = Mat2::Zero();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                acc(i, j) = central_diff([&](const Vec2& x) { return metric_(x)(i, j); }, p, d);
        dg[d] = acc;
    }
    const Mat2 ginv = metric_(p).inverse();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                double s = 0.0;
                for (int d = 0; d < 2; ++d)
                    s += ginv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
                gam[a](b, c) = 0.5 * s;
            }
    return gam;
}

void SpacetimeModel::check_invariants(int n) const {
    auto clampd = [](double lo, double hi, double f) {
        const double a = std::max(lo, -50.0), b = std::min(hi, 50.0);
        return a + (b - a) * f;
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double fi = (i + 0.5) / n, fj = (j + 0.5) / n;
            const Vec2 p(clampd(domain_.t_lo, domain_.t_hi, fi), clampd(domain_.x_lo, domain_.x_hi, fj));
            const Mat2 g = metric(p);
            if (!g.allFinite())
                throw ConstructionError("metric is not finite at a sampled point");
            if (std::abs(g(0, 1) - g(1, 0)) > 1e-12 * g.norm())
                throw ConstructionError("metric is not symmetric at a sampled point");
            if (!(g.determinant() < 0.0))
                throw ConstructionError("metric does not have Lorentzian signature at a sampled point");
            const Vec2 w = orientation(p);
            if (!(w.dot(g * w) > 0.0))
                throw ConstructionError("orientation field is not timelike at a sampled point");
        }
}

const char* to_string(CausalClass c) {
    switch (c) {
    case CausalClass::null_future: return "null+";
    case CausalClass::null_past: return "null-";
    case CausalClass::timelike_future: return "timelike+";
    case CausalClass::timelike_past: return "timelike-";
    case CausalClass::spacelike: return "spacelike";
    }
    return "?";
}

bool is_causal(CausalClass c) { return c != CausalClass::spacelike; }
bool is_future(CausalClass c) {
    return c == CausalClass::null_future || c == CausalClass::timelike_future;
}

CausalClass classify_covector(const SpacetimeModel& model, const CovectorPoint& cp, double null_tol) {
    if (cp.xi.isZero())
        throw DomainError("classify_covector: zero covector");
    const double q = cp.xi.dot(model.inverse_metric(cp.base) * cp.xi);
    const double scale = cp.xi.squaredNorm() * std::max(1.0, model.inverse_metric(cp.base).norm());
    const Vec2 w = model.orientation(cp.base);
    const double xw = cp.xi.dot(w);
    const bool null = std::abs(q) <= null_tol * scale;
    if (null && std::abs(xw) <= null_tol * cp.xi.norm() * w.norm())
        throw DomainError("classify_covector: degenerate direction, cannot orient");
    if (null)
        return xw > 0 ? CausalClass::null_future : CausalClass::null_past;
    if (q > 0)
        return xw > 0 ? CausalClass::timelike_future : CausalClass::timelike_past;
    return CausalClass::spacelike;
}

const char* to_string(CurveClass c) {
    switch (c) {
    case CurveClass::timelike: return "timelike";
    case CurveClass::null: return "null";
    case CurveClass::spacelike: return "spacelike";
    case CurveClass::mixed: return "mixed";
    case CurveClass::degenerate: return "degenerate";
    }
    return "?";
}

GeodesicSegment GeodesicSegment::reversed() const {
    GeodesicSegment r = *this;
    std::reverse(r.points.begin(), r.points.end());
    std::reverse(r.tangents.begin(), r.tangents.end());
    for (Vec2& t : r.tangents)
        t = -t;
    return r;
}

GeodesicSegment point_segment(const Vec2& p) {
    GeodesicSegment s;
    s.points = {p, p};
    s.tangents = {Vec2::Zero(), Vec2::Zero()};
    s.causal = CurveClass::degenerate;
    return s;
}

GeodesicSegment straight_segment(const Vec2& p, const Vec2& q, int n) {
    GeodesicSegment s;
    for (int i = 0; i <= n; ++i) {
        s.points.push_back(p + (q - p) * (static_cast<double>(i) / n));
        s.tangents.push_back(q - p);
    }
    const double g = (q - p)[0] * (q - p)[0] - (q - p)[1] * (q - p)[1];
    const double sc = (q - p).squaredNorm();
    if (sc == 0.0)
        s.causal = CurveClass::degenerate;
    else if (std::abs(g) <= 1e-12 * sc)
        s.causal = CurveClass::null;
    else
        s.causal = g > 0 ? CurveClass::timelike : CurveClass::spacelike;
    return s;
}

namespace {

Vec2 geodesic_accel(const std::array<Mat2, 2>& gam, const Vec2& v) {
    return Vec2(-v.dot(gam[0] * v), -v.dot(gam[1] * v));
}

CurveClass classify_curve(const SpacetimeModel& model, const GeodesicSegment& s) {
    bool t = false, n = false, sp = false;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const Vec2& v = s.tangents[i];
        const double sc = v.squaredNorm();
        if (sc == 0.0)
            continue;
        const double g = v.dot(model.metric(s.points[i]) * v);
        if (std::abs(g) <= 1e-7 * sc * model.metric(s.points[i]).norm())
            n = true;
        else if (g > 0)
            t = true;
        else
            sp = true;
    }
    const int kinds = int(t) + int(n) + int(sp);
    if (kinds == 0)
        return CurveClass::degenerate;
    if (kinds > 1)
        return CurveClass::mixed;
    return t ? CurveClass::timelike : (n ? CurveClass::null : CurveClass::spacelike);
}

GeodesicSegment integrate_fixed(const SpacetimeModel& model, const Vec2& start, const Vec2& velocity,
                                double a, double b, int steps) {
    GeodesicSegment seg;
    seg.a = a;
    const double h = (b - a) / steps;
    Vec2 x = start, v = velocity;
    seg.points.push_back(x);
    seg.tangents.push_back(v);
    const bool flat = model.kind() == ModelKind::minkowski;
    for (int i = 0; i < steps; ++i) {
        Vec2 xn, vn;
        if (flat) {
            xn = x + h * v;
            vn = v;
        } else {
            const Vec2 k1x = v, k1v = geodesic_accel(model.christoffel(x), v);
            const Vec2 k2x = v + 0.5 * h * k1v;
            const Vec2 k2v = geodesic_accel(model.christoffel(x + 0.5 * h * k1x), k2x);
            const Vec2 k3x = v + 0.5 * h * k2v;
            const Vec2 k3v = geodesic_accel(model.christoffel(x + 0.5 * h * k2x), k3x);
            const Vec2 k4x = v + h * k3v;
            const Vec2 k4v = geodesic_accel(model.christoffel(x + h * k3x), k4x);
            xn = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
            vn = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        }
        if (!xn.allFinite() || !vn.allFinite())
            throw IntegrationFailure("geodesic integration produced non-finite values");
        if (!model.domain().contains(xn)) {
            seg.truncated = true;
            break;
        }
        x = xn;
        v = vn;
        seg.points.push_back(x);
        seg.tangents.push_back(v);
    }
    seg.b = a + h * (seg.points.size() - 1);
    return seg;
}

}  // namespace

double geodesic_residual(const SpacetimeModel& model, const GeodesicSegment& seg) {
    const std::size_t n = seg.points.size();
    if (n < 5 || model.kind() == ModelKind::minkowski) {
        double r = 0.0;
        for (std::size_t i = 1; i < n; ++i)
            r = std::max(r, (seg.tangents[i] - seg.tangents[i - 1]).norm());
        return model.kind() == ModelKind::minkowski ? r : 0.0;
    }
    const double h = seg.step();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const Vec2 dv = (-seg.tangents[i + 2] + 8.0 * seg.tangents[i + 1] - 8.0 * seg.tangents[i - 1] +
                         seg.tangents[i - 2]) /
                        (12.0 * h);
        const Vec2 res = dv - geodesic_accel(model.christoffel(seg.points[i]), seg.tangents[i]);
        worst = std::max(worst, res.norm() / (1.0 + seg.tangents[i].squaredNorm()));
    }
    return worst;
}

double null_residual(const SpacetimeModel& model, const GeodesicSegment& seg) {
    double worst = 0.0;
    for (std::size_t i = 0; i < seg.points.size(); ++i) {
        const Vec2& v = seg.tangents[i];
        const double sc = v.squaredNorm();
        if (sc == 0.0)
            continue;
        worst = std::max(worst, std::abs(v.dot(model.metric(seg.points[i]) * v)) / sc);
    }
    return worst;
}

GeodesicSegment geodesic_ivp(const SpacetimeModel& model, const Vec2& start, const Vec2& velocity,
                             double a, double b, const GeometryTolerances& tol, int min_steps) {
    if (!model.domain().contains(start))
        throw DomainError("geodesic_ivp: start point outside chart domain");
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > a))
        throw DomainError("geodesic_ivp: parameter interval must be finite and nonempty");
    const double length = (b - a) * std::max(1.0, velocity.norm());
    int steps = std::max({32, min_steps, static_cast<int>(std::ceil(length / 4e-3))});
    for (;;) {
        GeodesicSegment seg = integrate_fixed(model, start, velocity, a, b, steps);
        if (geodesic_residual(model, seg) < tol.geo_tol) {
            seg.causal = classify_curve(model, seg);
            return seg;
        }
        if ((b - a) / steps < 1e-7)
            throw IntegrationFailure("geodesic_ivp: step-size underflow");
        steps *= 2;
    }
}

namespace {

struct Approach {
    double s = 0.0;     // parameter of the closest sample
    double dist = 0.0;  // distance to target
    double miss = 0.0;  // signed perpendicular miss
};

Approach closest_approach(const GeodesicSegment& seg, const Vec2& q) {
    Approach best;
    best.dist = std::numeric_limits<double>::infinity();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < seg.points.size(); ++i) {
        const double d = (seg.points[i] - q).norm();
        if (d < best.dist) {
            best.dist = d;
            idx = i;
        }
    }
    // Refine on the neighbouring intervals with the local tangent.
    const double h = seg.step();
    double s = seg.a + h * idx;
    Vec2 x = seg.points[idx], t = seg.tangents[idx];
    if (t.squaredNorm() > 0.0) {
        const double ds = std::clamp((q - x).dot(t) / t.squaredNorm(), -h, h);
        x += ds * t;
        s += ds;
    }
    best.s = s;
    best.dist = (x - q).norm();
    const double tn = t.norm();
    best.miss = tn > 0.0 ? cross2(t, q - x) / tn : best.dist;
    return best;
}

GeodesicSegment shoot(const SpacetimeModel& model, const Vec2& p, double phi, double reach, int steps) {
    return integrate_fixed(model, p, Vec2(std::cos(phi), std::sin(phi)), 0.0, reach, steps);
}

void try_accept(const SpacetimeModel& model, const Vec2& p, const Vec2& q, double phi, double s_star,
                bool null_only, const GeometryTolerances& tol, BvpResult& out) {
    if (!(s_star > 0.0))
        return;
    const Vec2 dir(std::cos(phi), std::sin(phi));
    double s = s_star;
    Vec2 v0 = dir * s;
    GeodesicSegment seg;
    try {
        // Newton on the affine length along the fixed direction: d/ds end = tangent / s.
        for (int it = 0; it < 6; ++it) {
            v0 = dir * s;
            seg = geodesic_ivp(model, p, v0, 0.0, 1.0, tol);
            const Vec2 T = seg.tangents.back();
            if (seg.truncated || (seg.end() - q).norm() < 1e-3 * tol.bvp_tol || T.squaredNorm() == 0.0)
                break;
            s += s * (q - seg.end()).dot(T) / T.squaredNorm();
        }
    } catch (const std::exception& e) {
        out.warnings.push_back(std::string("connector rejected: ") + e.what());
        return;
    }
    if (seg.truncated || (seg.end() - q).norm() > tol.bvp_tol) {
        out.warnings.push_back("shooting did not converge to the endpoint");
        return;
    }
    if (null_only && null_residual(model, seg) > 1e-6)
        return;
    for (const GeodesicSegment& c : out.connectors)
        if ((c.tangents.front() - seg.tangents.front()).norm() < 1e-6 * (1.0 + v0.norm()))
            return;
    out.connectors.push_back(std::move(seg));
}

}  // namespace

BvpResult geodesic_bvp(const SpacetimeModel& model, const Vec2& p, const Vec2& q, bool null_only,
                       const GeometryTolerances& tol) {
    BvpResult out;
    if (!model.domain().contains(p) || !model.domain().contains(q))
        throw DomainError("geodesic_bvp: endpoint outside chart domain");
    const double sep = (q - p).norm();
    if (sep < tol.bvp_tol) {
        out.warnings.push_back("coincident endpoints: only the degenerate connector exists");
        return out;
    }
    const double reach = 4.0 * sep;
    const int steps = 800;
    if (model.kind() == ModelKind::minkowski) {
        const Vec2 d = q - p;
        const bool null = std::abs(d[0] * d[0] - d[1] * d[1]) <= 1e-12 * d.squaredNorm();
        if (!null_only || null)
            try_accept(model, p, q, std::atan2(d[1], d[0]), d.norm(), null_only, tol, out);
        if (out.connectors.empty())
            out.warnings.push_back("no connector found");
        return out;
    }
    if (null_only) {
        const Mat2 g = model.metric(p);
        const double A = 0.5 * (g(0, 0) - g(1, 1)), B = g(0, 1), C = 0.5 * (g(0, 0) + g(1, 1));
        const double R = std::hypot(A, B);
        const double delta = std::atan2(B, A);
        const double ac = std::acos(std::clamp(-C / R, -1.0, 1.0));
        for (double base : {0.5 * (delta + ac), 0.5 * (delta - ac)})
            for (double phi : {base, base + kPiG}) {
                const GeodesicSegment ray = shoot(model, p, phi, reach, steps);
                const Approach ap = closest_approach(ray, q);
                if (ap.dist < tol.bvp_tol)
                    try_accept(model, p, q, phi, ap.s, true, tol, out);
            }
        if (out.connectors.empty())
            out.warnings.push_back("no null connector found");
        return out;
    }
    const int n_phi = 256;
    std::vector<Approach> samples(n_phi + 1);
    for (int i = 0; i <= n_phi; ++i)
        samples[i] = closest_approach(shoot(model, p, 2 * kPiG * i / n_phi, reach, steps), q);
    for (int i = 0; i < n_phi; ++i) {
        const Approach& l = samples[i];
        const Approach& r = samples[i + 1];
        if ((l.miss > 0) == (r.miss > 0))
            continue;
        if (std::min(l.dist, r.dist) > 0.5 * sep)
            continue;
        double lo = 2 * kPiG * i / n_phi, hi = 2 * kPiG * (i + 1) / n_phi;
        double mlo = l.miss;
        Approach mid;
        for (int it = 0; it < 60; ++it) {
            const double m = 0.5 * (lo + hi);
            mid = closest_approach(shoot(model, p, m, reach, steps), q);
            if ((mid.miss > 0) == (mlo > 0)) {
                lo = m;
                mlo = mid.miss;
            } else {
                hi = m;
            }
            if (hi - lo < 1e-15)
                break;
        }
        if (mid.dist < 0.1 * tol.bvp_tol + 1e-9 * sep)
            try_accept(model, p, q, 0.5 * (lo + hi), mid.s, false, tol, out);
    }
    if (out.connectors.empty())
        out.warnings.push_back("no connector found");
    return out;
}

Vec2 parallel_transport(const SpacetimeModel& model, const GeodesicSegment& seg, const Vec2& xi) {
    if (model.kind() == ModelKind::minkowski || seg.points.size() < 2)
        return xi;
    const double h = seg.step();
    auto rhs = [&](const Vec2& x, const Vec2& v, const Vec2& w) {
        const auto gam = model.christoffel(x);
        Vec2 out = Vec2::Zero();
        for (int nu = 0; nu < 2; ++nu)
            out += w[nu] * (gam[nu] * v);
        return out;
    };
    Vec2 w = xi;
    for (std::size_t i = 0; i + 1 < seg.points.size(); ++i) {
        const Vec2 &p0 = seg.points[i], &p1 = seg.points[i + 1];
        const Vec2 &v0 = seg.tangents[i], &v1 = seg.tangents[i + 1];
        const Vec2 pm = 0.5 * (p0 + p1) + h * (v0 - v1) / 8.0;
        const Vec2 vm = 1.5 * (p1 - p0) / h - 0.25 * (v0 + v1);
        const Vec2 k1 = rhs(p0, v0, w);
        const Vec2 k2 = rhs(pm, vm, w + 0.5 * h * k1);
        const Vec2 k3 = rhs(pm, vm, w + 0.5 * h * k2);
        const Vec2 k4 = rhs(p1, v1, w + h * k3);
        w += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return w;
}

Vec2 normalize_by_orientation(const SpacetimeModel& model, const Vec2& base, const Vec2& xi) {
    const double xw = std::abs(xi.dot(model.orientation(base)));
    return xw > 0.0 ? Vec2(xi / xw) : xi;
}

bool related_by_tilde(const SpacetimeModel& model, const CovectorPoint& a, const CovectorPoint& b,
                      const GeometryTolerances& tol) {
    if (a.xi.isZero() || b.xi.isZero())
        return false;
    try {
        const CausalClass ca = classify_covector(model, a, tol.null_tol);
        const CausalClass cb = classify_covector(model, b, tol.null_tol);
        if (ca != CausalClass::null_future && ca != CausalClass::null_past)
            return false;
        if (cb != CausalClass::null_future && cb != CausalClass::null_past)
            return false;
    } catch (const DomainError&) {
        return false;
    }
    const Vec2 nb = normalize_by_orientation(model, b.base, b.xi);
    if ((a.base - b.base).norm() < tol.bvp_tol) {
        const Vec2 na = normalize_by_orientation(model, a.base, a.xi);
        return (na - nb).norm() < tol.tilde_tol * std::max(1.0, nb.norm());
    }
    const BvpResult bvp = geodesic_bvp(model, a.base, b.base, true, tol);
    for (const GeodesicSegment& c : bvp.connectors) {
        const Vec2 u = model.inverse_metric(a.base) * a.xi;
        const Vec2& v0 = c.tangents.front();
        if (std::abs(cross2(u, v0)) > 1e-6 * u.norm() * v0.norm())
            continue;
        const Vec2 moved = normalize_by_orientation(model, b.base, parallel_transport(model, c, a.xi));
        if ((moved - nb).norm() < tol.tilde_tol * std::max(1.0, nb.norm()))
            return true;
    }
    return false;
}

bool Neighborhood::contains(const Vec2& x) const {
    if (is_ball())
        return (x - center).norm() < radius;
    bool inside = false;
    for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
        const Vec2 &a = polygon[i], &b = polygon[j];
        if ((a[1] > x[1]) != (b[1] > x[1]) &&
            x[0] < (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0])
            inside = !inside;
    }
    return inside;
}

namespace {

Vec2 exp_map(const SpacetimeModel& model, const Vec2& p, const Vec2& v, const GeometryTolerances& tol) {
    if (v.isZero())
        return p;
    const GeodesicSegment s = geodesic_ivp(model, p, v, 0.0, 1.0, tol);
    if (s.truncated)
        throw DomainError("scaled_neighborhood: exponential map leaves the chart");
    return s.end();
}

Mat2 exp_jacobian(const SpacetimeModel& model, const Vec2& p, const Vec2& v,
                  const GeometryTolerances& tol) {
    const double eps = 1e-6 * std::max(1.0, v.norm());
    Mat2 j;
    for (int c = 0; c < 2; ++c) {
        Vec2 e = Vec2::Zero();
        e[c] = eps;
        j.col(c) = (exp_map(model, p, v + e, tol) - exp_map(model, p, v - e, tol)) / (2 * eps);
    }
    return j;
}

Vec2 log_map(const SpacetimeModel& model, const Vec2& p, const Vec2& z, const GeometryTolerances& tol) {
    Vec2 v = z - p;
    for (int it = 0; it < 30; ++it) {
        const Vec2 r = exp_map(model, p, v, tol) - z;
        if (r.norm() < 0.1 * tol.bvp_tol)
            break;
        const Mat2 j = exp_jacobian(model, p, v, tol);
        if (!(std::abs(j.determinant()) > 1e-12))
            throw DomainError("scaled_neighborhood: exponential map is singular");
        v -= j.inverse() * r;
        if (it == 29)
            throw DomainError("scaled_neighborhood: inverse exponential map did not converge");
    }
    // No conjugate point along the radial geodesic: the Jacobian keeps its orientation.
    for (double f : {0.25, 0.5, 0.75, 1.0})
        if (!(exp_jacobian(model, p, f * v, tol).determinant() > 0.0))
            throw DomainError("neighbourhood escapes the injectivity domain of exp_p");
    return v;
}

}  // namespace

Neighborhood scaled_neighborhood(const SpacetimeModel& model, const Vec2& p, const Neighborhood& o,
                                 double lambda, double mu, const GeometryTolerances& tol) {
    if (!(lambda > 0.0))
        throw DomainError("scaled_neighborhood: lambda must be positive");
    if (mu == 0.0 || lambda == 1.0)
        return o;
    const double f = std::pow(lambda, mu);
    if (model.kind() == ModelKind::minkowski) {
        Neighborhood out = o;
        out.center = p + f * (o.center - p);
        out.radius = f * o.radius;
        for (Vec2& v : out.polygon)
            v = p + f * (v - p);
        return out;
    }
    std::vector<Vec2> boundary = o.polygon;
    if (boundary.empty())
        for (int i = 0; i < 64; ++i) {
            const double a = 2 * kPiG * i / 64;
            boundary.push_back(o.center + o.radius * Vec2(std::cos(a), std::sin(a)));
        }
    Neighborhood out;
    out.center = exp_map(model, p, f * log_map(model, p, o.center, tol), tol);
    out.radius = 0.0;
    for (const Vec2& z : boundary) {
        out.polygon.push_back(exp_map(model, p, f * log_map(model, p, z, tol), tol));
        out.radius = std::max(out.radius, (out.polygon.back() - out.center).norm());
    }
    return out;
}

}  // namespace microspec
