#include "microspec/musc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "microspec/errors.hpp"

namespace microspec {

const char* to_string(ConeVariant v) {
    switch (v) {
    case ConeVariant::smooth_curves: return "smooth-curves";
    case ConeVariant::lightlike_geodesic: return "lightlike-geodesic";
    case ConeVariant::minkowski_straight: return "minkowski-straight";
    }
    return "?";
}

ConeVariant cone_variant_from_string(const std::string& s) {
    for (ConeVariant v : {ConeVariant::smooth_curves, ConeVariant::lightlike_geodesic,
                          ConeVariant::minkowski_straight})
        if (s == to_string(v))
            return v;
    throw ConfigError("unknown cone variant '" + s + "'");
}

const char* to_string(Membership m) {
    switch (m) {
    case Membership::inside: return "inside";
    case Membership::outside: return "outside";
    case Membership::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

json vec_json(const Vec2& v) { return json::array({v[0], v[1]}); }

bool is_point_curve(const GeodesicSegment& c) {
    return c.causal == CurveClass::degenerate || (c.start() - c.end()).norm() == 0.0;
}

// Causal and future-directed with a loose null tolerance; numerically integrated
// null tangents are null only to the integrator's accuracy.
bool future_causal(const SpacetimeModel& model, const Vec2& base, const Vec2& xi, double tol) {
    const Mat2 gi = model.inverse_metric(base);
    const double q = xi.dot(gi * xi);
    return q >= -tol * xi.squaredNorm() * std::max(1.0, gi.norm()) &&
           xi.dot(model.orientation(base)) > 0.0;
}

Vec2 future_null(const Mat2& gi, const Vec2& w, double sgn) {
    const double disc = gi(0, 1) * gi(0, 1) - gi(0, 0) * gi(1, 1);
    Vec2 xi(1.0, (-gi(0, 1) + sgn * std::sqrt(std::max(0.0, disc))) / gi(1, 1));
    if (xi.dot(w) < 0.0)
        xi = -xi;
    return xi / xi.cwiseAbs().maxCoeff();
}

double cross(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace

Vec2 ImmersionGraph::balance(int i) const {
    Vec2 s = Vec2::Zero();
    for (const ImmersionEdge& e : edges)
        if (e.source == i)
            s += e.covector;
    return s;
}

json ImmersionGraph::to_json() const {
    json v = json::array();
    for (const Vec2& p : vertices)
        v.push_back(vec_json(p));
    json es = json::array();
    for (const ImmersionEdge& e : edges)
        es.push_back({{"source", e.source},
                      {"target", e.target},
                      {"covector", vec_json(e.covector)},
                      {"curve", to_string(e.curve.causal)},
                      {"samples", e.curve.points.size()}});
    return {{"vertices", v}, {"edges", es}};
}

ImmersionCheck validate_immersion(const SpacetimeModel& model, const ImmersionGraph& g,
                                  ConeVariant variant, const GeometryTolerances& tol) {
    ImmersionCheck out;
    auto fail = [&](std::string msg) {
        out.valid = false;
        out.violations.push_back(std::move(msg));
    };
    const int n = static_cast<int>(g.vertices.size());
    const int ne = static_cast<int>(g.edges.size());
    for (int k = 0; k < ne; ++k) {
        const ImmersionEdge& e = g.edges[k];
        const std::string tag = "edge " + std::to_string(e.source) + "->" + std::to_string(e.target);
        if (e.source < 0 || e.source >= n || e.target < 0 || e.target >= n || e.source == e.target) {
            fail(tag + ": bad vertex index");
            continue;
        }
        if (e.curve.points.empty()) {
            fail(tag + ": empty curve");
            continue;
        }
        if ((e.curve.start() - g.vertices[e.source]).norm() > tol.bvp_tol ||
            (e.curve.end() - g.vertices[e.target]).norm() > tol.bvp_tol)
            fail(tag + ": curve does not connect its vertices");
        for (const Vec2& p : e.curve.points)
            if (!model.domain().contains(p)) {
                fail(tag + ": curve leaves the chart domain");
                break;
            }
        if (is_point_curve(e.curve))
            out.degenerate_curves = true;

        // Opposition closure and transport consistency, checked from the higher-index side.
        const ImmersionEdge* rev = nullptr;
        for (const ImmersionEdge& r : g.edges) {
            if (r.source != e.target || r.target != e.source || r.curve.points.size() != e.curve.points.size())
                continue;
            bool same = true;
            const std::size_t m = e.curve.points.size();
            for (std::size_t s = 0; s < m && same; ++s)
                same = (r.curve.points[s] - e.curve.points[m - 1 - s]).norm() <= tol.bvp_tol;
            if (same) {
                rev = &r;
                break;
            }
        }
        if (!rev) {
            fail(tag + ": no opposite edge along the reversed curve");
            continue;
        }
        if (e.source > e.target) {
            const Vec2 t = parallel_transport(model, e.curve, -e.covector);
            if ((t - rev->covector).norm() > tol.transport_tol * std::max(1.0, t.norm()))
                fail(tag + ": opposite covector is not the transport of the negated covector");
            if (!e.covector.isZero() && !future_causal(model, e.curve.start(), e.covector, tol.bvp_tol))
                fail(tag + ": covector is not causal and future-directed");
        }

        if (variant == ConeVariant::lightlike_geodesic && !e.covector.isZero()) {
            if (is_point_curve(e.curve)) {
                const Vec2 b = g.vertices[e.source];
                const double q = e.covector.dot(model.inverse_metric(b) * e.covector);
                if (std::abs(q) > tol.bvp_tol * e.covector.squaredNorm() * model.inverse_metric(b).norm())
                    fail(tag + ": point curve carries a non-null covector");
            } else {
                if (null_residual(model, e.curve) > tol.bvp_tol ||
                    geodesic_residual(model, e.curve) > 1e3 * tol.bvp_tol)
                    fail(tag + ": curve is not a null geodesic");
                const Vec2 dual = model.metric(e.curve.start()) * e.curve.tangents.front();
                if (std::abs(cross(dual, e.covector)) > tol.bvp_tol * dual.norm() * e.covector.norm())
                    fail(tag + ": covector is not the dual tangent");
            }
        }
        if (variant == ConeVariant::minkowski_straight && !is_point_curve(e.curve)) {
            const Vec2 d = e.curve.end() - e.curve.start();
            for (const Vec2& p : e.curve.points)
                if (std::abs(cross(d, p - e.curve.start())) > tol.bvp_tol * d.squaredNorm()) {
                    fail(tag + ": curve is not a straight segment");
                    break;
                }
        }
    }
    if (variant == ConeVariant::minkowski_straight) {
        bool causal = false;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                int count = 0;
                for (const ImmersionEdge& e : g.edges)
                    if (e.source == j && e.target == i) {
                        ++count;
                        causal |= e.curve.causal != CurveClass::spacelike && e.curve.causal != CurveClass::mixed;
                    }
                if (count != 1)
                    fail("vertices " + std::to_string(i) + "," + std::to_string(j) +
                         ": straight cone needs exactly one edge pair");
            }
        if (n > 1 && !causal)
            fail("no causal segment");
    }
    return out;
}

json ConeQuery::to_json() const {
    json pts = json::array(), xis = json::array();
    for (const CovectorPoint& c : points) {
        pts.push_back(vec_json(c.base));
        xis.push_back(vec_json(c.xi));
    }
    return {{"points", pts}, {"xis", xis}, {"variant", to_string(variant)}};
}

json MembershipResult::to_json(const ConeQuery& q) const {
    json j = q.to_json();
    j["verdict"] = to_string(verdict);
    j["residual"] = residual;
    if (witness)
        j["witness"] = witness->to_json();
    if (degenerate_curves)
        j["degenerate_point_curves"] = true;
    if (!notes.empty())
        j["notes"] = notes;
    return j;
}

namespace {

// One way of joining vertices i < j: a curve from p_j to p_i and the future
// generators at p_j of the covector cone allowed on that edge.
struct Connector {
    int i = 0, j = 0;
    GeodesicSegment curve;  // p_j -> p_i
    std::vector<Vec2> gens;
    std::vector<Vec2> images;  // -transport(gen) at p_i
};

struct Fit {
    double residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd lambda;
};

// Exact nonnegative least squares for a handful of columns: an optimum is
// attained on a linearly independent support, so every such support is tried.
Fit nnls_small(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const int n = static_cast<int>(a.cols());
    const int rows = static_cast<int>(a.rows());
    Fit best;
    best.lambda = Eigen::VectorXd::Zero(n);
    best.residual = b.norm();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> cols;
        for (int c = 0; c < n; ++c)
            if (mask & (1u << c))
                cols.push_back(c);
        if (static_cast<int>(cols.size()) > rows)
            continue;
        Eigen::MatrixXd sub(rows, cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c)
            sub.col(c) = a.col(cols[c]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
        if (qr.rank() < static_cast<int>(cols.size()))
            continue;
        const Eigen::VectorXd x = qr.solve(b);
        if ((x.array() <= 0.0).any())
            continue;
        const double r = (sub * x - b).norm();
        if (r < best.residual) {
            best.residual = r;
            best.lambda.setZero();
            for (std::size_t c = 0; c < cols.size(); ++c)
                best.lambda[cols[c]] = x[c];
        }
    }
    return best;
}

}  // namespace

MembershipResult gamma_membership(const SpacetimeModel& model, const ConeQuery& q,
                                  const MembershipOptions& opts) {
    const int m = static_cast<int>(q.points.size());
    if (m < 2 || m > 3)
        throw UnsupportedError("gamma_membership: only 2 or 3 points are supported");
    if (q.variant == ConeVariant::smooth_curves)
        throw UnsupportedError("gamma_membership: the smooth-curve cone is not searchable");
    if (q.variant == ConeVariant::minkowski_straight && model.kind() != ModelKind::minkowski)
        throw UnsupportedError("gamma_membership: the straight cone needs a Minkowski model");
    double scale = 0.0;
    for (const CovectorPoint& c : q.points)
        scale = std::max(scale, c.xi.cwiseAbs().maxCoeff());
    if (!(scale > 0.0))
        throw DomainError("gamma_membership: all covectors vanish");

    MembershipResult res;
    Eigen::VectorXd b(2 * m);
    for (int i = 0; i < m; ++i)
        b.segment<2>(2 * i) = q.points[i].xi / scale;

    // Candidate connectors per vertex pair.
    std::vector<std::vector<Connector>> options;
    bool complete = true;
    bool causal_segment = false;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const Vec2 pi = q.points[i].base, pj = q.points[j].base;
            const bool same = (pi - pj).norm() <= opts.geometry.bvp_tol;
            std::vector<Connector> cands;
            if (q.variant == ConeVariant::minkowski_straight) {
                Connector c{i, j, same ? point_segment(pj) : straight_segment(pj, pi), {Vec2(1, 1), Vec2(1, -1)}, {}};
                for (const Vec2& g : c.gens)
                    c.images.push_back(-g);
                causal_segment |= c.curve.causal != CurveClass::spacelike;
                cands.push_back(std::move(c));
            } else if (same) {
                const Mat2 gi = model.inverse_metric(pj);
                for (double sgn : {1.0, -1.0}) {
                    const Vec2 g = future_null(gi, model.orientation(pj), sgn);
                    cands.push_back({i, j, point_segment(pj), {g}, {-g}});
                }
            } else {
                const BvpResult bvp = geodesic_bvp(model, pj, pi, true, opts.geometry);
                // Null geodesics of flat and conformally flat charts are straight
                // null lines, so an empty answer there is definite.
                if (!bvp.warnings.empty() && model.kind() == ModelKind::general) {
                    complete = false;
                    for (const std::string& w : bvp.warnings)
                        res.notes.push_back(w);
                }
                for (const GeodesicSegment& seg : bvp.connectors) {
                    Vec2 g = model.metric(pj) * seg.tangents.front();
                    if (g.dot(model.orientation(pj)) < 0.0)
                        g = -g;
                    g /= g.cwiseAbs().maxCoeff();
                    cands.push_back({i, j, seg, {g}, {-parallel_transport(model, seg, g)}});
                }
            }
            options.push_back(std::move(cands));
        }

    if (q.variant == ConeVariant::minkowski_straight && !causal_segment) {
        res.verdict = Membership::outside;
        res.residual = std::numeric_limits<double>::infinity();
        res.notes.push_back("no causal segment");
        return res;
    }

    // Each pair picks one connector or none; the straight cone always keeps
    // its single (possibly zero) edge pair.
    const int np = static_cast<int>(options.size());
    std::vector<int> pick(np, 0);
    Fit best;
    std::vector<const Connector*> best_used;
    while (true) {
        std::vector<const Connector*> used;
        for (int p = 0; p < np; ++p) {
            const int k = q.variant == ConeVariant::minkowski_straight ? pick[p] : pick[p] - 1;
            if (k >= 0 && k < static_cast<int>(options[p].size()))
                used.push_back(&options[p][k]);
        }
        int cols = 0;
        for (const Connector* c : used)
            cols += static_cast<int>(c->gens.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, cols);
        int col = 0;
        for (const Connector* c : used)
            for (std::size_t g = 0; g < c->gens.size(); ++g, ++col) {
                a.block<2, 1>(2 * c->j, col) = c->gens[g];
                a.block<2, 1>(2 * c->i, col) = c->images[g];
            }
        Fit f = cols ? nnls_small(a, b) : Fit{b.norm(), Eigen::VectorXd()};
        if (f.residual < best.residual) {
            best = std::move(f);
            best_used = used;
        }
        int p = 0;
        const int base = q.variant == ConeVariant::minkowski_straight ? 0 : 1;
        for (; p < np; ++p) {
            if (++pick[p] < static_cast<int>(options[p].size()) + base)
                break;
            pick[p] = 0;
        }
        if (p == np)
            break;
    }

    res.residual = best.residual;
    if (best.residual < opts.cone_tol) {
        ImmersionGraph w;
        for (const CovectorPoint& c : q.points)
            w.vertices.push_back(c.base);
        int col = 0;
        for (const Connector* c : best_used) {
            Vec2 at_j = Vec2::Zero(), at_i = Vec2::Zero();
            for (std::size_t g = 0; g < c->gens.size(); ++g, ++col) {
                at_j += best.lambda[col] * scale * c->gens[g];
                at_i += best.lambda[col] * scale * c->images[g];
            }
            if (at_j.isZero() && q.variant != ConeVariant::minkowski_straight)
                continue;
            w.edges.push_back({c->j, c->i, at_j, c->curve});
            w.edges.push_back({c->i, c->j, at_i, c->curve.reversed()});
            res.degenerate_curves |= is_point_curve(c->curve);
        }
        const ImmersionCheck check = validate_immersion(model, w, q.variant, opts.geometry);
        if (check.valid) {
            res.verdict = Membership::inside;
            res.witness = std::move(w);
        } else {
            res.verdict = Membership::inconclusive;
            res.notes.insert(res.notes.end(), check.violations.begin(), check.violations.end());
        }
    } else if (best.residual > 10.0 * opts.cone_tol && complete) {
        res.verdict = Membership::outside;
    } else {
        res.verdict = Membership::inconclusive;
    }
    return res;
}

Membership gamma0_closed_form(const ConeQuery& q, double cone_tol) {
    if (q.points.size() != 2)
        throw UnsupportedError("gamma0_closed_form: two points only");
    const double scale = std::max(q.points[0].xi.cwiseAbs().maxCoeff(), q.points[1].xi.cwiseAbs().maxCoeff());
    if (!(scale > 0.0))
        throw DomainError("gamma0_closed_form: all covectors vanish");
    const Vec2 x1 = q.points[0].xi / scale, x2 = q.points[1].xi / scale;
    const bool future = x2[0] >= std::abs(x2[1]) - cone_tol && x2[0] > cone_tol;
    const bool balanced = (x1 + x2).norm() <= cone_tol;
    const Vec2 d = q.points[1].base - q.points[0].base;
    const bool segment = d.squaredNorm() == 0.0 || d[0] * d[0] - d[1] * d[1] >= -1e-12 * d.squaredNorm();
    return future && balanced && segment ? Membership::inside : Membership::outside;
}

json ContainmentResult::to_json() const {
    return {{"verdict", verdict},
            {"checked", checked},
            {"inside", inside},
            {"outside", outside},
            {"inconclusive", inconclusive},
            {"degenerate_point_curves", degenerate_curves}};
}

ContainmentResult musc_containment(const SpectrumReport& report, const SpacetimeModel& model,
                                   ConeVariant variant, const MembershipOptions& opts, Execution mode) {
    if (report.arity != 2)
        throw std::invalid_argument("musc_containment: needs an arity-2 report");
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(report.entries.size()); ++i)
        if (report.entries[i].verdict() == Verdict::singular)
            idx.push_back(i);
    ContainmentResult out;
    out.checked = static_cast<int>(idx.size());
    out.memberships.resize(idx.size());
    parallel_map(
        out.checked,
        [&](int k) {
            out.memberships[k] = gamma_membership(model, ConeQuery{report.entries[idx[k]].points, variant}, opts);
        },
        mode);
    for (int k = 0; k < out.checked; ++k) {
        const MembershipResult& r = out.memberships[k];
        (r.verdict == Membership::inside    ? out.inside
         : r.verdict == Membership::outside ? out.outside
                                            : out.inconclusive)
            .push_back(idx[k]);
        out.degenerate_curves |= r.degenerate_curves;
    }
    out.verdict = !out.outside.empty() ? "FAIL" : out.inconclusive.empty() ? "pass" : "inconclusive";
    return out;
}

}  // namespace microspec
