#include <doctest.h>

#include <random>

#include "microspec/errors.hpp"
#include "microspec/field_states.hpp"
#include "microspec/musc.hpp"

using namespace microspec;

namespace {

ImmersionGraph two_vertex(const Vec2& a, const Vec2& b, const Vec2& xi_b, const Vec2& xi_a) {
    ImmersionGraph g;
    g.vertices = {a, b};
    const GeodesicSegment s = straight_segment(b, a);
    g.edges.push_back({1, 0, xi_b, s});
    g.edges.push_back({0, 1, xi_a, s.reversed()});
    return g;
}

ConeQuery query(std::vector<CovectorPoint> pts, ConeVariant v = ConeVariant::minkowski_straight) {
    return ConeQuery{std::move(pts), v};
}

}  // namespace

TEST_CASE("immersion validation") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    const ImmersionGraph good = two_vertex(Vec2(0, 0), Vec2(1, 1), Vec2(1, -1), Vec2(-1, 1));
    CHECK(validate_immersion(mk, good).valid);
    CHECK(validate_immersion(mk, good, ConeVariant::lightlike_geodesic).valid);
    CHECK(validate_immersion(mk, good, ConeVariant::minkowski_straight).valid);

    const ImmersionCheck bad_transport =
        validate_immersion(mk, two_vertex(Vec2(0, 0), Vec2(1, 1), Vec2(1, -1), Vec2(1, -1)));
    CHECK_FALSE(bad_transport.valid);
    CHECK(bad_transport.violations.front().find("transport") != std::string::npos);

    const ImmersionCheck past =
        validate_immersion(mk, two_vertex(Vec2(0, 0), Vec2(1, 1), Vec2(-1, 1), Vec2(1, -1)));
    CHECK_FALSE(past.valid);
    CHECK(past.violations.front().find("future") != std::string::npos);

    ImmersionGraph open = good;
    open.edges.pop_back();
    CHECK_FALSE(validate_immersion(mk, open).valid);

    // Timelike covector along a null curve: fine for smooth curves, not for the lightlike cone.
    const ImmersionGraph timelike = two_vertex(Vec2(0, 0), Vec2(1, 1), Vec2(2, -1), Vec2(-2, 1));
    CHECK(validate_immersion(mk, timelike).valid);
    CHECK_FALSE(validate_immersion(mk, timelike, ConeVariant::lightlike_geodesic).valid);

    const ImmersionGraph spacelike = two_vertex(Vec2(0, 0), Vec2(0, 1), Vec2(1, 0), Vec2(-1, 0));
    CHECK(validate_immersion(mk, spacelike).valid);
    CHECK_FALSE(validate_immersion(mk, spacelike, ConeVariant::minkowski_straight).valid);
}

TEST_CASE("two-point membership examples") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    const MembershipResult coincident =
        gamma_membership(mk, query({{Vec2(0, 0), Vec2(-1, -1)}, {Vec2(0, 0), Vec2(1, 1)}}));
    CHECK(coincident.verdict == Membership::inside);
    REQUIRE(coincident.witness);
    CHECK(coincident.degenerate_curves);
    CHECK((coincident.witness->balance(1) - Vec2(1, 1)).norm() < 1e-12);
    CHECK((coincident.witness->balance(0) - Vec2(-1, -1)).norm() < 1e-12);

    CHECK(gamma_membership(mk, query({{Vec2(0, 0), Vec2(1, 1)}, {Vec2(0, 0), Vec2(1, 1)}})).verdict ==
          Membership::outside);
    CHECK(gamma_membership(mk, query({{Vec2(0, 0), Vec2(-1, 0)}, {Vec2(1, 0), Vec2(1, 0)}})).verdict ==
          Membership::inside);

    const auto spacelike = query({{Vec2(0, 0), Vec2(-1, 1)}, {Vec2(0, 1), Vec2(1, -1)}}, ConeVariant::lightlike_geodesic);
    CHECK(gamma_membership(mk, spacelike).verdict == Membership::outside);
    CHECK(gamma_membership(mk, query(spacelike.points)).verdict == Membership::outside);

    // Null separated, covector along the connecting ray; the timelike one is only straight-cone.
    const auto light = query({{Vec2(0, 0), Vec2(-1, 1)}, {Vec2(1, 1), Vec2(1, -1)}}, ConeVariant::lightlike_geodesic);
    const MembershipResult l = gamma_membership(mk, light);
    CHECK(l.verdict == Membership::inside);
    CHECK_FALSE(l.degenerate_curves);
    const auto timelike_xi = query({{Vec2(0, 0), Vec2(-2, 1)}, {Vec2(1, 1), Vec2(2, -1)}}, ConeVariant::lightlike_geodesic);
    CHECK(gamma_membership(mk, timelike_xi).verdict == Membership::outside);
    CHECK(gamma_membership(mk, query(timelike_xi.points)).verdict == Membership::inside);
    const auto crossing = query({{Vec2(0, 0), Vec2(-1, -1)}, {Vec2(1, 1), Vec2(1, 1)}}, ConeVariant::lightlike_geodesic);
    CHECK(gamma_membership(mk, crossing).verdict == Membership::outside);
}

TEST_CASE("closed-form straight cone") {
    CHECK(gamma0_closed_form(query({{Vec2(0, 0), Vec2(-1, 0)}, {Vec2(1, 0), Vec2(1, 0)}})) == Membership::inside);
    CHECK(gamma0_closed_form(query({{Vec2(0, 0), Vec2(-1, 0)}, {Vec2(0, 1), Vec2(1, 0)}})) == Membership::outside);
    CHECK(gamma0_closed_form(query({{Vec2(0, 0), Vec2(0, -1)}, {Vec2(1, 0), Vec2(0, 1)}})) == Membership::outside);
    CHECK(gamma0_closed_form(query({{Vec2(0, 0), Vec2(1, 0)}, {Vec2(1, 0), Vec2(-1, 0)}})) == Membership::outside);
}

TEST_CASE("search and closed form agree on 500 random queries") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
    int compared = 0, disagreements = 0, inside = 0;
    for (int n = 0; n < 500; ++n) {
        const Vec2 p1(2 * u(rng), 2 * u(rng));
        Vec2 d = Vec2::Zero();
        if (n % 3)
            d = Vec2(2 * u(rng), 2 * u(rng));
        Vec2 xi2 = n % 4 == 0 ? Vec2(u(rng), u(rng)) : Vec2(0, 0);
        if (n % 4) {
            const double a = pos(rng), b = n % 4 == 1 ? 0.0 : pos(rng);
            xi2 = a * Vec2(1, 1) + b * Vec2(1, -1);
        }
        Vec2 xi1 = -xi2;
        if (n % 5 == 0)
            xi1 += Vec2(u(rng), u(rng)) * 0.1;
        const ConeQuery q = query({{p1, xi1}, {p1 + d, xi2}});
        const MembershipResult r = gamma_membership(mk, q);
        if (r.verdict == Membership::inconclusive)
            continue;
        ++compared;
        inside += r.verdict == Membership::inside;
        if (r.verdict != gamma0_closed_form(q))
            ++disagreements;
        if (r.witness)
            CHECK(validate_immersion(mk, *r.witness, ConeVariant::minkowski_straight).valid);
    }
    CHECK(disagreements == 0);
    CHECK(compared >= 490);
    CHECK(inside > 100);
    CHECK(compared - inside > 100);
}

TEST_CASE("membership is conic") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    const std::vector<CovectorPoint> pts = {{Vec2(0, 0), Vec2(-0.3, 0.1)}, {Vec2(0.5, 0.2), Vec2(0.3, -0.1)}};
    const Membership base = gamma_membership(mk, query(pts)).verdict;
    CHECK(base == Membership::inside);
    for (double s : {1e-3, 0.5, 7.0, 1e4}) {
        auto scaled = pts;
        for (auto& c : scaled)
            c.xi *= s;
        CHECK(gamma_membership(mk, query(scaled)).verdict == base);
    }
}

TEST_CASE("three-point straight cone") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    const Vec2 o(0, 0);
    const MembershipResult in = gamma_membership(mk, query({{o, Vec2(-1, 0)}, {o, Vec2(0, 0)}, {o, Vec2(1, 0)}}));
    CHECK(in.verdict == Membership::inside);
    REQUIRE(in.witness);
    CHECK(in.witness->edges.size() == 6);
    CHECK(validate_immersion(mk, *in.witness, ConeVariant::minkowski_straight).valid);
    CHECK(gamma_membership(mk, query({{o, Vec2(1, 0)}, {o, Vec2(0, 0)}, {o, Vec2(-1, 0)}})).verdict ==
          Membership::outside);
    // Middle vertex passes momentum through: xi_3 = eta_31 + eta_32, xi_2 = eta_21 - eta_32.
    const MembershipResult chain = gamma_membership(
        mk, query({{Vec2(0, 0), Vec2(-1, -1)}, {Vec2(0.5, 0.1), Vec2(-1, 1)}, {Vec2(1, 0.3), Vec2(2, 0)}}));
    CHECK(chain.verdict == Membership::inside);
    // Momentum does not balance.
    CHECK(gamma_membership(mk, query({{o, Vec2(-1, 0)}, {o, Vec2(0, 0)}, {o, Vec2(2, 0)}})).verdict ==
          Membership::outside);
    // All three segments spacelike.
    CHECK(gamma_membership(mk, query({{Vec2(0, 0), Vec2(-1, 0)}, {Vec2(0, 1), Vec2(0, 0)}, {Vec2(0.1, 2.5), Vec2(1, 0)}}))
              .verdict == Membership::outside);
    // The lightlike cone with three vertices on one null ray.
    const MembershipResult ray = gamma_membership(
        mk, query({{Vec2(0, 0), Vec2(-1, 1)}, {Vec2(0.5, 0.5), Vec2(-1, 1)}, {Vec2(1, 1), Vec2(2, -2)}},
                  ConeVariant::lightlike_geodesic));
    CHECK(ray.verdict == Membership::inside);
}

TEST_CASE("lightlike cone on a conformally flat chart") {
    const SpacetimeModel ds = SpacetimeModel::conformally_flat("pow(1 - 0.3*t, -2)", ChartDomain{-2, 2, -3, 3});
    const Vec2 q(0, 0), qp(1, 1);
    const auto dirs = predicted_directions(ds, q, qp);
    REQUIRE(dirs.size() == 1);
    const auto [a, b] = dirs[0];
    const MembershipResult r =
        gamma_membership(ds, query({{q, a}, {qp, b}}, ConeVariant::lightlike_geodesic));
    CHECK(r.verdict == Membership::inside);
    REQUIRE(r.witness);
    CHECK(validate_immersion(ds, *r.witness, ConeVariant::lightlike_geodesic).valid);
    CHECK(validate_immersion(ds, *r.witness, ConeVariant::smooth_curves).valid);
    // Transport rescales the covector, so the flat-space balance is wrong here.
    CHECK(gamma_membership(ds, query({{q, 1.5 * a}, {qp, b}}, ConeVariant::lightlike_geodesic)).verdict ==
          Membership::outside);
    CHECK_THROWS_AS(gamma_membership(ds, query({{q, a}, {qp, b}})), UnsupportedError);
}

TEST_CASE("membership errors") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    CHECK_THROWS_AS(gamma_membership(mk, query({{Vec2(0, 0), Vec2(1, 0)}})), UnsupportedError);
    CHECK_THROWS_AS(gamma_membership(mk, query({{}, {}, {}, {}})), UnsupportedError);
    CHECK_THROWS_AS(gamma_membership(mk, query({{}, {}}, ConeVariant::smooth_curves)), UnsupportedError);
    CHECK_THROWS_AS(gamma_membership(mk, query({{}, {}})), DomainError);
    CHECK_THROWS_AS(cone_variant_from_string("curly"), ConfigError);
    CHECK(cone_variant_from_string("lightlike-geodesic") == ConeVariant::lightlike_geodesic);
}

TEST_CASE("containment over a report") {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    SpectrumReport empty;
    empty.arity = 2;
    empty.dim = 2;
    CHECK(musc_containment(empty, mk, ConeVariant::minkowski_straight).verdict == "pass");

    SpectrumReport r = empty;
    auto entry = [](Vec2 p, Vec2 xi, Vec2 pp, Vec2 xip, Verdict v) {
        ReportEntry e;
        e.points = {{p, xi}, {pp, xip}};
        e.ladder.verdict = v;
        return e;
    };
    r.entries.push_back(entry(Vec2(0, 0), Vec2(-1, 1), Vec2(0, 0), Vec2(1, -1), Verdict::singular));
    r.entries.push_back(entry(Vec2(0, 0), Vec2(-1, 1), Vec2(1, 1), Vec2(1, -1), Verdict::singular));
    r.entries.push_back(entry(Vec2(0, 0), Vec2(1, 1), Vec2(0, 0), Vec2(-1, -1), Verdict::regular));
    for (ConeVariant v : {ConeVariant::minkowski_straight, ConeVariant::lightlike_geodesic}) {
        const ContainmentResult c = musc_containment(r, mk, v);
        CHECK(c.verdict == "pass");
        CHECK(c.checked == 2);
        CHECK(c.degenerate_curves);
    }
    r.entries.push_back(entry(Vec2(0, 0), Vec2(1, 1), Vec2(0, 0), Vec2(-1, -1), Verdict::singular));
    const ContainmentResult f = musc_containment(r, mk, ConeVariant::minkowski_straight, {}, Execution::serial);
    CHECK(f.verdict == "FAIL");
    CHECK(f.outside == std::vector<int>{3});
    CHECK(f.to_json()["outside"] == json::array({3}));
    CHECK(f.memberships[2].to_json(ConeQuery{r.entries[3].points, ConeVariant::minkowski_straight})["verdict"] ==
          "outside");
}
