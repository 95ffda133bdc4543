#include "microspec/selftest.hpp"

#include <cmath>
#include <functional>

#include "microspec/acs.hpp"
#include "microspec/field_states.hpp"
#include "microspec/geometry.hpp"
#include "microspec/kernels.hpp"
#include "microspec/microlocal.hpp"
#include "microspec/musc.hpp"

namespace microspec {

namespace {

ScanTask line_task(double x, double d) { return ScanTask{{CovectorPoint{Vec2(x, 0.0), Vec2(d, 0.0)}}}; }

std::vector<ScanTask> line_grid() {
    std::vector<ScanTask> t;
    for (double x : {-0.6, 0.0, 0.6})
        for (double d : {1.0, -1.0})
            t.push_back(line_task(x, d));
    return t;
}

ImmersionGraph two_vertex(const Vec2& a, const Vec2& b, const Vec2& xi_b, const Vec2& xi_a) {
    ImmersionGraph g;
    g.vertices = {a, b};
    const GeodesicSegment s = straight_segment(b, a);
    g.edges.push_back({1, 0, xi_b, s});
    g.edges.push_back({0, 1, xi_a, s.reversed()});
    return g;
}

using Check = std::function<bool(std::string&)>;

}  // namespace

bool SelftestResult::passed() const {
    for (const SelftestCheck& c : checks)
        if (!c.passed)
            return false;
    return !checks.empty();
}

nlohmann::json SelftestResult::to_json() const {
    nlohmann::json a = nlohmann::json::array();
    int failed = 0;
    for (const SelftestCheck& c : checks) {
        a.push_back({{"module", c.module}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        failed += c.passed ? 0 : 1;
    }
    return {{"checks", a}, {"failed", failed}, {"total", checks.size()}, {"verdict", passed() ? "pass" : "FAIL"}};
}

SelftestResult run_selftest() {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    std::vector<std::tuple<std::string, std::string, Check>> list;
    auto add = [&](const std::string& module, const std::string& name, Check c) {
        list.emplace_back(module, name, std::move(c));
    };

    add("geometry", "covector classes", [&](std::string&) {
        return classify_covector(mk, {Vec2::Zero(), Vec2(1, 1)}) == CausalClass::null_future &&
               classify_covector(mk, {Vec2::Zero(), Vec2(1, 0)}) == CausalClass::timelike_future &&
               classify_covector(mk, {Vec2::Zero(), Vec2(0, 1)}) == CausalClass::spacelike;
    });
    add("geometry", "flat geodesics are lines", [&](std::string& d) {
        const GeodesicSegment s = geodesic_ivp(mk, Vec2::Zero(), Vec2(1, 1), 0.0, 1.0);
        double err = 0.0;
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            const double t = s.a + i * s.step();
            err = std::max(err, (s.points[i] - Vec2(t, t)).norm());
        }
        d = "max deviation " + std::to_string(err);
        return err < 1e-8;
    });
    add("geometry", "unit conformal factor reduces to flat", [&](std::string&) {
        const SpacetimeModel c = SpacetimeModel::conformally_flat("1", ChartDomain{});
        const GeodesicSegment a = geodesic_ivp(c, Vec2::Zero(), Vec2(1, 0.5), 0.0, 1.0);
        return (a.end() - Vec2(1, 0.5)).norm() < 1e-8;
    });
    add("geometry", "null connectors", [&](std::string&) {
        return geodesic_bvp(mk, Vec2::Zero(), Vec2(1, 1), true).connectors.size() == 1 &&
               geodesic_bvp(mk, Vec2::Zero(), Vec2(0, 1), true).connectors.empty() &&
               geodesic_bvp(mk, Vec2::Zero(), Vec2(2, 1), false).connectors.size() == 1;
    });
    add("geometry", "flat transport", [&](std::string&) {
        return (parallel_transport(mk, straight_segment(Vec2::Zero(), Vec2(1, 0.3)), Vec2(1, 1)) - Vec2(1, 1))
                   .norm() < 1e-12;
    });
    add("geometry", "tilde relation", [&](std::string&) {
        return related_by_tilde(mk, {Vec2::Zero(), Vec2(1, -1)}, {Vec2(1, 1), Vec2(1, -1)}) &&
               !related_by_tilde(mk, {Vec2::Zero(), Vec2(1, 0)}, {Vec2(1, 1), Vec2(1, -1)});
    });
    add("geometry", "scaled neighbourhoods", [&](std::string&) {
        const Neighborhood o{Vec2::Zero(), 1.0, {}};
        return std::abs(scaled_neighborhood(mk, Vec2::Zero(), o, 0.25, 1.0).radius - 0.25) < 1e-12 &&
               scaled_neighborhood(mk, Vec2::Zero(), o, 1.0, 1.0).radius == 1.0;
    });

    add("microlocal", "delta amplitude is the window value", [&](std::string& d) {
        const cplx v = windowed_transform(delta_kernel(), {Window{Vec2::Zero(), 0.2}}, VecX::Constant(1, 37.0));
        d = "amplitude " + std::to_string(std::abs(v));
        return std::abs(std::abs(v) - 1.0) < 1e-12;
    });
    add("microlocal", "delta singular, Gaussian regular", [&](std::string&) {
        LadderConfig cfg;
        const Window w{Vec2::Zero(), 0.2};
        return direction_ladder(delta_kernel(), {w}, VecX::Constant(1, 1.0), cfg).verdict == Verdict::singular &&
               direction_ladder(gaussian_density_kernel(), {w}, VecX::Constant(1, -1.0), cfg).verdict ==
                   Verdict::regular;
    });
    add("microlocal", "singular supports", [&](std::string&) {
        LadderConfig cfg;
        const std::vector<Vec2> s = singular_support(estimate_wavefront(delta_kernel(), line_grid(), cfg));
        return s.size() == 1 && s[0].norm() < 1e-15 &&
               singular_support(estimate_wavefront(gaussian_density_kernel(), line_grid(), cfg)).empty();
    });
    add("microlocal", "identity covariance and operators", [&](std::string&) {
        LadderConfig cfg;
        return transform_covariance_check(delta_kernel(), Mat2::Identity(), line_grid(), cfg).score == 0 &&
               operator_shrink_check(delta_kernel(), DiffPoly::partial(0), line_grid(), cfg).contained;
    });

    add("field-states", "squeezing zero is the vacuum", [&](std::string& d) {
        const QuasifreeState v = make_state(StateDescriptor::parse("vacuum:m=1"));
        const QuasifreeState s = make_state(StateDescriptor::parse("squeezed:m=1,theta=0"));
        const TestFunction f = TestFunction::bump(2, Vec2(0.1, 0.0), 0.5, Vec2(1.0, 0.5));
        const TestFunction h = TestFunction::bump(2, Vec2(-0.2, 0.1), 0.4);
        const double diff = std::abs(v.two_point(f, h) - s.two_point(f, h));
        d = "difference " + std::to_string(diff);
        return diff < v.quad_tol();
    });
    add("field-states", "unit Weyl correlations", [&](std::string&) {
        const QuasifreeState v = make_state(StateDescriptor::parse("vacuum:m=1"));
        const TestFunction f = TestFunction::bump(2, Vec2::Zero(), 0.4).scaled(0.3);
        return weyl_correlation(v, {}) == cplx(1.0) &&
               std::abs(weyl_correlation(v, {f, f.scaled(-1.0)}) - 1.0) < 1e-12;
    });
    add("field-states", "zero test functions", [&](std::string&) {
        const QuasifreeState v = make_state(StateDescriptor::parse("vacuum:m=1"));
        const TestFunction f = TestFunction::bump(2, Vec2::Zero(), 0.4);
        const TestFunction g = TestFunction::gaussian(2, Vec2::Zero(), 1.0).scaled(0.2);
        return kg_residual(v, f, TestFunction(2)) == cplx(0.0) &&
               vacuum_spectral_residual(v, TestFunction(2), g).residual == cplx(0.0);
    });

    add("musc", "immersion validation", [&](std::string&) {
        return validate_immersion(mk, two_vertex(Vec2(0, 0), Vec2(1, 1), Vec2(1, -1), Vec2(-1, 1))).valid &&
               !validate_immersion(mk, two_vertex(Vec2(0, 0), Vec2(1, 1), Vec2(1, -1), Vec2(1, -1))).valid;
    });
    add("musc", "spacelike covector is outside", [&](std::string&) {
        const ConeQuery q{{{Vec2(0, 0), Vec2(0, -1)}, {Vec2(1, 0), Vec2(0, 1)}}, ConeVariant::minkowski_straight};
        return gamma_membership(mk, q).verdict == Membership::outside &&
               gamma0_closed_form(q) == Membership::outside;
    });
    add("musc", "empty report passes", [&](std::string&) {
        SpectrumReport r;
        r.arity = 2;
        r.dim = 2;
        const ContainmentResult c = musc_containment(r, mk, ConeVariant::minkowski_straight);
        return c.verdict == "pass" && c.checked == 0;
    });

    add("acs", "plain shrinking family", [&](std::string&) {
        const TestingFamily f = make_scaled_family(TestFunction::bump(1, Vec2::Zero(), 0.2), Vec2::Zero(), 1.0, 0.0);
        FamilyOptions half;
        half.lambda0 = 0.5;
        const TestingFamily g =
            make_scaled_family(TestFunction::bump(1, Vec2::Zero(), 0.2), Vec2::Zero(), 1.0, 0.0, half);
        return f.check_invariants({1.0, 0.5, 0.25}).empty() && g.element(0.75).empty();
    });
    add("acs", "smooth functional has empty ACS", [&](std::string&) {
        AcsOptions o;
        o.battery = 2;
        const SpectrumReport r = estimate_acs(FunctionalModel::function_algebra(gaussian_density_kernel()), 1, 1.0,
                                              {line_task(0.0, 1.0), line_task(0.0, -1.0)}, o);
        return r.count(Verdict::regular) == 2 &&
               estimate_acs(FunctionalModel::function_algebra(delta_kernel()), 1, 1.0, {}).entries.empty();
    });
    add("acs", "zero symbol", [&](std::string&) {
        auto v = std::make_shared<QuasifreeState>(make_state(StateDescriptor::parse("vacuum:m=1")));
        AcsOptions o;
        o.j_min = 3;
        o.j_max = 5;
        const SymbolBuild z =
            build_weyl_symbol(v, Vec2::Zero(), TestFunction(2), TestFunction::bump(2, Vec2::Zero(), 0.2), 1.0, 2.0,
                              1e-4, o);
        return z.symbol.is_zero() && z.estimate.passed && z.estimate.C == 0.0;
    });

    SelftestResult out;
    for (auto& [module, name, check] : list) {
        SelftestCheck c{module, name, false, ""};
        try {
            c.passed = check(c.detail);
        } catch (const std::exception& e) {
            c.detail = std::string("exception: ") + e.what();
        }
        out.checks.push_back(std::move(c));
    }
    return out;
}

}  // namespace microspec
