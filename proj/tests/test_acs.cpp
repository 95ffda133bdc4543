#include <cmath>

#include "../src/acs_detail.hpp"
#include "doctest.h"
#include "microspec/acs.hpp"
#include "microspec/errors.hpp"
#include "microspec/kernels.hpp"

using namespace microspec;

namespace {

ScanTask task1(double x, double xi) { return ScanTask{{CovectorPoint{Vec2(x, 0.0), Vec2(xi, 0.0)}}}; }

std::shared_ptr<const QuasifreeState> state_of(const std::string& d) {
    return std::make_shared<QuasifreeState>(make_state(StateDescriptor::parse(d)));
}

TestFunction unit_profile(int dim, double r) { return TestFunction::bump(dim, Vec2::Zero(), r); }

}  // namespace

TEST_CASE("scaled families localize, cut off and keep seminorm growth") {
    const TestingFamily f = make_scaled_family(unit_profile(1, 0.2), Vec2(0.3, 0.0), 1.0, 0.0);
    CHECK(f.growth() == doctest::Approx(1.0));
    for (int j = 0; j <= 10; ++j) {
        const double lam = std::ldexp(1.0, -j);
        const Box b = f.element(lam).support();
        CHECK(b.lo[0] >= 0.3 - 0.5 * lam - 1e-12);
        CHECK(b.hi[0] <= 0.3 + 0.5 * lam + 1e-12);
        CHECK(std::abs(f.element(lam).value(Vec2(0.3, 0.0))) == doctest::Approx(1.0));
    }
    CHECK(f.element(1.5).empty());

    const TestingFamily flat = make_scaled_family(unit_profile(1, 0.2), Vec2::Zero(), 0.0, 0.0);
    const Vec2 x(0.13, 0.0);
    CHECK(std::abs(flat.element(0.5).value(x) - flat.element(0.01).value(x)) < 1e-14);

    FamilyOptions half;
    half.lambda0 = 0.5;
    const TestingFamily cut = make_scaled_family(unit_profile(1, 0.2), Vec2::Zero(), 1.0, 0.0, half);
    CHECK(cut.element(0.75).empty());
    CHECK_FALSE(cut.element(0.5).empty());
    CHECK(cut.check_invariants({1.0, 0.5, 0.25, 0.125}).empty());

    FamilyOptions mod;
    mod.modulation = Vec2(1.0, 0.0);
    const TestingFamily m = make_scaled_family(unit_profile(1, 0.1), Vec2::Zero(), 0.5, 0.5, mod);
    CHECK(m.growth() == doctest::Approx(1.5));

    CHECK_THROWS_AS(make_scaled_family(unit_profile(1, 0.8), Vec2::Zero(), 1.0, 0.0), ConstructionError);
    CHECK_THROWS_AS(make_scaled_family(unit_profile(1, 0.2), Vec2::Zero(), 1.5, 0.0), ConstructionError);
    CHECK_THROWS_AS(make_scaled_family(TestFunction(1), Vec2::Zero(), 1.0, 0.0), ConstructionError);
}

TEST_CASE("functional models evaluate and translate") {
    const FunctionalModel fa = FunctionalModel::function_algebra(delta_kernel(0.0));
    const TestFunction f = TestFunction::bump(1, Vec2(0.1, 0.0), 0.3);
    CHECK(std::abs(fa.evaluate({f}) - f.value(Vec2::Zero())) < 1e-15);
    CHECK_THROWS_AS(fa.evaluate({f, f}), UnsupportedError);
    CHECK(fa.describe() == "function-algebra:delta");

    // alpha_x respects the pointwise product on sampled triples.
    const TestFunction g = TestFunction::gaussian(1, Vec2(-0.2, 0.0), 0.4);
    for (double x : {-0.7, 0.2, 1.1})
        for (double y : {-0.3, 0.05, 0.4}) {
            const Vec2 s(x, 0.0), p(y, 0.0);
            const cplx lhs = f.value(p - s) * g.value(p - s);
            const cplx rhs = fa.translate(f, s).value(p) * fa.translate(g, s).value(p);
            CHECK(std::abs(lhs - rhs) < 1e-14);
        }

    const auto st = state_of("vacuum:m=1");
    const FunctionalModel w = FunctionalModel::weyl_state(st, 0.3);
    const TestFunction a = TestFunction::bump(2, Vec2(0.0, 0.0), 0.4), b = TestFunction::bump(2, Vec2(0.2, 0.1), 0.3);
    CHECK(std::abs(w.evaluate({a, b}) - weyl_correlation(*st, {a.scaled(0.3), b.scaled(0.3)})) < 1e-14);
    CHECK(w.killing_field(Vec2(0.3, -2.0)) == Vec2(1.0, 0.0));
    CHECK(w.dim() == 2);
    CHECK_THROWS_AS(FunctionalModel::weyl_state(st, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(FunctionalModel::function_algebra(st->two_point_kernel()), UnsupportedError);
}

TEST_CASE("function-algebra probe matches direct quadrature of the oscillatory integral") {
    const FunctionalModel fa = FunctionalModel::function_algebra(delta_kernel(0.0));
    FamilyOptions fo;
    fo.modulation = Vec2(-1.0, 0.0);
    const TestingFamily fam = make_scaled_family(unit_profile(1, 0.2).scaled(5.0), Vec2::Zero(), 1.0, 1.0, fo);
    AcsOptions opts;
    opts.j_min = 3;
    opts.j_max = 5;
    const DecayLadder d = acs_probe(fa, AcsQuery{1, 1.0, {CovectorPoint{Vec2::Zero(), Vec2(1.0, 0.0)}}}, {fam}, opts);
    REQUIRE(d.amplitudes.size() == 3);
    // For delta at 0: int exp(-iKy) h(y) A(-y) dy, K over the radial net.
    const TestFunction h = TestFunction::bump(1, Vec2::Zero(), 0.5);
    const double hn = h.l1_norm();
    const std::vector<VecX> net = cone_net(VecX::Ones(1), 5.0 * kPi / 180.0, opts.net);
    for (int j = 0; j < 3; ++j) {
        const double lam = std::ldexp(1.0, -(3 + j));
        const TestFunction a = fam.element(lam);
        double best = 0.0;
        for (const VecX& v : net) {
            const double K = v[0] / lam;
            const cplx s = integrate_composite(
                [&](double y) { return std::polar(1.0, -K * y) * h.value(Vec2(y, 0.0)) * a.value(Vec2(-y, 0.0)); },
                -0.5, 0.5, lam / 400.0, 16);
            best = std::max(best, std::abs(s));
        }
        INFO(std::abs(d.amplitudes[j] - best / hn));
        CHECK(d.amplitudes[j] == doctest::Approx(best / hn).epsilon(1e-8));
    }
    CHECK(d.scales[0] == doctest::Approx(8.0));

    CHECK_THROWS_AS(acs_probe(fa, AcsQuery{2, 1.0, {CovectorPoint{}, CovectorPoint{}}}, {fam, fam}, opts),
                    UnsupportedError);
    CHECK_THROWS_AS(acs_probe(fa, AcsQuery{1, 1.0, {CovectorPoint{}}}, {fam}, opts), DomainError);
}

TEST_CASE("function-algebra verdicts on reference kernels") {
    const FunctionalModel gauss = FunctionalModel::function_algebra(gaussian_density_kernel(0.0));
    const FunctionalModel delta = FunctionalModel::function_algebra(delta_kernel(0.0));
    const std::vector<ScanTask> tasks = {task1(0.0, 1.0), task1(0.0, -1.0), task1(0.8, 1.0), task1(-1.2, -1.0)};

    const SpectrumReport g = estimate_acs(gauss, 1, 1.0, tasks);
    for (const ReportEntry& e : g.entries)
        CHECK(e.verdict() == Verdict::regular);

    const SpectrumReport d1 = estimate_acs(delta, 1, 1.0, tasks);
    const std::vector<Verdict> expect = {Verdict::singular, Verdict::singular, Verdict::regular, Verdict::regular};
    for (std::size_t i = 0; i < tasks.size(); ++i)
        CHECK(d1.entries[i].verdict() == expect[i]);
    CHECK(d1.extra["acs"]["battery_size"] == 8);
    CHECK(d1.extra["acs"]["regular_means"] == "regular with respect to the battery");
    CHECK(d1.extra["acs"]["envelope"]["radius"] == 0.5);

    AcsOptions one;
    one.battery = 1;
    const SpectrumReport d_single = estimate_acs(delta, 1, 1.0, tasks, one);
    CHECK(d_single.extra["acs"]["battery_size"] == 1);
    const SpectrumReport d_half = estimate_acs(delta, 1, 0.5, tasks);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK(d_single.entries[i].verdict() == d1.entries[i].verdict());
        CHECK(d_half.entries[i].verdict() == d1.entries[i].verdict());
    }
    CHECK(estimate_acs(delta, 1, 1.0, {}).entries.empty());
    CHECK(estimate_acs(delta, 1, 0.0, {task1(0.0, 1.0)}).extra["acs"]["mu0"] == "battery proxy");
}

TEST_CASE("probe amplitudes are conic and translation covariant") {
    AcsOptions opts;
    opts.j_min = 3;
    opts.j_max = 6;
    const FunctionalModel d0 = FunctionalModel::function_algebra(heaviside_kernel(0.0));
    const FunctionalModel d3 = FunctionalModel::function_algebra(heaviside_kernel(0.3));
    const CovectorPoint p{Vec2(0.05, 0.0), Vec2(-1.0, 0.0)};
    const auto fam0 = family_battery(d0, p, 1.0, opts);
    const CovectorPoint shifted{Vec2(0.35, 0.0), Vec2(-1.0, 0.0)};
    const auto fam3 = family_battery(d3, shifted, 1.0, opts);
    const CovectorPoint scaled{p.base, 7.5 * p.xi};
    const auto fam_s = family_battery(d0, scaled, 1.0, opts);
    for (std::size_t i = 0; i < fam0.size(); i += 3) {
        const DecayLadder a = acs_probe(d0, AcsQuery{1, 1.0, {p}}, {fam0[i]}, opts);
        const DecayLadder b = acs_probe(d3, AcsQuery{1, 1.0, {shifted}}, {fam3[i]}, opts);
        const DecayLadder c = acs_probe(d0, AcsQuery{1, 1.0, {scaled}}, {fam_s[i]}, opts);
        for (std::size_t j = 0; j < a.amplitudes.size(); ++j) {
            CHECK(b.amplitudes[j] == doctest::Approx(a.amplitudes[j]).epsilon(1e-9));
            CHECK(c.amplitudes[j] == doctest::Approx(a.amplitudes[j]).epsilon(1e-12));
        }
        CHECK(a.verdict == b.verdict);
    }
}

TEST_CASE("ACS of order one agrees with the wavefront scanner") {
    const std::vector<ScanTask> tasks = {task1(0.0, 1.0), task1(0.0, -1.0), task1(0.9, 1.0),
                                         task1(-0.9, -1.0), task1(1.5, -1.0), task1(-2.0, 1.0)};
    for (const SmearableKernel& k : {delta_kernel(0.0), heaviside_kernel(0.0), gaussian_density_kernel(0.0)}) {
        const EquivalenceResult r = acs_wf_equivalence(k, tasks, 1.0);
        INFO(k.name);
        CHECK(r.score == 1.0);
        CHECK(r.compared >= 5);
        CHECK(r.to_json()["acs"]["entries"].size() == tasks.size());
    }
}

TEST_CASE("first-order Weyl expansion against exact and brute-force values") {
    // Vacuum, one slot at K = 0: the expectation is |h|_1 exp(-w(e, e) / 2) exactly.
    const auto vac = state_of("vacuum:m=1");
    const TestFunction h = TestFunction::bump(2, Vec2::Zero(), 0.25);
    const TestFunction f = TestFunction::bump(2, Vec2::Zero(), 0.3);
    const SymbolBuild sb = build_weyl_symbol(vac, Vec2::Zero(), h, f, 1.0, 0.0, 0.5);
    const double lam = 0.5;
    const TestFunction e = f.pulled_back(Mat2::Identity() / lam).translated(Vec2(0.2, 0.1)).scaled(0.5);
    const cplx exact = h.fourier(Vec2::Zero()) * std::exp(-0.5 * vac->two_point(e, e));
    CHECK(std::abs(sb.symbol.expectation(Vec2(0.2, 0.1), Vec2::Zero(), lam) - exact) < 1e-8 * std::abs(exact));

    // Squeezed state: time dependence enters through the (+,+) and (-,-) channels.
    const auto sq = state_of("squeezed:m=1,theta=0.5");
    const SymbolBuild ss = build_weyl_symbol(sq, Vec2::Zero(), h, f, 1.0, 0.0, 0.05);
    const Vec2 xi(3.0, -1.0);
    const TestFunction e0 = f.pulled_back(Mat2::Identity() / lam).scaled(0.05);
    // The channels are invariant under spatial shifts, so the Weyl expectation
    // of the shifted element depends on the time shift only.
    auto g = [&](double t) {
        const TestFunction ey = e0.translated(Vec2(t, 0.0));
        return std::exp(-0.5 * sq->two_point(ey, ey));
    };
    const TestFunction e1 = e0.translated(Vec2(0.1, 0.2));
    CHECK(std::abs(std::exp(-0.5 * sq->two_point(e1, e1)) - g(0.1)) < 1e-12);
    const TestFunction h0 = TestFunction::bump(1, Vec2::Zero(), 0.25);
    const cplx brute = integrate_composite([&](double t) { return g(t) * h0.value(Vec2(t, 0.0)) * std::polar(1.0, -xi[0] * t); },
                                           -0.25, 0.25, 0.05) *
                       h0.fourier(Vec2(xi[1], 0.0));
    const cplx got = ss.symbol.expectation(Vec2::Zero(), xi, lam);
    const detail::WeylExpansion ex(*sq, {{e0, h}}, 1e-24);
    CHECK(std::abs(got - brute) < 1e-8 * h.l1_norm() + ex.remainder() * h.l1_norm());
    CHECK(ex.remainder() < 1e-9);
    CHECK(ex.phase0().real() < 0.0);
}

TEST_CASE("remainder rule") {
    LadderConfig cfg;
    std::vector<double> s, a, small(8, 1e-20), big(8, 1e-13);
    for (int j = 0; j < 8; ++j) {
        s.push_back(std::ldexp(1.0, j + 3));
        a.push_back(std::exp(-std::sqrt(2.0 * s.back())) * 1e3);
    }
    CHECK(detail::classify_with_remainder(s, a, small, cfg).verdict == Verdict::regular);
    const DecayLadder r = detail::classify_with_remainder(s, a, big, cfg);
    CHECK(r.verdict == Verdict::inconclusive);
    std::vector<double> flat;
    for (double x : s)
        flat.push_back(1e-9 / x);
    CHECK(detail::classify_with_remainder(s, flat, small, cfg).verdict == Verdict::singular);
    std::vector<double> noisy = small;
    noisy.back() = 1e-10;
    CHECK(detail::classify_with_remainder(s, flat, noisy, cfg).verdict == Verdict::inconclusive);
}

TEST_CASE("Weyl-state probes of order two") {
    const auto vac = state_of("vacuum:m=1");
    const FunctionalModel w = FunctionalModel::weyl_state(vac);
    const std::vector<ScanTask> grid = radzikowski_grid();
    AcsOptions opts;
    opts.battery = 2;
    // 0: null directions at coincident points; 3: the flipped orientation; 17: null-separated pair.
    const SpectrumReport r = estimate_acs(w, 2, 1.0, {grid[0], grid[3], grid[17]}, opts);
    CHECK(r.entries[0].verdict() == Verdict::singular);
    CHECK(r.entries[1].verdict() == Verdict::regular);
    CHECK(r.entries[2].verdict() == Verdict::singular);
    CHECK(r.extra["acs"]["pairing"] == "diagonal");
    CHECK(r.extra["acs"]["epsilon"] == 1e-4);
}

TEST_CASE("stationary scans and the energy balance verdict") {
    const std::vector<ScanTask> grid = radzikowski_grid();
    AcsOptions opts;
    opts.battery = 2;
    const std::vector<ScanTask> tasks = {grid[0], grid[2]};
    const StationaryResult vac =
        stationary_acs_scan(FunctionalModel::weyl_state(state_of("vacuum:m=1")), 1.0, tasks, opts);
    CHECK(vac.verdict == "pass");
    CHECK(vac.report.entries[0].verdict() == Verdict::singular);
    CHECK(vac.report.entries[1].verdict() == Verdict::regular);
    CHECK(vac.singular_balanced == std::vector<int>{0});

    const StationaryResult sq =
        stationary_acs_scan(FunctionalModel::weyl_state(state_of("squeezed:m=1,theta=0.5")), 1.0, tasks, opts);
    CHECK(sq.verdict == "FAIL");
    CHECK(sq.report.entries[1].verdict() == Verdict::singular);
    CHECK(sq.to_json()["violating_not_regular"] == json::array({1}));

    ScanTask conormal = grid[0];
    conormal.points[1].xi = Vec2(0.01, 1.0);
    CHECK_THROWS_AS(stationary_acs_scan(FunctionalModel::weyl_state(state_of("vacuum:m=1")), 1.0, {conormal}, opts),
                    DomainError);
    CHECK_THROWS_AS(stationary_acs_scan(FunctionalModel::function_algebra(delta_kernel()), 1.0, {}, opts),
                    UnsupportedError);
}

TEST_CASE("Weyl testing symbols") {
    const auto vac = state_of("vacuum:m=1");
    const TestFunction h = TestFunction::bump(2, Vec2::Zero(), 0.25);
    const TestFunction f = TestFunction::bump(2, Vec2::Zero(), 0.2).scaled(25.0);
    AcsOptions opts;
    opts.j_min = 3;
    opts.j_max = 7;

    const SymbolBuild zero = build_weyl_symbol(vac, Vec2::Zero(), TestFunction(2), f, 1.0, 2.0, 1e-4, opts);
    CHECK(zero.symbol.is_zero());
    CHECK(zero.symbol.expectation(Vec2::Zero(), Vec2(1.0, 0.0), 0.1) == cplx(0.0));
    CHECK(zero.estimate.passed);
    CHECK(zero.estimate.C == 0.0);
    CHECK_THROWS_AS(build_weyl_symbol(vac, Vec2::Zero(), h, f, 0.5), std::invalid_argument);

    const SymbolBuild sb = build_weyl_symbol(vac, Vec2::Zero(), h, f, 1.0, 2.0, 1e-4, opts);
    CHECK(sb.estimate.passed);
    CHECK(std::isfinite(sb.estimate.m));
    const double hn = h.l1_norm();
    for (double lam : {0.5, 0.1, 0.01})
        for (const Vec2& xi : {Vec2(0.0, 0.0), Vec2(3.0, 1.0), Vec2(-40.0, 20.0)})
            CHECK(std::abs(sb.symbol.expectation(Vec2(0.1, -0.2), xi, lam)) <= hn * (1.0 + 1e-9));

    const CovectorPoint q{Vec2::Zero(), Vec2(-1.0, 1.0)}, qn{Vec2(1.0, 1.0), Vec2(1.0, -1.0)};
    const CovectorPoint qs{Vec2(0.0, 1.0), Vec2(0.0, 1.0)};
    const SymbolBuild sb1 = build_weyl_symbol(vac, qn.base, h, f, 1.0, 2.0, 1e-4, opts);
    AcsOptions ladder;
    CHECK(gacs_probe(sb.symbol, sb1.symbol, q, qn, ladder).verdict == Verdict::singular);
    const SymbolBuild sb2 = build_weyl_symbol(vac, qs.base, h, f, 1.0, 2.0, 1e-4, opts);
    CHECK(gacs_probe(sb.symbol, sb2.symbol, CovectorPoint{q.base, Vec2(0.0, -1.0)}, qs, ladder).verdict ==
          Verdict::regular);
    const DecayLadder z = gacs_probe(zero.symbol, sb.symbol, q, qn, ladder);
    CHECK(z.verdict == Verdict::regular);
    CHECK(z.annotation == "floor");
}
