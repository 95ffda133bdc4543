#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "microspec/acs.hpp"
#include "microspec/field_states.hpp"
#include "microspec/geometry.hpp"
#include "microspec/kernels.hpp"
#include "microspec/microlocal.hpp"
#include "microspec/musc.hpp"

using namespace microspec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ScanTask line_task(double x, double d) { return ScanTask{{CovectorPoint{Vec2(x, 0.0), Vec2(d, 0.0)}}}; }

std::shared_ptr<const QuasifreeState> shared_state(const std::string& d) {
    static std::map<std::string, std::shared_ptr<const QuasifreeState>> cache;
    auto it = cache.find(d);
    if (it == cache.end())
        it = cache.emplace(d, std::make_shared<QuasifreeState>(make_state(StateDescriptor::parse(d)))).first;
    return it->second;
}

const HadamardResult& hadamard_of(const std::string& d) {
    static std::map<std::string, HadamardResult> cache;
    auto it = cache.find(d);
    if (it == cache.end())
        it = cache
                 .emplace(d, hadamard_verdict(*shared_state(d), SpacetimeModel::minkowski(), radzikowski_grid(),
                                              LadderConfig{}))
                 .first;
    return it->second;
}

bool past_pointing(const CovectorPoint& p) {
    const CausalClass c = classify_covector(SpacetimeModel::minkowski(), p);
    return c == CausalClass::null_past || c == CausalClass::timelike_past;
}

// 1. Reference kernels against their analytic wavefront sets, with amplitude
// spot checks against direct quadrature of the windowed transform.
Outcome reference_battery() {
    LadderConfig cfg;
    std::vector<ScanTask> tasks;
    for (double x : {-1.5, -0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9, 1.5})
        for (double d : {1.0, -1.0})
            tasks.push_back(line_task(x, d));
    int total = 0, wrong = 0, inconclusive = 0;
    for (const ReferenceKernel& rk : reference_kernels()) {
        const SpectrumReport r = estimate_wavefront(rk.kernel, tasks, cfg);
        for (const ReportEntry& e : r.entries) {
            ++total;
            if (e.verdict() == Verdict::inconclusive) {
                ++inconclusive;
                continue;
            }
            const bool truth = rk.in_wavefront(e.points[0].base[0], e.points[0].xi[0]);
            wrong += (e.verdict() == Verdict::singular) != truth;
        }
    }
    // Oracle: composite Gauss-Legendre on a grid much finer than the oscillation.
    const Window w{Vec2(0.3, 0.0), 0.2};
    const TestFunction chi = window_function(w, 1, Vec2::Zero());
    double worst = 0.0;
    for (double k : {5.0, 40.0, -120.0}) {
        const VecX kv = VecX::Constant(1, k);
        const cplx g = windowed_transform(gaussian_density_kernel(), {w}, kv);
        const cplx g_ref = integrate_composite(
            [&](double x) { return chi.value(Vec2(x, 0.0)) * std::exp(-x * x) * std::polar(1.0, -k * x); }, 0.1, 0.5,
            1e-3, 16);
        const Window wh{Vec2(0.0, 0.0), 0.2};
        const TestFunction chih = window_function(wh, 1, Vec2::Zero());
        const cplx h = windowed_transform(heaviside_kernel(), {wh}, kv);
        const cplx h_ref = integrate_composite(
            [&](double x) { return chih.value(Vec2(x, 0.0)) * std::polar(1.0, -k * x); }, 0.0, 0.2, 1e-3, 16);
        worst = std::max({worst, std::abs(g - g_ref), std::abs(h - h_ref)});
    }
    const bool pass = wrong == 0 && inconclusive <= 0.1 * total && worst < 1e-10;
    return {pass, std::to_string(total) + " entries, " + std::to_string(wrong) + " misclassified, " +
                      std::to_string(inconclusive) + " inconclusive; amplitude oracle error " + fmt("%.1e", worst)};
}

// 2. Radzikowski structure on the 6 x 8 grid.
Outcome radzikowski() {
    const HadamardResult& v = hadamard_of("vacuum:m=1");
    const HadamardResult& k = hadamard_of("kms:m=1,beta=1");
    const HadamardResult& s = hadamard_of("squeezed:m=1,theta=0.5");
    int past = 0;
    for (const ReportEntry& e : s.report.entries)
        if (e.verdict() == Verdict::singular && past_pointing(e.points[1]))
            ++past;
    const bool pass = v.verdict == "hadamard-consistent" && v.predicted_detected >= 4 &&
                      k.verdict == "hadamard-consistent" && k.predicted_detected >= 4 && past >= 1;
    return {pass, "vacuum " + v.verdict + " (" + std::to_string(v.predicted_detected) + "/" +
                      std::to_string(v.predicted_on_grid) + " predicted detected), kms " + k.verdict + " (" +
                      std::to_string(k.predicted_detected) + "), squeezed " +
                      std::to_string(past) + " singular entries with past-pointing second slot"};
}

// 3. Spectral residual of the vacuum.
Outcome spectral() {
    const QuasifreeState& s = *shared_state("vacuum:m=1");
    const TestFunction g = TestFunction::gaussian(2, Vec2::Zero(), 1.0).scaled(0.2);
    double back = 0.0, shell = 1e300;
    for (const Vec2& p : {Vec2(-4, 1), Vec2(-4, -1), Vec2(-5, 2), Vec2(-6, 0), Vec2(-3.5, 0.5)})
        back = std::max(back, vacuum_spectral_residual(s, spectral_probe(p, 2.0), g).relative);
    for (const Vec2& p : {Vec2(std::sqrt(2.0), 1.0), Vec2(std::sqrt(5.0), -2.0)})
        shell = std::min(shell, vacuum_spectral_residual(s, spectral_probe(p, 2.0), g).relative);
    return {back < 1e-6 && shell > 1e-5,
            "backward cone max " + fmt("%.1e", back) + ", mass shell min " + fmt("%.1e", shell)};
}

// 4. Order-one ACS against the wavefront scanner.
Outcome equivalence() {
    std::vector<ScanTask> tasks;
    for (double x : {0.0, 0.75, -0.75, 1.0, -1.0, 1.25, -1.25, 1.5, -1.5, 1.75, -1.75, 2.0, -2.0, 2.5, -2.5, 3.0, -3.0, 4.0})
        for (double d : {1.0, -1.0})
            tasks.push_back(line_task(x, d));
    bool pass = true;
    std::string detail;
    for (const SmearableKernel& k : {delta_kernel(), heaviside_kernel(), gaussian_density_kernel()})
        for (double mu : {1.0, 0.5}) {
            const EquivalenceResult r = acs_wf_equivalence(k, tasks, mu);
            pass = pass && r.score == 1.0 && r.compared >= 24;
            detail += (detail.empty() ? "" : ", ") + k.name + " mu=" + fmt("%g", mu) + " " +
                      std::to_string(r.agreeing) + "/" + std::to_string(r.compared);
        }
    return {pass, detail + " agreeing of " + std::to_string(tasks.size()) + " points"};
}

// 5. Closed-form and search-based membership on random Minkowski queries.
Outcome straight_cone() {
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
    int compared = 0, disagreements = 0, inside = 0;
    for (int n = 0; n < 500; ++n) {
        const Vec2 p1(2 * u(rng), 2 * u(rng));
        const Vec2 d = n % 3 ? Vec2(2 * u(rng), 2 * u(rng)) : Vec2::Zero();
        Vec2 xi2(u(rng), u(rng));
        if (n % 4) {
            const double a = pos(rng), b = n % 4 == 1 ? 0.0 : pos(rng);
            xi2 = a * Vec2(1, 1) + b * Vec2(1, -1);
        }
        Vec2 xi1 = -xi2;
        if (n % 5 == 0)
            xi1 += Vec2(u(rng), u(rng)) * 0.1;
        const ConeQuery q{{{p1, xi1}, {p1 + d, xi2}}, ConeVariant::minkowski_straight};
        if (xi1.norm() == 0.0 && xi2.norm() == 0.0)
            continue;
        const MembershipResult r = gamma_membership(mk, q);
        if (r.verdict == Membership::inconclusive)
            continue;
        ++compared;
        inside += r.verdict == Membership::inside;
        disagreements += r.verdict != gamma0_closed_form(q);
    }
    return {disagreements == 0 && compared >= 490,
            std::to_string(compared) + " conclusive of 500 (" + std::to_string(inside) + " inside), " +
                std::to_string(disagreements) + " disagreements"};
}

// 6. Vacuum WF-singular entries are never ACS-regular; cone containment.
Outcome containment() {
    const HadamardResult& v = hadamard_of("vacuum:m=1");
    const HadamardResult& s = hadamard_of("squeezed:m=1,theta=0.5");
    const SpectrumReport acs =
        estimate_acs(FunctionalModel::weyl_state(shared_state("vacuum:m=1")), 2, 1.0, radzikowski_grid());
    int violations = 0, compared = 0;
    for (std::size_t i = 0; i < acs.entries.size(); ++i)
        if (v.report.entries[i].verdict() == Verdict::singular) {
            ++compared;
            violations += acs.entries[i].verdict() == Verdict::regular;
        }
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    const ContainmentResult cv = musc_containment(v.report, mk, ConeVariant::lightlike_geodesic);
    const ContainmentResult cs = musc_containment(s.report, mk, ConeVariant::lightlike_geodesic);
    const bool pass = violations == 0 && compared > 0 && cv.verdict == "pass" && cs.verdict == "FAIL";
    return {pass, std::to_string(violations) + " of " + std::to_string(compared) +
                      " WF-singular entries ACS-regular (ACS: " + std::to_string(acs.count(Verdict::singular)) +
                      " singular, " + std::to_string(acs.count(Verdict::inconclusive)) +
                      " inconclusive); cone containment vacuum " + cv.verdict + ", squeezed " + cs.verdict};
}

// 7. Energy balance of stationary states.
Outcome stationary() {
    std::vector<ScanTask> tasks;
    for (const ScanTask& t : radzikowski_grid())
        if (std::abs(t.points[0].xi[0]) > 0.0 && std::abs(t.points[1].xi[0]) > 0.0)
            tasks.push_back(t);
    std::string detail;
    bool pass = true;
    for (const auto& [d, expect] : std::vector<std::pair<std::string, std::string>>{
             {"vacuum:m=1", "pass"}, {"kms:m=1,beta=1", "pass"}, {"squeezed:m=1,theta=0.5", "FAIL"}}) {
        const StationaryResult r = stationary_acs_scan(FunctionalModel::weyl_state(shared_state(d)), 1.0, tasks);
        pass = pass && r.verdict == expect;
        detail += (detail.empty() ? "" : ", ") + d + " " + r.verdict + " (" +
                  std::to_string(r.singular_balanced.size()) + " balanced singular, " +
                  std::to_string(r.violating_not_regular.size()) + " violating)";
    }
    return {pass, detail + " on " + std::to_string(tasks.size()) + " samples"};
}

// 8. Commutator, Klein-Gordon, positivity and sigma on 50 random pairs per state kind.
Outcome invariants() {
    const char* kinds[] = {"vacuum:m=1", "kms:m=1,beta=1", "squeezed:m=1,theta=0.5",
                           "conformal-vacuum:m=1,omega2=exp(2*t)"};
    const auto fs = random_test_functions(100, 31, true);
    StateOptions so;
    so.battery = 50;
    double comm = 0.0, kg = 0.0, herm = 0.0, pos = 1e300, sigma_spread = 0.0;
    for (int i = 0; i < 50; ++i) {
        const TestFunction &f = fs[2 * i], &h = fs[2 * i + 1];
        std::vector<cplx> sig;
        for (const char* d : kinds) {
            const QuasifreeState& s = *shared_state(d);
            sig.push_back(s.commutator(f, h));
            kg = std::max(kg, std::abs(kg_residual(s, f, h)));
        }
        for (const cplx& c : sig)
            sigma_spread = std::max(sigma_spread, std::abs(c - sig[0]));
    }
    for (const char* d : kinds) {
        const QuasifreeState s = make_state(StateDescriptor::parse(d), so);
        const StateCertificate& c = s.certificate();
        comm = std::max(comm, c.commutator);
        herm = std::max(herm, c.hermiticity);
        pos = std::min(pos, c.positivity);
    }
    const double tol = 1e-8;
    const bool pass = comm < tol && kg < tol && herm < tol && pos > -tol && sigma_spread < 2 * tol;
    return {pass, "commutator " + fmt("%.1e", comm) + ", KG " + fmt("%.1e", kg) + ", hermiticity " +
                      fmt("%.1e", herm) + ", min positivity " + fmt("%.1e", pos) + ", sigma spread " +
                      fmt("%.1e", sigma_spread)};
}

// 9. Determinism of reports and covariance under three linear maps.
Outcome determinism() {
    const SmearableKernel w2 = shared_state("vacuum:m=1")->two_point_kernel();
    const std::vector<ScanTask> grid = radzikowski_grid();
    const std::vector<ScanTask> tasks(grid.begin(), grid.begin() + 12);
    const std::string a = report_to_json(estimate_wavefront(w2, tasks, {}, Execution::parallel)).dump();
    const std::string b = report_to_json(estimate_wavefront(w2, tasks, {}, Execution::serial)).dump();
    const std::string c = report_to_json(estimate_wavefront(w2, tasks, {}, Execution::parallel)).dump();
    const SpectrumReport again = report_from_json(json::parse(a));
    const bool round_trip = report_to_json(again).dump() == a;
    const std::string s1 = make_state(StateDescriptor::parse("kms:m=1,beta=1")).certificate().to_json().dump();
    const std::string s2 = make_state(StateDescriptor::parse("kms:m=1,beta=1")).certificate().to_json().dump();

    std::vector<ScanTask> line;
    for (double x : {-0.6, -0.3, 0.0, 0.3, 0.6})
        for (double d : {1.0, -1.0})
            line.push_back(line_task(x, d));
    Mat2 two = Mat2::Identity(), flip = Mat2::Identity();
    two(0, 0) = 2.0;
    flip(0, 0) = -1.0;
    int score = 0, compared = 0;
    for (const ReferenceKernel& rk : reference_kernels())
        for (const Mat2& m : {Mat2(Mat2::Identity()), two, flip}) {
            const CovarianceResult r = transform_covariance_check(rk.kernel, m, line, {});
            score += r.score;
            compared += r.compared;
        }
    const bool identical = a == b && a == c && s1 == s2;
    return {identical && round_trip && score == 0,
            std::string("reports ") + (identical ? "byte-identical" : "DIFFER") + " (serial, parallel, rerun, seeded state)" +
                (round_trip ? ", JSON round trip exact" : ", JSON round trip differs") + "; covariance score " +
                std::to_string(score) + " over " + std::to_string(compared) + " comparisons"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria 1-9"};
    std::vector<int> only;
    std::string json_path;
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--json", json_path, "write a JSON summary");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"reference-kernel wavefront battery", reference_battery},
        {"Radzikowski structure", radzikowski},
        {"flat spectrum condition residual", spectral},
        {"ACS and wavefront equivalence at order one", equivalence},
        {"straight cone oracle equivalence", straight_cone},
        {"ACS and cone containment", containment},
        {"stationary energy balance", stationary},
        {"field-state invariants", invariants},
        {"determinism and covariance", determinism},
    };
    json summary = json::array();
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += o.pass ? 0 : 1;
        std::printf("criterion %d: %s [%s] %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        summary.push_back({{"criterion", id}, {"name", criteria[i].first}, {"pass", o.pass},
                           {"detail", o.detail}, {"seconds", secs}});
    }
    if (!json_path.empty())
        std::ofstream(json_path) << summary.dump(2) << '\n';
    return failed == 0 ? 0 : 1;
}
