#include "microspec/acs.hpp"

#include <cmath>
#include <sstream>

#include "acs_detail.hpp"
#include "microspec/errors.hpp"
#include "microspec/kernels.hpp"

namespace microspec {

using detail::WeylExpansion;
using detail::WeylSlot;

namespace {

double box_reach(const Box& b, const Vec2& p, int dim) {
    double r = 0.0;
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < (dim == 2 ? 2 : 1); ++cy) {
            Vec2 c(cx ? b.hi[0] : b.lo[0], cy ? b.hi[1] : b.lo[1]);
            Vec2 d = c - p;
            if (dim == 1)
                d[1] = 0.0;
            r = std::max(r, d.norm());
        }
    return r;
}

double c1_seminorm(const TestFunction& f) {
    double s = f.sup_bound();
    for (int axis = 0; axis < f.dim(); ++axis)
        s += f.derivative(axis).sup_bound();
    return s;
}

VecX joint_direction(const std::vector<CovectorPoint>& pts, int dim) {
    VecX v(dim * static_cast<int>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (int i = 0; i < dim; ++i)
            v[dim * static_cast<int>(j) + i] = pts[j].xi[i];
    if (!(v.norm() > 0.0))
        throw DomainError("acs probe: every covector vanishes");
    return v / v.norm();
}

Vec2 slot_of(const VecX& v, int j, int dim) {
    return dim == 2 ? Vec2(v[2 * j], v[2 * j + 1]) : Vec2(v[j], 0.0);
}

// Nodes and weights covering [-r, r] with panels no wider than `width`.
void envelope_nodes(double r, double width, std::vector<double>& y, std::vector<double>& w) {
    const GaussRule& rule = gauss_legendre(12);
    const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * r / width)));
    const double h = 2.0 * r / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            y.push_back(-r + (p + 0.5) * h + 0.5 * h * rule.nodes[i]);
            w.push_back(0.5 * h * rule.weights[i]);
        }
}

double smallest_scale(const TestFunction& f) {
    double s = 1e300;
    for (const TestTerm& t : f.terms())
        s = std::min(s, 1.0 / std::abs(t.shape(0, 0)));
    return s;
}

double largest_modulation(const TestFunction& f) {
    double q = 0.0;
    for (const TestTerm& t : f.terms())
        q = std::max(q, std::abs(t.modulation[0]));
    return q;
}

// Function-algebra amplitude at one scale: sup over K of
// |int exp(-i K y) h(y) u(A(. - y)) dy| / |h|_1.
double function_algebra_amplitude(const SmearableKernel& u, const TestFunction& a, const TestFunction& h,
                                  double h_norm, const std::vector<double>& ks, double r_h) {
    if (a.empty())
        return 0.0;
    double best = 0.0;
    if (u.prefers_spectral && u.spectral) {
        const SpectralTest sa = spectral_test(a), sh = spectral_test(h);
        for (double k : ks) {
            SpectralTest g;
            g.fourier = [&](double q) { return sa.fourier(q) * sh.fourier(q + k); };
            g.bound = [&](double lo, double hi) { return sa.bound(lo, hi) * sh.bound(lo + k, hi + k); };
            IntervalSet shifted;
            for (const Interval& iv : sh.domain)
                shifted.push_back({iv.lo - k, iv.hi - k});
            g.domain = intersect(sa.domain, normalized(shifted));
            g.fine_width = std::min(sa.fine_width, sh.fine_width);
            best = std::max(best, std::abs(u.spectral(g)));
        }
        return best / h_norm;
    }
    double kmax = 0.0;
    for (double k : ks)
        kmax = std::max(kmax, std::abs(k));
    const double width =
        std::min({r_h / 4.0, kPi / (kmax + largest_modulation(a) + 1.0), 0.25 * smallest_scale(a)});
    std::vector<double> y, w;
    envelope_nodes(r_h, width, y, w);
    std::vector<cplx> g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        g[i] = w[i] * h.value(Vec2(y[i], 0.0)) * u.pair1(a.translated(Vec2(y[i], 0.0)));
    for (double k : ks) {
        cplx s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (g[i] != 0.0)
                s += g[i] * std::polar(1.0, -k * y[i]);
        best = std::max(best, std::abs(s));
    }
    return best / h_norm;
}

TestFunction envelope_bump(int dim, double r) { return TestFunction::bump(dim, Vec2::Zero(), r); }

}  // namespace

// ---------------------------------------------------------------------------
// Families

TestFunction TestingFamily::element(double lambda) const {
    const int dim = profile_.dim();
    if (!(lambda > 0.0) || lambda > opts_.lambda0)
        return TestFunction(dim);
    const double s = std::pow(lambda, mu_);
    TestFunction g = profile_.pulled_back(Mat2::Identity() / s).translated(base_);
    const Vec2 nu = opts_.modulation / lambda;
    if (nu.norm() > 0.0) {
        if (opts_.real)
            g = (g.modulated(nu) + g.modulated(-nu)).scaled(0.5);
        else
            g = g.modulated(nu);
    }
    return g.scaled(std::pow(lambda, -a_));
}

std::vector<std::string> TestingFamily::check_invariants(const std::vector<double>& lambdas) const {
    std::vector<std::string> bad;
    const int dim = profile_.dim();
    std::vector<double> x, v;
    for (double lam : lambdas) {
        const TestFunction e = element(lam);
        if (lam > opts_.lambda0) {
            if (!e.empty())
                bad.push_back("element nonzero above the cutoff at lambda=" + std::to_string(lam));
            continue;
        }
        const double allowed = std::pow(lam, mu_) * opts_.region_radius;
        if (!e.empty() && box_reach(e.support(), base_, dim) > allowed * (1.0 + 1e-12))
            bad.push_back("support leaves the scaled region at lambda=" + std::to_string(lam));
        const double sigma = c1_seminorm(e);
        if (!std::isfinite(sigma))
            bad.push_back("seminorm not finite at lambda=" + std::to_string(lam));
        else if (sigma > 0.0) {
            x.push_back(std::log(1.0 / lam));
            v.push_back(std::log(std::pow(lam, s_) * sigma));
        }
    }
    if (x.size() >= 3) {
        const std::size_t n = x.size(), keep = std::min<std::size_t>(5, n);
        const LineFit fit = fit_line({x.end() - keep, x.end()}, {v.end() - keep, v.end()});
        if (fit.slope > 0.05)
            bad.push_back("lambda^s sigma grows on the ladder (slope " + std::to_string(fit.slope) + ")");
    }
    return bad;
}

TestingFamily make_scaled_family(const TestFunction& f, const Vec2& p, double mu, double a,
                                 const FamilyOptions& opts) {
    if (!(mu >= 0.0 && mu <= 1.0))
        throw ConstructionError("testing family degree must lie in [0, 1]");
    if (f.empty())
        throw ConstructionError("testing family profile is empty");
    if (box_reach(f.support(), Vec2::Zero(), f.dim()) > opts.region_radius * (1.0 + 1e-12))
        throw ConstructionError("profile support exceeds the localization region");
    TestingFamily fam;
    fam.profile_ = f;
    fam.base_ = p;
    fam.mu_ = mu;
    fam.a_ = a;
    fam.opts_ = opts;
    fam.s_ = a + std::max(mu, opts.modulation.norm() > 0.0 ? 1.0 : 0.0);
    std::vector<double> ladder;
    for (int j = 0; j <= 12; ++j)
        ladder.push_back(std::ldexp(1.0, -j));
    ladder.push_back(2.0 * opts.lambda0);
    const std::vector<std::string> bad = fam.check_invariants(ladder);
    if (!bad.empty())
        throw ConstructionError("testing family '" + opts.label + "': " + bad.front());
    return fam;
}

// ---------------------------------------------------------------------------
// Models

FunctionalModel FunctionalModel::function_algebra(SmearableKernel u) {
    if (u.arity != 1 || u.dim != 1)
        throw UnsupportedError("function-algebra model needs a one-dimensional distribution");
    FunctionalModel m;
    m.kind_ = AlgebraKind::function_algebra;
    m.kernel_ = std::move(u);
    return m;
}

FunctionalModel FunctionalModel::weyl_state(std::shared_ptr<const QuasifreeState> state, double epsilon) {
    if (!state)
        throw std::invalid_argument("weyl_state: no state");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("weyl_state: field strength must be positive");
    FunctionalModel m;
    m.kind_ = AlgebraKind::weyl_state;
    m.state_ = std::move(state);
    m.epsilon_ = epsilon;
    return m;
}

std::string FunctionalModel::describe() const {
    if (kind_ == AlgebraKind::function_algebra)
        return "function-algebra:" + kernel_.name;
    std::ostringstream os;
    os << "weyl-state:" << state_->descriptor().to_string() << ",eps=" << epsilon_;
    return os.str();
}

cplx FunctionalModel::evaluate(const std::vector<TestFunction>& elements) const {
    if (kind_ == AlgebraKind::function_algebra) {
        if (elements.size() != 1)
            throw UnsupportedError("function-algebra functional takes one element");
        return kernel_.pair1(elements[0]);
    }
    std::vector<TestFunction> scaled;
    for (const TestFunction& e : elements)
        scaled.push_back(e.scaled(epsilon_));
    return weyl_correlation(*state_, scaled);
}

// ---------------------------------------------------------------------------
// Probes

std::vector<double> lambda_ladder(const AcsOptions& opts) {
    std::vector<double> l;
    for (int j = opts.j_min; j <= opts.j_max; ++j)
        l.push_back(std::ldexp(1.0, -j));
    return l;
}

double envelope_radius(const FunctionalModel& model, const AcsOptions& opts) {
    if (opts.envelope_radius > 0.0)
        return opts.envelope_radius;
    return model.kind() == AlgebraKind::function_algebra ? 0.5 : 0.25;
}

DecayLadder acs_probe(const FunctionalModel& model, const AcsQuery& query,
                      const std::vector<TestingFamily>& families, const AcsOptions& opts) {
    const int n = query.order;
    const int dim = model.dim();
    if (static_cast<int>(query.points.size()) != n || static_cast<int>(families.size()) != n)
        throw std::invalid_argument("acs_probe: one covector point and one family per slot");
    if (model.kind() == AlgebraKind::function_algebra && n != 1)
        throw UnsupportedError("function-algebra probes are implemented for order 1");
    if (n < 1 || n > 2)
        throw UnsupportedError("acs probes take one or two slots");
    for (const TestingFamily& f : families)
        if (f.dim() != dim)
            throw std::invalid_argument("acs_probe: family dimension does not match the model");
    const VecX dir = joint_direction(query.points, dim);
    const std::vector<VecX> net =
        cone_net(dir, opts.ladder.cone_half_angle_deg * kPi / 180.0, std::max(1, opts.net));
    const std::vector<double> lambdas = lambda_ladder(opts);
    std::vector<double> scales, amps, rems;
    try {
        if (model.kind() == AlgebraKind::function_algebra) {
            const double r_h = envelope_radius(model, opts);
            const TestFunction h = envelope_bump(1, r_h);
            const double hn = h.l1_norm();
            for (double lam : lambdas) {
                std::vector<double> ks;
                for (const VecX& v : net)
                    ks.push_back(v[0] / lam);
                scales.push_back(1.0 / lam);
                amps.push_back(function_algebra_amplitude(model.kernel(), families[0].element(lam), h, hn, ks, r_h));
            }
            return classify_ladder(scales, amps, opts.ladder);
        }
        for (double lam : lambdas) {
            std::vector<WeylSlot> slots;
            for (int j = 0; j < n; ++j)
                slots.push_back({families[j].element(lam).scaled(model.epsilon()), envelope_bump(2, envelope_radius(model, opts))});
            const WeylExpansion ex(model.state(), std::move(slots), opts.skip_tol);
            double best = 0.0;
            for (const VecX& v : net) {
                std::vector<Vec2> K;
                for (int j = 0; j < n; ++j)
                    K.push_back(slot_of(v, j, dim) / lam);
                best = std::max(best, std::abs(ex.value(K)));
            }
            scales.push_back(1.0 / lam);
            amps.push_back(best);
            rems.push_back(ex.remainder());
        }
        return detail::classify_with_remainder(scales, amps, rems, opts.ladder);
    } catch (const IntegrationFailure& e) {
        DecayLadder d;
        d.scales = scales;
        d.amplitudes = amps;
        d.annotation = std::string("quadrature failure: ") + e.what();
        return d;
    }
}

std::vector<TestingFamily> family_battery(const FunctionalModel& model, const CovectorPoint& point, double mu,
                                          const AcsOptions& opts) {
    const int dim = model.dim();
    const double len = point.xi.head(dim).norm();
    if (!(len > 0.0))
        throw DomainError("family battery: zero covector");
    const Vec2 xi_hat = dim == 2 ? Vec2(point.xi / len) : Vec2(point.xi[0] / len, 0.0);
    std::vector<TestingFamily> out;
    auto add = [&](double r, double a, const Vec2& nu, const std::string& tag) {
        FamilyOptions fo;
        fo.region_radius = opts.region_radius;
        fo.modulation = nu;
        fo.real = dim == 2;
        std::ostringstream os;
        os << tag << " r=" << r << " a=" << a;
        fo.label = os.str();
        const TestFunction profile = envelope_bump(dim, r).scaled(1.0 / std::pow(r, dim));
        out.push_back(make_scaled_family(profile, point.base, mu, a, fo));
    };
    const double base_a = dim * mu;
    for (double a : {base_a, base_a - 0.25})
        for (double r : opts.radii) {
            if (dim == 1) {
                add(r, a, -xi_hat, "anti-aligned");
                add(r, a, xi_hat, "aligned");
            } else {
                add(r, a, xi_hat, "cos-aligned");
                add(r, a, Vec2::Zero(), "plain");
            }
        }
    if (static_cast<int>(out.size()) > opts.battery)
        out.resize(std::max(1, opts.battery));
    return out;
}

namespace {

// Battery verdict: singular as soon as one tuple is singular, regular only
// when all are regular.
ReportEntry battery_entry(const std::vector<CovectorPoint>& points, double radius,
                          const std::function<DecayLadder(int)>& probe, int tuples,
                          const std::function<std::string(int)>& label) {
    ReportEntry e;
    e.points = points;
    e.radius = radius;
    int first_inconclusive = -1;
    DecayLadder worst_regular;
    int worst_index = -1;
    DecayLadder inconclusive;
    for (int i = 0; i < tuples; ++i) {
        const DecayLadder d = probe(i);
        if (d.verdict == Verdict::singular) {
            e.ladder = d;
            e.test = label(i);
            return e;
        }
        if (d.verdict == Verdict::inconclusive) {
            if (first_inconclusive < 0) {
                first_inconclusive = i;
                inconclusive = d;
            }
        } else if (worst_index < 0 || d.slope < worst_regular.slope) {
            worst_regular = d;
            worst_index = i;
        }
    }
    if (first_inconclusive >= 0) {
        e.ladder = inconclusive;
        e.test = label(first_inconclusive);
    } else {
        e.ladder = worst_regular;
        e.test = label(worst_index);
    }
    return e;
}

json acs_extra(const FunctionalModel& model, int order, double mu, const AcsOptions& opts,
               const std::vector<std::string>& labels) {
    json j = {{"model", model.describe()},
              {"order", order},
              {"mu", mu},
              {"battery", labels},
              {"battery_size", labels.size()},
              {"regular_means", "regular with respect to the battery"},
              {"envelope", {{"profile", "bump"}, {"radius", envelope_radius(model, opts)}}},
              {"lambda", {{"j_min", opts.j_min}, {"j_max", opts.j_max}}},
              {"net", opts.net}};
    if (model.kind() == AlgebraKind::weyl_state) {
        j["epsilon"] = model.epsilon();
        j["pairing"] = "diagonal";
    }
    if (mu == 0.0)
        j["mu0"] = "battery proxy";
    return j;
}

json acs_config(const AcsOptions& opts) {
    json c = to_json(opts.ladder);
    c["j_min"] = opts.j_min;
    c["j_max"] = opts.j_max;
    c["envelope_radius"] = opts.envelope_radius;
    c["net"] = opts.net;
    c["radii"] = opts.radii;
    c["battery"] = opts.battery;
    return c;
}

}  // namespace

SpectrumReport estimate_acs(const FunctionalModel& model, int order, double mu, const std::vector<ScanTask>& samples,
                            const AcsOptions& opts, Execution mode) {
    SpectrumReport r;
    r.kernel = model.describe();
    r.arity = order;
    r.dim = model.dim();
    r.config = acs_config(opts);
    r.entries.resize(samples.size());
    std::vector<std::string> labels;
    parallel_map(
        static_cast<int>(samples.size()),
        [&](int i) {
            const ScanTask& task = samples[i];
            if (static_cast<int>(task.points.size()) != order)
                throw std::invalid_argument("estimate_acs: sample arity differs from the order");
            std::vector<std::vector<TestingFamily>> batteries;
            for (const CovectorPoint& p : task.points)
                batteries.push_back(family_battery(model, p, mu, opts));
            const int tuples = static_cast<int>(batteries[0].size());
            AcsQuery q{order, mu, task.points};
            r.entries[i] = battery_entry(
                task.points, envelope_radius(model, opts),
                [&](int t) {
                    std::vector<TestingFamily> fam;
                    for (const auto& b : batteries)
                        fam.push_back(b[t]);
                    return acs_probe(model, q, fam, opts);
                },
                tuples, [&](int t) { return batteries[0][t].label(); });
        },
        mode);
    if (!samples.empty()) {
        for (const TestingFamily& f : family_battery(model, samples[0].points[0], mu, opts))
            labels.push_back(f.label());
    }
    r.extra["acs"] = acs_extra(model, order, mu, opts, labels);
    return r;
}

json EquivalenceResult::to_json() const {
    return {{"score", score}, {"compared", compared}, {"agreeing", agreeing},
            {"acs", report_to_json(acs)}, {"wavefront", report_to_json(wavefront)}};
}

EquivalenceResult acs_wf_equivalence(const SmearableKernel& u, const std::vector<ScanTask>& samples, double mu,
                                     const AcsOptions& opts, const LadderConfig& wf, Execution mode) {
    EquivalenceResult res;
    res.acs = estimate_acs(FunctionalModel::function_algebra(u), 1, mu, samples, opts, mode);
    res.wavefront = estimate_wavefront(u, samples, wf, mode);
    const std::size_t n = std::min(res.acs.entries.size(), res.wavefront.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        const Verdict a = res.acs.entries[i].verdict(), b = res.wavefront.entries[i].verdict();
        if (!conclusive(a) || !conclusive(b))
            continue;
        ++res.compared;
        res.agreeing += a == b;
    }
    res.score = res.compared == 0 ? 1.0 : static_cast<double>(res.agreeing) / res.compared;
    return res;
}

// ---------------------------------------------------------------------------
// Stationary scans

json StationaryResult::to_json() const {
    return {{"verdict", verdict},
            {"singular_balanced", singular_balanced},
            {"singular_unbalanced", singular_unbalanced},
            {"violating_not_regular", violating_not_regular},
            {"report", report_to_json(report)}};
}

StationaryResult stationary_acs_scan(const FunctionalModel& model, double mu, const std::vector<ScanTask>& samples,
                                     const AcsOptions& opts, double ang_tol_deg, double cone_tol, Execution mode) {
    if (model.kind() != AlgebraKind::weyl_state)
        throw UnsupportedError("stationary scans need a state on the Weyl algebra");
    const double sin_tol = std::sin(ang_tol_deg * kPi / 180.0);
    for (const ScanTask& t : samples) {
        if (t.points.size() != 2)
            throw std::invalid_argument("stationary scan: samples need two slots");
        for (const CovectorPoint& p : t.points) {
            const Vec2 x = model.killing_field(p.base);
            const double len = p.xi.norm();
            if (!(len > 0.0) || std::abs(p.xi.dot(x)) < sin_tol * len * x.norm())
                throw DomainError("stationary scan: covector annihilates the flow generator within ang_tol");
        }
    }
    StationaryResult res;
    SpectrumReport& r = res.report;
    r.kernel = model.describe();
    r.arity = 2;
    r.dim = 2;
    r.config = acs_config(opts);
    r.config["ang_tol_deg"] = ang_tol_deg;
    r.config["cone_tol"] = cone_tol;
    r.entries.resize(samples.size());
    const std::vector<double> lambdas = lambda_ladder(opts);
    const double half = opts.ladder.cone_half_angle_deg * kPi / 180.0;
    std::vector<std::string> labels;
    auto battery = [&](const CovectorPoint& p, double norm) {
        std::vector<TestingFamily> out;
        const Vec2 nu = p.xi / norm;
        const std::vector<std::pair<Vec2, std::string>> mods = {
            {nu, "cos-aligned"}, {Vec2(nu[0], nu[0]), "cos-null+"}, {Vec2(nu[0], -nu[0]), "cos-null-"},
            {Vec2::Zero(), "plain"}};
        for (double r : opts.radii)
            for (const auto& [m, tag] : mods) {
                FamilyOptions fo;
                fo.region_radius = opts.region_radius;
                fo.modulation = m;
                fo.real = true;
                std::ostringstream os;
                os << tag << " r=" << r << " a=" << 2 * mu;
                fo.label = os.str();
                out.push_back(make_scaled_family(envelope_bump(2, r).scaled(1.0 / (r * r)), p.base, mu, 2 * mu, fo));
            }
        if (static_cast<int>(out.size()) > opts.battery)
            out.resize(std::max(1, opts.battery));
        return out;
    };
    parallel_map(
        static_cast<int>(samples.size()),
        [&](int i) {
            const ScanTask& task = samples[i];
            VecX joint(4);
            joint << task.points[0].xi, task.points[1].xi;
            const double norm = joint.norm();
            Eigen::Vector2d tau_dir(task.points[0].xi.dot(model.killing_field(task.points[0].base)),
                                    task.points[1].xi.dot(model.killing_field(task.points[1].base)));
            const std::vector<VecX> net = cone_net(tau_dir / norm, half, std::max(1, opts.net));
            const auto b0 = battery(task.points[0], norm), b1 = battery(task.points[1], norm);
            const TestFunction h = envelope_bump(1, envelope_radius(model, opts));
            r.entries[i] = battery_entry(
                task.points, envelope_radius(model, opts),
                [&](int t) {
                    std::vector<double> scales, amps, rems;
                    try {
                        for (double lam : lambdas) {
                            std::vector<WeylSlot> slots = {{b0[t].element(lam).scaled(model.epsilon()), h},
                                                           {b1[t].element(lam).scaled(model.epsilon()), h}};
                            const WeylExpansion ex(model.state(), std::move(slots), opts.skip_tol);
                            double best = 0.0;
                            for (const VecX& v : net)
                                best = std::max(best, std::abs(ex.value({Vec2(v[0] / lam, 0.0), Vec2(v[1] / lam, 0.0)})));
                            scales.push_back(1.0 / lam);
                            amps.push_back(best);
                            rems.push_back(ex.remainder());
                        }
                    } catch (const IntegrationFailure& e) {
                        DecayLadder d;
                        d.annotation = std::string("quadrature failure: ") + e.what();
                        return d;
                    }
                    return detail::classify_with_remainder(scales, amps, rems, opts.ladder);
                },
                static_cast<int>(b0.size()), [&](int t) { return b0[t].label(); });
        },
        mode);
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
        const ReportEntry& e = r.entries[i];
        const double a = e.points[0].xi.dot(model.killing_field(e.points[0].base));
        const double b = e.points[1].xi.dot(model.killing_field(e.points[1].base));
        const double scale = std::max(std::abs(a), std::abs(b));
        const bool balanced = std::abs(a + b) / scale < cone_tol && b > 0.0;
        if (e.verdict() == Verdict::singular)
            (balanced ? res.singular_balanced : res.singular_unbalanced).push_back(i);
        if (!(b > 0.0) && e.verdict() != Verdict::regular)
            res.violating_not_regular.push_back(i);
    }
    res.verdict = res.singular_unbalanced.empty() && res.violating_not_regular.empty() ? "pass" : "FAIL";
    if (!samples.empty())
        for (const TestingFamily& f : battery(samples[0].points[0], 1.0))
            labels.push_back(f.label());
    r.extra["acs"] = acs_extra(model, 2, mu, opts, labels);
    r.extra["acs"]["flow"] = "time translation";
    r.extra["acs"]["envelope"]["variables"] = "flow parameter per slot";
    return res;
}

// ---------------------------------------------------------------------------
// Testing symbols

struct SymbolBuilder {
    static WeylSymbol make(std::shared_ptr<const QuasifreeState> state, const Vec2& p, const TestFunction& h,
                           const TestFunction& f, double s, double a, double eps, double skip_tol) {
        WeylSymbol w;
        w.state_ = std::move(state);
        w.base_ = p;
        w.h_ = h;
        w.f_ = f;
        w.s_ = s;
        w.a_ = a;
        w.epsilon_ = eps;
        w.skip_tol_ = skip_tol;
        return w;
    }
    static WeylSlot slot(const WeylSymbol& w, const Vec2& x, double lambda) {
        const TestFunction e =
            w.f_.pulled_back(Mat2::Identity() / std::pow(lambda, w.s_)).translated(x).scaled(w.epsilon_ * std::pow(lambda, -w.a_));
        return {e, w.h_};
    }
    static double skip(const WeylSymbol& w) { return w.skip_tol_; }
    static const QuasifreeState& state(const WeylSymbol& w) { return *w.state_; }
};

cplx WeylSymbol::expectation(const Vec2& x, const Vec2& xi, double lambda) const {
    if (is_zero())
        return 0.0;
    const WeylExpansion ex(*state_, {SymbolBuilder::slot(*this, x, lambda)}, skip_tol_);
    return ex.value({xi}) * ex.envelope_norm();
}

cplx WeylSymbol::correlation(const WeylSymbol& other, const Vec2& x, const Vec2& xi, const Vec2& xp, const Vec2& xip,
                             double lambda) const {
    if (is_zero() || other.is_zero())
        return 0.0;
    const WeylExpansion ex(*state_, {SymbolBuilder::slot(*this, x, lambda), SymbolBuilder::slot(other, xp, lambda)},
                           skip_tol_);
    return ex.value({xi, xip}) * ex.envelope_norm();
}

json WeylSymbol::to_json() const {
    return {{"state", state_ ? state_->descriptor().to_string() : ""},
            {"base", {base_[0], base_[1]}},
            {"s", s_},
            {"a", a_},
            {"epsilon", epsilon_},
            {"zero", is_zero()}};
}

json SymbolEstimate::to_json() const { return {{"passed", passed}, {"m", m}, {"C", C}, {"notes", notes}}; }

SymbolBuild build_weyl_symbol(std::shared_ptr<const QuasifreeState> state, const Vec2& p, const TestFunction& h,
                              const TestFunction& f, double s, double a, double epsilon, const AcsOptions& opts) {
    if (!(s >= 1.0))
        throw std::invalid_argument("build_weyl_symbol: s must be at least 1");
    if (!state)
        throw std::invalid_argument("build_weyl_symbol: no state");
    if (h.dim() != 2 || f.dim() != 2)
        throw std::invalid_argument("build_weyl_symbol: envelope and window live on the 2D chart");
    SymbolBuild out{SymbolBuilder::make(std::move(state), p, h, f, s, a, epsilon, opts.skip_tol), {}};
    SymbolEstimate& est = out.estimate;
    const WeylSymbol& sym = out.symbol;
    const std::vector<double> lambdas = lambda_ladder(opts);
    const double dx = 1e-3, dxi = 1e-2;
    const std::vector<Vec2> ks = {Vec2(1.0, 0.0), Vec2(0.0, 1.0), Vec2(1.0, 1.0)};
    // (|alpha|, |beta|) orders with unit-vector axes.
    struct Deriv {
        int ax, bx;  // -1 when absent
    };
    std::vector<Deriv> derivs = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {-1, 1}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            derivs.push_back({i, j});
    const int nd = static_cast<int>(derivs.size()), nl = static_cast<int>(lambdas.size());
    std::vector<std::vector<double>> val(nd, std::vector<double>(nl, 0.0));
    double peak = 0.0;
    for (int l = 0; l < nl; ++l) {
        const double lam = lambdas[l];
        for (const Vec2& k : ks) {
            const Vec2 xi = k / lam;
            auto A = [&](const Vec2& dxv, const Vec2& dxiv) { return sym.expectation(p + dxv, xi + dxiv, lam); };
            const cplx a00 = A(Vec2::Zero(), Vec2::Zero());
            peak = std::max(peak, std::abs(a00));
            for (int d = 0; d < nd; ++d) {
                const Vec2 ex = derivs[d].ax >= 0 ? Vec2(dx * Vec2::Unit(derivs[d].ax)) : Vec2(Vec2::Zero());
                const Vec2 ek = derivs[d].bx >= 0 ? Vec2(dxi * Vec2::Unit(derivs[d].bx)) : Vec2(Vec2::Zero());
                cplx v = a00;
                if (derivs[d].ax >= 0 && derivs[d].bx >= 0)
                    v = (A(ex, ek) - A(ex, Vec2::Zero()) - A(Vec2::Zero(), ek) + a00) / (dx * dxi);
                else if (derivs[d].ax >= 0)
                    v = (A(ex, Vec2::Zero()) - a00) / dx;
                else if (derivs[d].bx >= 0)
                    v = (A(Vec2::Zero(), ek) - a00) / dxi;
                val[d][l] = std::max(val[d][l], std::abs(v));
            }
        }
    }
    const double norm_h = h.empty() ? 0.0 : h.l1_norm();
    if (peak > norm_h * (1.0 + 1e-6) + 1e-300)
        est.notes.push_back("expectation exceeds the unitarity bound");
    // Differences of values near roundoff carry no information.
    const double noise = 1e-9 * std::max(peak, 1e-300) / std::min(dx, dxi);
    double m = 0.0;
    bool any = false;
    for (int d = 0; d < nd; ++d) {
        const int shift = (derivs[d].ax >= 0) - (derivs[d].bx >= 0);
        for (int l = 0; l + 1 < nl; ++l) {
            const double v0 = val[d][l], v1 = val[d][l + 1];
            if (v0 <= noise || v1 <= noise)
                continue;
            any = true;
            const double g = std::log(v1 / v0) / std::log((1.0 + 1.0 / lambdas[l + 1]) / (1.0 + 1.0 / lambdas[l]));
            m = std::max(m, g - shift);
        }
    }
    if (!any)
        est.notes.push_back("all differences at or below the noise level");
    double C = 0.0;
    for (int d = 0; d < nd; ++d) {
        const int shift = (derivs[d].ax >= 0) - (derivs[d].bx >= 0);
        for (int l = 0; l < nl; ++l)
            if (val[d][l] > noise)
                C = std::max(C, val[d][l] / std::pow(1.0 + 1.0 / lambdas[l], m + shift));
    }
    est.m = m;
    est.C = C;
    est.passed = std::isfinite(m) && std::isfinite(C) && est.notes.empty() == true;
    if (!any)
        est.passed = std::isfinite(C);
    return out;
}

DecayLadder gacs_probe(const WeylSymbol& a, const WeylSymbol& b, const CovectorPoint& q, const CovectorPoint& qp,
                       const AcsOptions& opts, double neighbourhood) {
    const std::vector<double> lambdas = lambda_ladder(opts);
    std::vector<double> scales, amps, rems;
    if (a.is_zero() || b.is_zero()) {
        for (double lam : lambdas) {
            scales.push_back(1.0 / lam);
            amps.push_back(0.0);
        }
        return classify_ladder(scales, amps, opts.ladder);
    }
    VecX joint(4);
    joint << q.xi, qp.xi;
    if (!(joint.norm() > 0.0))
        throw DomainError("gacs_probe: both covectors vanish");
    const std::vector<VecX> net =
        cone_net(joint / joint.norm(), opts.ladder.cone_half_angle_deg * kPi / 180.0, std::max(1, opts.net));
    const double d = neighbourhood;
    const std::vector<std::pair<Vec2, Vec2>> shifts = {
        {Vec2::Zero(), Vec2::Zero()}, {Vec2(d, 0.0), Vec2(0.0, d)}, {Vec2(0.0, -d), Vec2(-d, 0.0)}};
    try {
        for (double lam : lambdas) {
            double best = 0.0, rem = 0.0;
            for (const auto& [sx, sxp] : shifts) {
                const WeylExpansion ex(SymbolBuilder::state(a),
                                       {SymbolBuilder::slot(a, q.base + sx, lam), SymbolBuilder::slot(b, qp.base + sxp, lam)},
                                       SymbolBuilder::skip(a));
                rem = std::max(rem, ex.remainder());
                for (const VecX& v : net)
                    best = std::max(best, std::abs(ex.value({Vec2(v[0], v[1]) / lam, Vec2(v[2], v[3]) / lam})));
            }
            scales.push_back(1.0 / lam);
            amps.push_back(best);
            rems.push_back(rem);
        }
    } catch (const IntegrationFailure& e) {
        DecayLadder dl;
        dl.annotation = std::string("quadrature failure: ") + e.what();
        return dl;
    }
    return detail::classify_with_remainder(scales, amps, rems, opts.ladder);
}

}  // namespace microspec
