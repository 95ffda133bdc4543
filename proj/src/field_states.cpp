#include "microspec/field_states.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "microspec/errors.hpp"
#include "microspec/expression.hpp"

namespace microspec {

namespace {

double omega_of(double k, double m) { return std::sqrt(k * k + m * m); }

double dist_to(double v, double lo, double hi) {
    return v < lo ? lo - v : (v > hi ? v - hi : 0.0);
}

// Momentum-space footprint of one term on the 2D chart.
struct TermInfo {
    const TestTerm* t = nullptr;
    Vec2 lo, hi;     // box outside of which the transform vanishes
    Vec2 spread;     // |(Q - modulation)_i| <= spread_i * |kappa|_inf
    double det = 1.0;
    double env_rate = 0.0;  // oscillation rate of the envelope transform in Q
};

TermInfo term_info(const TestTerm& t) {
    TermInfo in;
    in.t = &t;
    const double c = envelope_cutoff(t.envelope);
    for (int i = 0; i < 2; ++i)
        in.spread[i] = std::abs(t.shape(0, i)) + std::abs(t.shape(1, i));
    in.lo = t.modulation - c * in.spread;
    in.hi = t.modulation + c * in.spread;
    in.det = std::abs(t.shape.determinant());
    in.env_rate = t.shape.inverse().cwiseAbs().rowwise().sum().maxCoeff();
    return in;
}

// k with (s omega(k), sk * k) inside the term box.
IntervalSet slot_domain(const TermInfo& in, int s, int sk, double m) {
    const Interval kx = sk > 0 ? Interval{in.lo[1], in.hi[1]} : Interval{-in.hi[1], -in.lo[1]};
    double wlo = s > 0 ? in.lo[0] : -in.hi[0];
    const double whi = s > 0 ? in.hi[0] : -in.lo[0];
    wlo = std::max(wlo, m);
    if (!(whi > wlo))
        return {};
    const double klo = std::sqrt(std::max(0.0, wlo * wlo - m * m));
    const double khi = std::sqrt(whi * whi - m * m);
    return intersect(normalized({{-khi, -klo}, {klo, khi}}), {kx});
}

// Bound of |F[t](s omega, sk k)| (on-shell symbol included) for k in [k0, k1].
double slot_bound(const TermInfo& in, int s, int sk, double m, double k0, double k1) {
    const double kmin = (k0 <= 0.0 && k1 >= 0.0) ? 0.0 : std::min(std::abs(k0), std::abs(k1));
    const double kmax = std::max(std::abs(k0), std::abs(k1));
    const double w0 = omega_of(kmin, m), w1 = omega_of(kmax, m);
    const double q0lo = s > 0 ? w0 : -w1, q0hi = s > 0 ? w1 : -w0;
    const double q1lo = sk > 0 ? k0 : -k1, q1hi = sk > 0 ? k1 : -k0;
    const TestTerm& t = *in.t;
    double kap = 0.0;
    if (in.spread[0] > 0.0)
        kap = std::max(kap, dist_to(t.modulation[0], q0lo, q0hi) / in.spread[0]);
    if (in.spread[1] > 0.0)
        kap = std::max(kap, dist_to(t.modulation[1], q1lo, q1hi) / in.spread[1]);
    const double env = envelope_axis_bound(t.envelope, kap) * envelope_axis_bound(t.envelope, 0.0);
    return std::abs(t.coef) * t.diff.symbol_bound(w1, kmax) * env / in.det;
}

cplx shell_fourier(const TestTerm& t, double q0, double q1, double k, double m) {
    const cplx b = term_fourier_undifferentiated(t, 2, Vec2(q0, q1));
    if (b == 0.0 || t.diff.is_identity())
        return b;
    return b * t.diff.symbol_on_shell(q0, q1, k, m);
}

struct PairPlan {
    IntervalSet domain;
    double width = 1.0;
};

PairPlan plan_pair(const TermInfo& a, const TermInfo& b, const ModeChannel& ch, double m) {
    PairPlan p;
    p.domain = intersect(slot_domain(a, ch.sf, -1, m), slot_domain(b, ch.sh, 1, m));
    const Vec2& ca = a.t->center;
    const Vec2& cb = b.t->center;
    const double rate = std::abs(ch.sf * ca[0] + ch.sh * cb[0]) + std::abs(ca[1] - cb[1]) +
                        a.env_rate + b.env_rate;
    p.width = std::min(3.0 / (rate + 0.3), m);
    return p;
}

std::vector<ModeChannel> vacuum_channels() {
    return {ModeChannel{1, -1, [](double) { return 1.0; }, 1.0}};
}

}  // namespace

cplx mode_pairing(const std::vector<ModeChannel>& channels, double mass, const TestFunction& f,
                  const TestFunction& h, double skip_tol) {
    if (f.dim() != 2 || h.dim() != 2)
        throw std::invalid_argument("mode_pairing: test functions must live on the 2D chart");
    std::vector<TermInfo> fi, hi;
    for (const TestTerm& t : f.terms())
        fi.push_back(term_info(t));
    for (const TestTerm& t : h.terms())
        hi.push_back(term_info(t));
    const double m = mass;
    cplx sum = 0.0;
    for (const ModeChannel& ch : channels)
        for (const TermInfo& a : fi)
            for (const TermInfo& b : hi) {
                const PairPlan plan = plan_pair(a, b, ch, m);
                if (plan.domain.empty())
                    continue;
                auto integrand = [&](double k) {
                    const double w = omega_of(k, m);
                    const cplx fa = shell_fourier(*a.t, ch.sf * w, -k, k, m);
                    if (fa == 0.0)
                        return cplx(0.0);
                    return ch.weight(w) / (4.0 * kPi * w) * fa * shell_fourier(*b.t, ch.sh * w, k, k, m);
                };
                auto bound = [&](double k0, double k1) {
                    const double wmin = omega_of((k0 <= 0.0 && k1 >= 0.0) ? 0.0 : std::min(std::abs(k0), std::abs(k1)), m);
                    return ch.weight_max / (4.0 * kPi * wmin) * slot_bound(a, ch.sf, -1, m, k0, k1) *
                           slot_bound(b, ch.sh, 1, m, k0, k1);
                };
                sum += integrate_skipping(integrand, bound, plan.domain, plan.width, skip_tol);
            }
    return sum;
}

cplx symplectic_form(double mass, const TestFunction& f, const TestFunction& h) {
    static const std::vector<ModeChannel> vac = vacuum_channels();
    return cplx(0.0, -1.0) * (mode_pairing(vac, mass, f, h) - mode_pairing(vac, mass, h, f));
}

const char* to_string(StateKind k) {
    switch (k) {
        case StateKind::vacuum: return "vacuum";
        case StateKind::kms: return "kms";
        case StateKind::squeezed: return "squeezed";
        case StateKind::conformal_vacuum: return "conformal-vacuum";
    }
    return "?";
}

StateDescriptor StateDescriptor::parse(const std::string& text) {
    StateDescriptor d;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    if (kind == "vacuum")
        d.kind = StateKind::vacuum;
    else if (kind == "kms")
        d.kind = StateKind::kms;
    else if (kind == "squeezed")
        d.kind = StateKind::squeezed;
    else if (kind == "conformal-vacuum")
        d.kind = StateKind::conformal_vacuum;
    else
        throw ConfigError("unknown state kind '" + kind + "'");
    if (colon == std::string::npos)
        return d;
    // Split on commas outside parentheses so expressions may contain pow(a, b).
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (char c : text.substr(colon + 1)) {
        if (c == '(')
            ++depth;
        if (c == ')')
            --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        parts.push_back(cur);
    for (const std::string& p : parts) {
        const auto eq = p.find('=');
        if (eq == std::string::npos)
            throw ConfigError("state parameter '" + p + "' is not key=value");
        const std::string key = p.substr(0, eq), val = p.substr(eq + 1);
        auto number = [&]() {
            try {
                std::size_t used = 0;
                const double v = std::stod(val, &used);
                if (used != val.size())
                    throw std::invalid_argument(val);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("state parameter '" + key + "' needs a number, got '" + val + "'");
            }
        };
        if (key == "m" || key == "mass")
            d.mass = number();
        else if (key == "beta")
            d.beta = number();
        else if (key == "theta")
            d.theta = number();
        else if (key == "omega2")
            d.omega2 = val;
        else
            throw ConfigError("unknown state parameter '" + key + "'");
    }
    return d;
}

std::string StateDescriptor::to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << microspec::to_string(kind) << ":m=" << mass;
    if (kind == StateKind::kms)
        os << ",beta=" << beta;
    if (kind == StateKind::squeezed)
        os << ",theta=" << theta;
    if (kind == StateKind::conformal_vacuum)
        os << ",omega2=" << omega2;
    return os.str();
}

json StateDescriptor::to_json() const {
    json j{{"kind", microspec::to_string(kind)}, {"m", mass}};
    if (kind == StateKind::kms)
        j["beta"] = beta;
    if (kind == StateKind::squeezed)
        j["theta"] = theta;
    if (kind == StateKind::conformal_vacuum)
        j["omega2"] = omega2;
    return j;
}

json StateCertificate::to_json() const {
    return {{"samples", samples},     {"seed", seed},
            {"tolerance", tolerance}, {"hermiticity", hermiticity},
            {"positivity", positivity}, {"positivity_imag", positivity_imag},
            {"commutator", commutator}, {"passed", passed}};
}

cplx QuasifreeState::two_point(const TestFunction& f, const TestFunction& h) const {
    return mode_pairing(channels_, desc_.mass, f, h);
}

cplx QuasifreeState::commutator(const TestFunction& f, const TestFunction& h) const {
    return cplx(0.0, -1.0) * (two_point(f, h) - two_point(h, f));
}

SmearableKernel QuasifreeState::two_point_kernel() const {
    SmearableKernel k;
    k.name = desc_.to_string();
    k.reference = "two-point function of the quasifree state " + desc_.to_string();
    k.arity = 2;
    k.dim = 2;
    k.domain = Box{Vec2(-10.0, -10.0), Vec2(10.0, 10.0)};
    const std::vector<ModeChannel> channels = channels_;
    const double m = desc_.mass;
    k.pair2 = [channels, m](const TestFunction& f, const TestFunction& h) {
        return mode_pairing(channels, m, f, h);
    };
    return k;
}

std::vector<TestFunction> random_test_functions(int n, unsigned seed, bool real_only) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> centre(-1.0, 1.0), radius(0.3, 0.8), freq(-3.0, 3.0),
        phase(0.0, 2.0 * kPi), unit(0.0, 1.0);
    std::vector<TestFunction> out;
    for (int i = 0; i < n; ++i) {
        const Vec2 c(centre(rng), centre(rng));
        const double r = radius(rng);
        const Vec2 q(freq(rng), freq(rng));
        TestFunction f = real_only ? TestFunction::cosine_bump(2, c, r, q, 0.5 + unit(rng))
                                   : TestFunction::bump(2, c, r, q, std::polar(0.5 + unit(rng), phase(rng)));
        if (unit(rng) < 0.5) {
            const Vec2 c2(centre(rng), centre(rng));
            const double r2 = radius(rng);
            f = f + (real_only ? TestFunction::cosine_bump(2, c2, r2, Vec2::Zero(), 0.5)
                               : TestFunction::bump(2, c2, r2, Vec2(freq(rng), freq(rng)),
                                                    std::polar(0.5, phase(rng))));
        }
        out.push_back(std::move(f));
    }
    return out;
}

QuasifreeState make_state(const StateDescriptor& desc, const StateOptions& opts) {
    if (!(desc.mass > 0.0) || !std::isfinite(desc.mass))
        throw std::invalid_argument("state mass must be positive");
    QuasifreeState s;
    s.desc_ = desc;
    s.opts_ = opts;
    const double m = desc.mass;
    switch (desc.kind) {
        case StateKind::vacuum:
            s.channels_ = vacuum_channels();
            break;
        case StateKind::conformal_vacuum: {
            const SpacetimeModel model = SpacetimeModel::conformally_flat(desc.omega2, ChartDomain{});
            model.check_invariants();
            s.channels_ = vacuum_channels();
            break;
        }
        case StateKind::kms: {
            if (!(desc.beta > 0.0) || !std::isfinite(desc.beta))
                throw std::invalid_argument("kms state needs beta > 0");
            const double beta = desc.beta;
            auto bose = [beta](double w) { return 1.0 / std::expm1(beta * w); };
            s.channels_ = {ModeChannel{1, -1, [bose](double w) { return 1.0 + bose(w); }, 1.0 + bose(m)},
                           ModeChannel{-1, 1, bose, bose(m)}};
            break;
        }
        case StateKind::squeezed: {
            if (!std::isfinite(desc.theta))
                throw std::invalid_argument("squeezed state needs a finite theta");
            const double c = std::cosh(desc.theta), sh = std::sinh(desc.theta);
            auto constant = [](double v) { return [v](double) { return v; }; };
            s.channels_ = {ModeChannel{1, -1, constant(c * c), c * c},
                           ModeChannel{-1, 1, constant(sh * sh), sh * sh},
                           ModeChannel{1, 1, constant(c * sh), std::abs(c * sh)},
                           ModeChannel{-1, -1, constant(c * sh), std::abs(c * sh)}};
            break;
        }
    }

    const int n = opts.battery;
    const std::vector<TestFunction> reals = random_test_functions(2 * n, opts.seed, true);
    const std::vector<TestFunction> cplxs = random_test_functions(n, opts.seed + 1, false);
    struct Sample {
        double herm, pos, pos_imag, comm;
    };
    std::vector<Sample> samples(n);
    parallel_map(n, [&](int i) {
        const TestFunction& f = reals[2 * i];
        const TestFunction& h = reals[2 * i + 1];
        const cplx fh = s.two_point(f, h), hf = s.two_point(h, f);
        const cplx sigma = symplectic_form(m, f, h);
        const cplx ff = s.two_point(cplxs[i].conjugated(), cplxs[i]);
        samples[i] = {std::abs(fh - std::conj(hf)), ff.real(), std::abs(ff.imag()),
                      std::abs(fh - hf - cplx(0.0, 1.0) * sigma)};
    });
    StateCertificate& cert = s.cert_;
    cert.samples = n;
    cert.seed = opts.seed;
    cert.tolerance = opts.quad_tol;
    cert.positivity = n > 0 ? samples[0].pos : 0.0;
    for (const Sample& x : samples) {
        cert.hermiticity = std::max(cert.hermiticity, x.herm);
        cert.positivity = std::min(cert.positivity, x.pos);
        cert.positivity_imag = std::max(cert.positivity_imag, x.pos_imag);
        cert.commutator = std::max(cert.commutator, x.comm);
    }
    const double tol = opts.quad_tol;
    cert.passed = cert.hermiticity < tol && cert.positivity > -tol && cert.positivity_imag < tol &&
                  cert.commutator < tol;
    if (!cert.passed)
        throw ConstructionError("state " + desc.to_string() +
                                " failed its invariant battery: " + cert.to_json().dump());
    return s;
}

cplx weyl_correlation(const QuasifreeState& s, const std::vector<TestFunction>& fs) {
    if (fs.empty())
        return 1.0;
    cplx phase = 0.0;
    for (std::size_t j = 0; j < fs.size(); ++j)
        for (std::size_t l = j + 1; l < fs.size(); ++l)
            phase += symplectic_form(s.mass(), fs[j], fs[l]);
    TestFunction total = fs[0];
    for (std::size_t j = 1; j < fs.size(); ++j)
        total = total + fs[j];
    return std::exp(cplx(0.0, -0.5) * phase - 0.5 * s.two_point(total, total));
}

cplx kg_residual(const QuasifreeState& s, const TestFunction& f, const TestFunction& h) {
    return s.two_point(f.apply(DiffPoly::klein_gordon(s.mass())), h);
}

TestFunction spectral_probe(const Vec2& p, double width) {
    return TestFunction::gaussian(2, Vec2::Zero(), width, Vec2(-p[0], p[1]));
}

SpectralResidual vacuum_spectral_residual(const QuasifreeState& s, const TestFunction& f,
                                          const TestFunction& g, double limit) {
    SpectralResidual out;
    if (f.empty())
        return out;
    const Box box = f.support();
    if (box.lo.minCoeff() < -limit || box.hi.maxCoeff() > limit)
        throw DomainError("spectral residual: support of f exceeds the quadrature grid");
    const double m = s.mass();

    // Momentum nodes for w(g, g_x): one column per (channel, term pair, node).
    struct Column {
        cplx weight;
        double k, omega;
        int sh, sf;
    };
    std::vector<Column> cols;
    std::vector<TermInfo> gi;
    for (const TestTerm& t : g.terms())
        gi.push_back(term_info(t));
    const double xreach = std::max(box.hi.cwiseAbs().maxCoeff(), box.lo.cwiseAbs().maxCoeff());
    const GaussRule& rule = gauss_legendre(12);
    for (const ModeChannel& ch : s.channels())
        for (const TermInfo& a : gi)
            for (const TermInfo& b : gi) {
                const IntervalSet dom = intersect(slot_domain(a, ch.sf, -1, m), slot_domain(b, ch.sh, 1, m));
                PairPlan plan = plan_pair(a, b, ch, m);
                plan.width = std::min(plan.width, 3.0 / (4.0 * xreach + 0.3));
                for (const Interval& iv : dom) {
                    const int panels = std::max(1, static_cast<int>(std::ceil(iv.length() / plan.width)));
                    const double h = iv.length() / panels;
                    for (int p = 0; p < panels; ++p) {
                        const double lo = iv.lo + p * h;
                        const double bnd = ch.weight_max / (4.0 * kPi * m) *
                                           slot_bound(a, ch.sf, -1, m, lo, lo + h) *
                                           slot_bound(b, ch.sh, 1, m, lo, lo + h);
                        if (bnd * h < 1e-20)
                            continue;
                        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                            const double k = lo + 0.5 * h * (1.0 + rule.nodes[i]);
                            const double w = omega_of(k, m);
                            const cplx v = ch.weight(w) / (4.0 * kPi * w) *
                                           shell_fourier(*a.t, ch.sf * w, -k, k, m) *
                                           shell_fourier(*b.t, ch.sh * w, k, k, m) * (0.5 * h * rule.weights[i]);
                            if (v != 0.0)
                                cols.push_back({v, k, w, ch.sh, ch.sf});
                        }
                    }
                }
            }
    // Columns far below the bulk only cost position resolution.
    double total = 0.0;
    for (const Column& c : cols)
        total += std::abs(c.weight);
    std::erase_if(cols, [&](const Column& c) { return std::abs(c.weight) < 1e-16 * total; });
    double kmax = 0.0, wmax = m;
    for (const Column& c : cols) {
        kmax = std::max(kmax, std::abs(c.k));
        wmax = std::max(wmax, c.omega);
    }

    // Position nodes over the support of f, per axis.
    Vec2 frate = Vec2::Zero();
    for (const TestTerm& t : f.terms())
        frate = frate.cwiseMax(t.modulation.cwiseAbs() + t.shape.cwiseAbs().rowwise().sum());
    const Vec2 pw(6.0 / (frate[0] + 2.0 * wmax + 0.3), 6.0 / (frate[1] + 2.0 * kmax + 0.3));
    auto axis = [&](double lo, double hi, double width, std::vector<double>& x, std::vector<double>& w) {
        const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
        const double h = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                x.push_back(lo + (p + 0.5) * h + 0.5 * h * rule.nodes[i]);
                w.push_back(0.5 * h * rule.weights[i]);
            }
    };
    std::vector<double> ts, tw, xs, xw;
    axis(box.lo[0], box.hi[0], pw[0], ts, tw);
    axis(box.lo[1], box.hi[1], pw[1], xs, xw);
    const int nt = static_cast<int>(ts.size()), nx = static_cast<int>(xs.size());
    const int nk = static_cast<int>(cols.size());

    // S(t, x) = w(g, g_x) = A B, D(t) = w(g_x, g_x), C = w(g, g).
    Eigen::MatrixXcd A(nt, nk), B(nk, nx);
    Eigen::VectorXcd D = Eigen::VectorXcd::Zero(nt);
    cplx C = 0.0;
    for (int c = 0; c < nk; ++c) {
        C += cols[c].weight;
        for (int i = 0; i < nt; ++i) {
            A(i, c) = cols[c].weight * std::polar(1.0, -cols[c].sh * cols[c].omega * ts[i]);
            D[i] += cols[c].weight * std::polar(1.0, -(cols[c].sf + cols[c].sh) * cols[c].omega * ts[i]);
        }
        for (int j = 0; j < nx; ++j)
            B(c, j) = std::polar(1.0, -cols[c].k * xs[j]);
    }
    const Eigen::MatrixXcd S = nk > 0 ? Eigen::MatrixXcd(A * B) : Eigen::MatrixXcd::Zero(nt, nx);
    cplx sum = 0.0;
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nx; ++j) {
            const cplx v = f.value(Vec2(ts[i], xs[j])) * std::exp(-0.5 * C - 0.5 * D[i] + S(i, j));
            out.peak = std::max(out.peak, std::abs(v));
            sum += v * (tw[i] * xw[j]);
        }
    out.residual = sum;
    out.nodes = nt * nx;
    out.relative = out.peak > 0.0 ? std::abs(sum) / out.peak : 0.0;
    return out;
}

std::vector<std::pair<Vec2, Vec2>> predicted_directions(const SpacetimeModel& model, const Vec2& q,
                                                        const Vec2& qp) {
    const Mat2 gi = model.inverse_metric(q);
    const Vec2 w = model.orientation(q);
    // Null covectors (1, b): gi11 b^2 + 2 gi01 b + gi00 = 0.
    std::vector<Vec2> nulls;
    const double disc = gi(0, 1) * gi(0, 1) - gi(0, 0) * gi(1, 1);
    if (disc < 0.0 || gi(1, 1) == 0.0)
        return {};
    for (double sgn : {1.0, -1.0}) {
        Vec2 xi(1.0, (-gi(0, 1) + sgn * std::sqrt(disc)) / gi(1, 1));
        if (xi.dot(w) > 0.0)
            xi = -xi;
        nulls.push_back(xi.normalized());
    }
    std::vector<std::pair<Vec2, Vec2>> out;
    const bool same = (q - qp).norm() < 1e-12;
    for (const Vec2& xi : nulls) {
        if (same) {
            out.push_back({xi, -xi});
            continue;
        }
        const BvpResult bvp = geodesic_bvp(model, q, qp, true);
        for (const GeodesicSegment& seg : bvp.connectors) {
            const Vec2 eta = parallel_transport(model, seg, xi);
            if (related_by_tilde(model, {q, xi}, {qp, eta}))
                out.push_back({xi, -eta});
        }
    }
    return out;
}

double predicted_angle_deg(const SpacetimeModel& model, const ScanTask& task) {
    if (task.points.size() != 2)
        throw std::invalid_argument("predicted_angle_deg: needs a two-slot task");
    Eigen::Vector4d v;
    v << task.points[0].xi, task.points[1].xi;
    v.normalize();
    double best = 180.0;
    for (const auto& [a, b] : predicted_directions(model, task.points[0].base, task.points[1].base)) {
        Eigen::Vector4d u;
        u << a, b;
        u.normalize();
        const double c = std::clamp(u.dot(v), -1.0, 1.0);
        best = std::min(best, std::acos(c) * 180.0 / kPi);
    }
    return best;
}

json HadamardResult::to_json() const {
    return {{"verdict", verdict},
            {"predicted_on_grid", predicted_on_grid},
            {"predicted_detected", predicted_detected},
            {"predicted_regular", predicted_regular},
            {"singular_outside", singular_outside},
            {"outside_entries", outside_entries}};
}

HadamardResult hadamard_verdict(const QuasifreeState& s, const SpacetimeModel& model,
                                const std::vector<ScanTask>& tasks, const LadderConfig& cfg,
                                const HadamardOptions& opts, Execution mode) {
    HadamardResult r;
    r.report = estimate_wavefront(s.two_point_kernel(), tasks, cfg, mode);
    const int n = static_cast<int>(r.report.entries.size());
    for (int i = 0; i < n; ++i) {
        const ReportEntry& e = r.report.entries[i];
        ScanTask t{e.points};
        const bool predicted = predicted_angle_deg(model, t) <= opts.ang_tol_deg;
        r.predicted_on_grid += predicted;
        if (predicted && e.verdict() == Verdict::singular)
            ++r.predicted_detected;
        if (predicted && e.verdict() == Verdict::regular)
            ++r.predicted_regular;
        if (!predicted && e.verdict() == Verdict::singular) {
            ++r.singular_outside;
            r.outside_entries.push_back(i);
        }
    }
    const int inconclusive = r.report.count(Verdict::inconclusive);
    if (n > 0 && inconclusive > opts.max_inconclusive * n)
        r.verdict = "insufficient-resolution";
    else if (r.singular_outside == 0 && r.predicted_regular == 0)
        r.verdict = "hadamard-consistent";
    else
        r.verdict = "not-hadamard";
    r.report.extra["state"] = s.descriptor().to_json();
    r.report.extra["state_certificate"] = s.certificate().to_json();
    json h = r.to_json();
    h["ang_tol_deg"] = opts.ang_tol_deg;
    r.report.extra["hadamard"] = h;
    return r;
}

std::vector<ScanTask> radzikowski_grid() {
    const std::vector<std::vector<Vec2>> points = {
        {Vec2(0, 0), Vec2(0, 0)},   {Vec2(0, 0), Vec2(1, 1)}, {Vec2(0, 0), Vec2(1, -1)},
        {Vec2(0, 0), Vec2(1, 0)},   {Vec2(0, 0), Vec2(0, 1)}, {Vec2(0.5, 0.2), Vec2(0.5, 0.2)},
    };
    const std::vector<std::vector<Vec2>> dirs = {
        {Vec2(-1, 1), Vec2(1, -1)},  {Vec2(-1, -1), Vec2(1, 1)}, {Vec2(1, 1), Vec2(-1, -1)},
        {Vec2(1, -1), Vec2(-1, 1)},  {Vec2(-1, 0), Vec2(1, 0)},  {Vec2(0, 1), Vec2(0, -1)},
        {Vec2(-1, 1), Vec2(1, 1)},   {Vec2(-1, 1), Vec2(0, -1)},
    };
    return product_grid(points, dirs);
}

}  // namespace microspec
