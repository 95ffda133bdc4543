#pragma once

#include <functional>
#include <string>
#include <vector>

#include "microspec/geometry.hpp"
#include "microspec/microlocal.hpp"

namespace microspec {

/// One mode-space channel of a two-point function on the 2D chart:
///   int dk / (4 pi omega) * weight(omega) * F[f](sf omega, -k) * F[h](sh omega, k),
/// omega = sqrt(k^2 + m^2), F the Euclidean Fourier transform.
struct ModeChannel {
    int sf = 1;
    int sh = -1;
    std::function<double(double)> weight;
    /// Upper bound of |weight| on [m, inf).
    double weight_max = 1.0;
};

/// Sum over channels and term pairs of the mode integrals above. Momentum
/// panels whose bound falls under `skip_tol` are skipped; a differential
/// operator carried by a term enters through its on-shell symbol.
cplx mode_pairing(const std::vector<ModeChannel>& channels, double mass, const TestFunction& f,
                  const TestFunction& h, double skip_tol = 1e-20);

/// sigma(f, h) from the commutator function; identical for every state of
/// the field with this mass.
cplx symplectic_form(double mass, const TestFunction& f, const TestFunction& h);

enum class StateKind { vacuum, kms, squeezed, conformal_vacuum };
const char* to_string(StateKind k);

struct StateDescriptor {
    StateKind kind = StateKind::vacuum;
    double mass = 1.0;
    double beta = 1.0;   // kms
    double theta = 0.0;  // squeezed
    std::string omega2;  // conformal vacuum: conformal factor expression in t, x

    /// "vacuum:m=1", "kms:m=1,beta=2", "squeezed:m=1,theta=0.5",
    /// "conformal-vacuum:m=1,omega2=exp(2*t)".
    static StateDescriptor parse(const std::string& text);
    std::string to_string() const;
    json to_json() const;
};

struct StateCertificate {
    int samples = 0;
    unsigned seed = 0;
    double tolerance = 1e-8;
    double hermiticity = 0.0;  // max |w(f,h) - conj w(h,f)|, real f, h
    double positivity = 0.0;   // min Re w(conj f, f)
    double positivity_imag = 0.0;
    double commutator = 0.0;   // max |w(f,h) - w(h,f) - i sigma(f,h)|
    bool passed = false;

    json to_json() const;
};

struct StateOptions {
    double quad_tol = 1e-8;
    int battery = 20;
    unsigned seed = 7;
};

/// Gaussian quasifree state of the free field of mass m > 0.
class QuasifreeState {
public:
    const StateDescriptor& descriptor() const { return desc_; }
    double mass() const { return desc_.mass; }
    double quad_tol() const { return opts_.quad_tol; }
    const std::vector<ModeChannel>& channels() const { return channels_; }
    const StateCertificate& certificate() const { return cert_; }

    cplx two_point(const TestFunction& f, const TestFunction& h) const;
    /// -i (w(f,h) - w(h,f)) from this state's two-point function.
    cplx commutator(const TestFunction& f, const TestFunction& h) const;
    /// Arity-2 kernel on the chart; pairings are mode integrals.
    SmearableKernel two_point_kernel() const;

private:
    friend QuasifreeState make_state(const StateDescriptor&, const StateOptions&);
    StateDescriptor desc_;
    StateOptions opts_;
    std::vector<ModeChannel> channels_;
    StateCertificate cert_;
};

/// Builds the state and runs the randomized invariant battery; throws
/// ConstructionError if the battery fails, std::invalid_argument on bad parameters.
QuasifreeState make_state(const StateDescriptor& desc, const StateOptions& opts = {});

/// Random real or complex test functions used by the batteries.
std::vector<TestFunction> random_test_functions(int n, unsigned seed, bool real_only);

/// omega(W(f_1) ... W(f_N)) through the Weyl relations and the quasifree formula.
cplx weyl_correlation(const QuasifreeState& s, const std::vector<TestFunction>& fs);

/// w((box + m^2) f, h).
cplx kg_residual(const QuasifreeState& s, const TestFunction& f, const TestFunction& h);

/// Gaussian test function whose transform ~f(p) = int f(x) exp(i (p0 t - p1 x)) d^2x
/// is centred at `p` with width 1/`width` (the physics convention for
/// translations, where positive energies sit in the forward cone).
TestFunction spectral_probe(const Vec2& p, double width);

struct SpectralResidual {
    cplx residual = 0.0;
    double peak = 0.0;      // max |f(x) omega(W(g)* W(g_x))| on the grid
    double relative = 0.0;  // |residual| / peak
    int nodes = 0;
};

/// int f(x) omega(W(g)* W(g_x)) d^2x with g_x(y) = g(y - x), by tensor
/// Gauss-Legendre quadrature over the support of f. Throws DomainError if
/// the support of f leaves `limit`.
SpectralResidual vacuum_spectral_residual(const QuasifreeState& s, const TestFunction& f,
                                          const TestFunction& g, double limit = 40.0);

/// Joint direction pairs (xi, xi') at one point pair that the Hadamard
/// condition predicts: xi past null, (q, xi) ~ (q', -xi'), xi' = -transported xi.
std::vector<std::pair<Vec2, Vec2>> predicted_directions(const SpacetimeModel& model, const Vec2& q,
                                                        const Vec2& qp);

/// Angle in degrees between the joint direction (xi, xi') and the nearest
/// predicted pair; 180 when nothing is predicted at the point pair.
double predicted_angle_deg(const SpacetimeModel& model, const ScanTask& task);

struct HadamardOptions {
    double ang_tol_deg = 3.0;
    double max_inconclusive = 0.5;
};

struct HadamardResult {
    std::string verdict;  // hadamard-consistent | not-hadamard | insufficient-resolution
    SpectrumReport report;
    int predicted_on_grid = 0;
    int predicted_detected = 0;
    int predicted_regular = 0;
    int singular_outside = 0;
    std::vector<int> outside_entries;

    json to_json() const;
};

HadamardResult hadamard_verdict(const QuasifreeState& s, const SpacetimeModel& model,
                                const std::vector<ScanTask>& tasks, const LadderConfig& cfg,
                                const HadamardOptions& opts = {},
                                Execution mode = Execution::parallel);

/// Six point pairs by eight direction pairs; six entries lie in the predicted set.
std::vector<ScanTask> radzikowski_grid();

}  // namespace microspec
