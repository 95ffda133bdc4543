#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "microspec/geometry.hpp"
#include "microspec/parallel.hpp"
#include "microspec/quadrature.hpp"
#include "microspec/test_function.hpp"

namespace microspec {

using VecX = Eigen::VectorXd;
using json = nlohmann::json;

/// A one-dimensional test function known through its Fourier transform.
struct SpectralTest {
    std::function<cplx(double)> fourier;
    /// Upper bound of |fourier| on [lo, hi].
    std::function<double(double, double)> bound;
    /// Where the transform is numerically nonzero.
    IntervalSet domain;
    /// Panel width that resolves the oscillation of `fourier`.
    double fine_width = 0.05;
};

/// Distribution (arity 1) or bikernel (arity 2) seen only through pairings.
struct SmearableKernel {
    std::string name;
    std::string reference;
    int arity = 1;
    int dim = 1;
    Box domain{Vec2(-10.0, -10.0), Vec2(10.0, 10.0)};
    std::function<cplx(const TestFunction&)> pair1;
    std::function<cplx(const TestFunction&, const TestFunction&)> pair2;
    /// Optional pairing with a spectrally given test function (arity 1, dim 1).
    std::function<cplx(const SpectralTest&)> spectral;
    /// Smooth kernels whose spectral pairing is cheaper than position-space quadrature.
    bool prefers_spectral = false;

    cplx pair(const std::vector<TestFunction>& fs) const;
};

/// Largest relative defect of linearity in each slot over random combinations.
double linearity_defect(const SmearableKernel& v, int trials = 100, unsigned seed = 1);

struct Window {
    Vec2 center = Vec2::Zero();
    double radius = 0.2;
};

/// x -> chi(x) exp(-i k.x) for the window's bump profile.
TestFunction window_function(const Window& w, int dim, const Vec2& k);

struct LadderConfig {
    double R0 = 4.0;
    int J = 8;
    double order_min = 8.0;
    double order_singular_max = 2.0;
    double fit_quality_min = 0.98;
    double abs_floor = 1e-14;
    int tail = 2;
    double cone_half_angle_deg = 5.0;
    int net_size = 16;
    int net_size_arity2 = 5;
    double window_radius = 0.2;
    double window_min = 0.05;
};

json to_json(const LadderConfig& c);
LadderConfig ladder_config_from_json(const json& j);

enum class Verdict { regular, singular, inconclusive };
const char* to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);
inline bool conclusive(Verdict v) { return v != Verdict::inconclusive; }

struct DecayLadder {
    std::vector<double> scales;
    std::vector<double> amplitudes;
    double slope = 0.0;  // decay exponent: amplitude ~ scale^(-slope)
    double r2 = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string annotation;
};

DecayLadder classify_ladder(std::vector<double> scales, std::vector<double> amplitudes,
                            const LadderConfig& cfg);

/// Frequency net around `direction` (normalized): radial factors in [1, 2)
/// combined with perturbations inside the cone half-angle. Element 0 is the
/// unperturbed unit direction.
std::vector<VecX> cone_net(const VecX& direction, double half_angle_rad, int n);

/// Pairing of v with chi_1 e^{-i k_1.x} (x) ... ; k stacks the slot frequencies.
cplx windowed_transform(const SmearableKernel& v, const std::vector<Window>& windows, const VecX& k);

DecayLadder direction_ladder(const SmearableKernel& v, const std::vector<Window>& windows,
                             const VecX& direction, const LadderConfig& cfg);

/// One scan entry: one covector point per kernel slot.
struct ScanTask {
    std::vector<CovectorPoint> points;
};

std::vector<ScanTask> product_grid(const std::vector<std::vector<Vec2>>& point_tuples,
                                   const std::vector<std::vector<Vec2>>& direction_tuples);

struct ReportEntry {
    std::vector<CovectorPoint> points;
    double radius = 0.0;
    DecayLadder ladder;
    std::string test;
    Verdict verdict() const { return ladder.verdict; }
};

struct SpectrumReport {
    std::string kernel;
    int arity = 1;
    int dim = 1;
    std::vector<ReportEntry> entries;
    json config = json::object();
    json extra = json::object();

    int count(Verdict v) const;
};

json report_to_json(const SpectrumReport& r);
SpectrumReport report_from_json(const json& j);
/// Header `scale,amplitude`, one line per rung.
std::string ladder_csv(const DecayLadder& d);

/// Ladder of one task with windows halved while the verdict is inconclusive.
ReportEntry scan_entry(const SmearableKernel& v, const ScanTask& task, const LadderConfig& cfg);

/// Parallel map over tasks (duplicates removed, first occurrence kept); entry
/// order equals task order for both execution modes.
SpectrumReport estimate_wavefront(const SmearableKernel& v, const std::vector<ScanTask>& tasks,
                                  const LadderConfig& cfg, Execution mode = Execution::parallel);

/// Base points (first slot) of singular entries, deduplicated in report order.
std::vector<Vec2> singular_support(const SpectrumReport& r);

/// (phi^* v)(f) = v(f o a^{-1}) / |det a| in every slot.
SmearableKernel pullback(const SmearableKernel& v, const Mat2& a);

struct CovarianceResult {
    int score = 0;
    int compared = 0;
    std::vector<std::string> mismatches;
};

/// Compares the scan of phi^* v at (x, eta) with the scan of v at
/// (a x, a^{-T} eta); score counts conclusive disagreements.
CovarianceResult transform_covariance_check(const SmearableKernel& v, const Mat2& a,
                                            const std::vector<ScanTask>& tasks,
                                            const LadderConfig& cfg,
                                            Execution mode = Execution::parallel);

/// (A v)(f) = v(A^t f) acting on one slot.
SmearableKernel apply_operator(const SmearableKernel& v, const DiffPoly& a, int slot = 0);

struct ShrinkResult {
    bool contained = true;
    int violations = 0;
    SpectrumReport base;
    SpectrumReport applied;
};

ShrinkResult operator_shrink_check(const SmearableKernel& v, const DiffPoly& a,
                                   const std::vector<ScanTask>& tasks, const LadderConfig& cfg,
                                   int slot = 0, Execution mode = Execution::parallel);

}  // namespace microspec
