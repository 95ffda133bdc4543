#include "microspec/bump.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "microspec/quadrature.hpp"

namespace microspec {

double bump(double u) {
    const double s = 1.0 - u * u;
    if (s <= 0.0)
        return 0.0;
    return std::exp(-u * u / s);
}

double bump_d1(double u) {
    const double s = 1.0 - u * u;
    if (s <= 0.0)
        return 0.0;
    return bump(u) * (-2.0 * u / (s * s));
}

double bump_d2(double u) {
    const double s = 1.0 - u * u;
    if (s <= 0.0)
        return 0.0;
    const double p1 = -2.0 * u / (s * s);
    const double p2 = -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
    return bump(u) * (p1 * p1 + p2);
}

namespace {

// The profile is smooth with all derivatives vanishing at the endpoints, so
// the trapezoid sum is exact up to aliasing at 2*pi*N, far beyond the cutoff.
constexpr int kTrapHalf = 1024;

struct TrapNodes {
    std::vector<double> u, w;
    TrapNodes() {
        const double h = 1.0 / kTrapHalf;
        for (int n = 1; n < kTrapHalf; ++n) {
            u.push_back(n * h);
            w.push_back(2.0 * h * bump(n * h));
        }
    }
};

const TrapNodes& trap_nodes() {
    static const TrapNodes nodes;
    return nodes;
}

// The rounding of kappa*u is carried as a first-order correction so that the
// phase error at large kappa stays below the tail of the transform.
double trapezoid(double kappa) {
    const TrapNodes& t = trap_nodes();
    double sum = 1.0 / kTrapHalf;  // u = 0 node
    for (std::size_t i = 0; i < t.u.size(); ++i) {
        const double p = kappa * t.u[i];
        const double e = std::fma(kappa, t.u[i], -p);
        sum += t.w[i] * (std::cos(p) - std::sin(p) * e);
    }
    return sum;
}

constexpr double kPieceWidth = 4.0;
constexpr int kDegree = 24;
constexpr int kPieces = static_cast<int>(kBumpFtCutoff / kPieceWidth);
constexpr double kEnvStep = 0.25;

struct Table {
    std::vector<std::array<double, kDegree + 1>> coeffs;
    std::vector<double> envelope;

    Table() : coeffs(kPieces) {
        std::array<double, kDegree + 1> vals{};
        for (int p = 0; p < kPieces; ++p) {
            const double a = p * kPieceWidth;
            for (int j = 0; j <= kDegree; ++j) {
                const double x = std::cos(kPi * (j + 0.5) / (kDegree + 1));
                vals[j] = trapezoid(a + 0.5 * kPieceWidth * (x + 1.0));
            }
            for (int n = 0; n <= kDegree; ++n) {
                double c = 0.0;
                for (int j = 0; j <= kDegree; ++j)
                    c += vals[j] * std::cos(kPi * n * (j + 0.5) / (kDegree + 1));
                coeffs[p][n] = c * (n == 0 ? 1.0 : 2.0) / (kDegree + 1);
            }
        }
        const int samples = static_cast<int>(kBumpFtCutoff / kEnvStep) + 2;
        envelope.assign(samples, 0.0);
        for (int i = samples - 1; i >= 0; --i) {
            const double k = i * kEnvStep;
            const double v = k < kBumpFtCutoff ? std::abs(eval(k)) : 0.0;
            envelope[i] = std::max(v, i + 1 < samples ? envelope[i + 1] : 0.0);
        }
        // Between samples the oscillation can peak slightly above both
        // neighbours; widening by one sample and a factor keeps the bound safe.
        const std::vector<double> raw = envelope;
        for (int i = 1; i < samples; ++i)
            envelope[i] = 1.5 * raw[i - 1];
        envelope[0] = 1.5 * raw[0];
    }

    double eval(double kappa) const {
        const int p = std::min(kPieces - 1, static_cast<int>(kappa / kPieceWidth));
        const double x = 2.0 * (kappa - p * kPieceWidth) / kPieceWidth - 1.0;
        const auto& c = coeffs[p];
        double b0 = 0.0, b1 = 0.0;
        for (int n = kDegree; n >= 1; --n) {
            const double t = 2.0 * x * b0 - b1 + c[n];
            b1 = b0;
            b0 = t;
        }
        return x * b0 - b1 + c[0];
    }
};

const Table& table() {
    static const Table t;
    return t;
}

}  // namespace

double bump_ft(double kappa) {
    kappa = std::abs(kappa);
    if (kappa >= kBumpFtCutoff)
        return 0.0;
    return table().eval(kappa);
}

double bump_ft_envelope(double kappa) {
    kappa = std::abs(kappa);
    if (kappa >= kBumpFtCutoff)
        return 0.0;
    const Table& t = table();
    const auto i = static_cast<std::size_t>(kappa / kEnvStep);
    return t.envelope[std::min(i, t.envelope.size() - 1)];
}

double bump_ft_direct(double kappa) { return trapezoid(std::abs(kappa)); }

}  // namespace microspec
