#pragma once

#include "qot/operator_core.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace qot {

struct PhaseGrid {
    int d = 1;
    // 2d axes in order q_1..q_d, p_1..p_d interleaved as (q_k, p_k) pairs.
    std::vector<std::array<double, 2>> bounds;  // size 2d
    std::vector<int> counts;                    // size 2d
    std::vector<std::vector<double>> points;    // each size 2d, row-major
    std::vector<double> weights;                // cell volumes

    std::size_t size() const { return points.size(); }
};

inline PhaseGrid make_grid(int d, const std::vector<std::array<double, 2>>& bounds,
                           const std::vector<int>& counts) {
    if (d < 1) throw std::invalid_argument("make_grid: d must be >= 1");
    if (bounds.size() != std::size_t(2 * d) || counts.size() != std::size_t(2 * d))
        throw std::invalid_argument("make_grid: need 2d bounds and counts");
    for (int k = 0; k < 2 * d; ++k) {
        if (counts[k] < 2) throw std::invalid_argument("make_grid: counts must be >= 2");
        if (!(bounds[k][1] > bounds[k][0]))
            throw std::invalid_argument("make_grid: degenerate bounds");
    }
    PhaseGrid g;
    g.d = d;
    g.bounds = bounds;
    g.counts = counts;
    double cell = 1.0;
    std::vector<std::vector<double>> axes(2 * d);
    for (int k = 0; k < 2 * d; ++k) {
        double step = (bounds[k][1] - bounds[k][0]) / counts[k];
        cell *= step;
        for (int i = 0; i < counts[k]; ++i)
            axes[k].push_back(bounds[k][0] + (i + 0.5) * step);
    }
    std::vector<int> idx(2 * d, 0);
    std::size_t total = 1;
    for (int k = 0; k < 2 * d; ++k) total *= counts[k];
    g.points.reserve(total);
    g.weights.assign(total, cell);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        std::vector<double> pt(2 * d);
        for (int k = 2 * d - 1; k >= 0; --k) {
            pt[k] = axes[k][rem % counts[k]];
            rem /= counts[k];
        }
        g.points.push_back(std::move(pt));
    }
    return g;
}

struct GridDensity {
    PhaseGrid grid;
    RVec values;             // nonnegative, renormalized
    double norm_defect = 0;  // |sum f_i w_i - 1| before renormalization
    bool clipped = false;    // grid fails to cover 4 sigma (gaussian), or raw mass clearly short

    double mass() const {
        double m = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) m += values(i) * grid.weights[i];
        return m;
    }
};

inline GridDensity make_density(const PhaseGrid& grid, const RVec& raw, bool renormalize = true) {
    if (raw.size() != Eigen::Index(grid.size()))
        throw std::invalid_argument("make_density: value count mismatch");
    if (raw.minCoeff() < 0.0) throw std::invalid_argument("make_density: negative value");
    GridDensity f;
    f.grid = grid;
    double m = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) m += raw(i) * grid.weights[i];
    if (!(m > 0)) throw std::invalid_argument("make_density: zero total mass");
    f.norm_defect = std::abs(m - 1.0);
    f.values = renormalize ? RVec(raw / m) : raw;
    return f;
}

inline GridDensity gaussian_density(const PhaseGrid& grid, const std::vector<double>& mean,
                                    const std::vector<double>& sigma2) {
    if (mean.size() != std::size_t(2 * grid.d) || sigma2.size() != std::size_t(2 * grid.d))
        throw std::invalid_argument("gaussian_density: need 2d mean/sigma2 entries");
    RVec raw(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double e = 0;
        for (int k = 0; k < 2 * grid.d; ++k) {
            double dk = grid.points[i][k] - mean[k];
            e += dk * dk / (2.0 * sigma2[k]);
        }
        raw(i) = std::exp(-e);
    }
    GridDensity f = make_density(grid, raw);
    for (int k = 0; k < 2 * grid.d; ++k) {
        double s = std::sqrt(sigma2[k]);
        if (mean[k] - 4 * s < grid.bounds[k][0] || mean[k] + 4 * s > grid.bounds[k][1])
            f.clipped = true;
    }
    return f;
}

struct CoherentState {
    Vec v;           // renormalized
    double leakage;  // 1 - |projection onto the truncated space|^2
};

// <n|z> = e^{-|alpha|^2/2} alpha^n / sqrt(n!), alpha_k = (q_k + i p_k)/sqrt(2 hbar),
// tensor product across axes.
inline CoherentState coherent_state(const BasisSpec& basis, const std::vector<double>& z,
                                    double leakage_tol = 0.01) {
    if (z.size() != std::size_t(2 * basis.d))
        throw std::invalid_argument("coherent_state: z must have 2d components");
    Vec v = Vec::Ones(1);
    double norm2 = 1.0;
    for (int k = 0; k < basis.d; ++k) {
        cplx alpha = cplx(z[2 * k], z[2 * k + 1]) / std::sqrt(2.0 * basis.hbar);
        Vec axis(basis.n_max);
        cplx amp = std::exp(-0.5 * std::norm(alpha));
        for (int n = 0; n < basis.n_max; ++n) {
            axis(n) = amp;
            amp *= alpha / std::sqrt(double(n + 1));
        }
        norm2 *= axis.squaredNorm();
        Vec next(v.size() * basis.n_max);
        for (Eigen::Index i = 0; i < v.size(); ++i)
            for (int n = 0; n < basis.n_max; ++n) next(i * basis.n_max + n) = v(i) * axis(n);
        v = std::move(next);
    }
    CoherentState cs;
    cs.leakage = 1.0 - norm2;
    if (cs.leakage > leakage_tol)
        throw std::domain_error("coherent_state: truncation leakage above tolerance; "
                                "point too far out for n_max");
    // Amplitude underflow far outside the basis reach: keep the zero vector
    // (leakage 1) instead of dividing by zero.
    cs.v = (norm2 > 0.0) ? Vec(v / std::sqrt(norm2)) : Vec(Vec::Zero(v.size()));
    return cs;
}

struct DensityMat {
    Mat rho;
    double leakage = 0.0;       // mass-weighted aggregate truncation leakage
    double trace_defect = 0.0;  // |trace - 1| before renormalization
};

// OP^T of the measure f_i w_i: sum_i f_i w_i |z_i><z_i| built from truncated
// (unrenormalized) coherent projections, then renormalized. Leakage is gated in
// aggregate: far tail cells carry negligible mass but would fail a per-point gate.
inline DensityMat toeplitz_quantize(const BasisSpec& basis, const GridDensity& mu,
                                    double aggregate_leakage_tol = 0.02) {
    const auto N = basis.dim();
    Mat rho = Mat::Zero(N, N);
    double leak = 0.0;
    // Deterministic: accumulate per-point terms serially (ordered reduction).
    for (std::size_t i = 0; i < mu.grid.size(); ++i) {
        double m = mu.values(i) * mu.grid.weights[i];
        if (m < 1e-15) continue;
        CoherentState cs = coherent_state(basis, mu.grid.points[i], 1.0 + 1e-9);
        Vec raw = cs.v * std::sqrt(std::max(0.0, 1.0 - cs.leakage));  // truncated projection
        rho.noalias() += m * (raw * raw.adjoint());
        leak += m * cs.leakage;
    }
    DensityMat out;
    out.leakage = leak;
    if (leak > aggregate_leakage_tol)
        throw std::domain_error("toeplitz_quantize: aggregate truncation leakage above tolerance");
    double tr = rho.trace().real();
    out.trace_defect = std::abs(tr - 1.0);
    out.rho = hermitize(rho / tr);
    return out;
}

// Husimi transform W(z) = (2 pi hbar)^{-d} <z|R|z>, truncated projections.
inline GridDensity husimi(const BasisSpec& basis, const Mat& R, const PhaseGrid& grid,
                          bool renormalize = true) {
    const double pref = std::pow(2.0 * 3.14159265358979323846 * basis.hbar, -double(basis.d));
    RVec raw(grid.size());
    std::vector<double> vals(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        CoherentState cs = coherent_state(basis, grid.points[i], 1.0 + 1e-9);
        Vec proj = cs.v * std::sqrt(std::max(0.0, 1.0 - cs.leakage));
        double v = proj.dot(R * proj).real();
        vals[i] = pref * std::max(v, 0.0);
    });
    for (std::size_t i = 0; i < grid.size(); ++i) raw(i) = vals[i];
    GridDensity out = make_density(grid, raw, renormalize);
    if (out.norm_defect > 0.05) out.clipped = true;
    return out;
}

inline double second_moment(const GridDensity& f) {
    double m = 0;
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
        double z2 = 0;
        for (double c : f.grid.points[i]) z2 += c * c;
        m += f.values(i) * f.grid.weights[i] * z2;
    }
    return m;
}

inline double second_moment_q(const Mat& R, const CanonicalOps& ops) {
    return 2.0 * std::real((R * ops.Hosc).trace());
}

inline void export_density_csv(const GridDensity& f, const std::string& path) {
    if (f.grid.d != 1) throw std::invalid_argument("export_density_csv: d=1 only");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_density_csv: cannot open " + path);
    os << "q,p,value\n";
    os.precision(17);
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        os << f.grid.points[i][0] << ',' << f.grid.points[i][1] << ',' << f.values(i) << '\n';
}

}  // namespace qot
