#pragma once

#include "qot/phase_space.hpp"

namespace qot {

struct GroundStateField {
    const PhaseGrid* grid = nullptr;
    std::vector<Vec> psi;        // unit ground vectors, phase-fixed
    RVec lambda0;                // smallest eigenvalue per point
    RVec gap;                    // lambda_1 - lambda_0
    std::vector<char> degenerate;
    RVec a;                      // -lambda0: the transform value per point
};

struct GroundPoint {
    Vec psi;
    double lambda0 = 0;
    double gap = 0;
    bool degenerate = false;
};

namespace detail {

// z.Z = sum_k q_k X_k + p_k P_k for a phase point packed (q_1,p_1,...).
inline Mat zdotZ(const CanonicalOps& ops, const std::vector<double>& z) {
    const auto N = ops.X[0].rows();
    Mat m = Mat::Zero(N, N);
    for (std::size_t k = 0; k < ops.X.size(); ++k)
        m += z[2 * k] * ops.X[k] + z[2 * k + 1] * ops.P[k];
    return m;
}

// First nonzero coordinate made real positive; fields become reproducible.
inline void fix_phase(Vec& v, double tol = 1e-12) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double r = std::abs(v(i));
        if (r > tol) {
            v *= std::conj(v(i)) / r;
            break;
        }
    }
}

}  // namespace detail

// Smallest eigenpair of B - z.Z with deterministic phase; flags a (near)
// degenerate ground space, where the transport construction loses meaning.
inline GroundPoint ground_state_map(const Mat& B, const std::vector<double>& z,
                                    const CanonicalOps& ops, double degeneracy_tol = 1e-8) {
    EighResult e = eigh(hermitize(B - detail::zdotZ(ops, z)));
    GroundPoint g;
    g.psi = e.evecs.col(0);
    detail::fix_phase(g.psi);
    g.lambda0 = e.evals(0);
    g.gap = e.evals.size() > 1 ? e.evals(1) - e.evals(0) : 0.0;
    g.degenerate = g.gap < degeneracy_tol;
    return g;
}

// a(z_i) = -lambda_min(B - z_i.Z) on the grid, with the ground-state field.
// The sup over unit vectors of z.<phi|Z|phi> - <phi|B|phi> equals -lambda_min
// by the variational principle, so eigh computes the transform exactly.
inline GroundStateField legendre_sq(const Mat& B, const PhaseGrid& grid, const CanonicalOps& ops,
                                    double degeneracy_tol = 1e-8, unsigned max_workers = 0) {
    const std::size_t npts = grid.size();
    GroundStateField f;
    f.grid = &grid;
    f.psi.assign(npts, Vec());
    f.lambda0 = RVec(static_cast<Eigen::Index>(npts));
    f.gap = RVec(static_cast<Eigen::Index>(npts));
    f.degenerate.assign(npts, 0);
    f.a = RVec(static_cast<Eigen::Index>(npts));
    parallel_for(npts, [&](std::size_t i) {
        GroundPoint g = ground_state_map(B, grid.points[i], ops, degeneracy_tol);
        f.psi[i] = std::move(g.psi);
        f.lambda0(static_cast<Eigen::Index>(i)) = g.lambda0;
        f.gap(static_cast<Eigen::Index>(i)) = g.gap;
        f.degenerate[i] = g.degenerate ? 1 : 0;
        f.a(static_cast<Eigen::Index>(i)) = -g.lambda0;
    }, max_workers);
    return f;
}

// sum_i mu_i w_i |psi_i><psi_i|: classical-to-quantum transport of mu along the
// ground-state field. Trace equals the total mass by linearity.
inline Mat op_rs(const GridDensity& mu, const GroundStateField& field) {
    if (field.grid == nullptr || field.grid->size() != mu.grid.size() ||
        field.grid->d != mu.grid.d)
        throw std::invalid_argument("op_rs: density and field grids differ");
    const auto N = field.psi.empty() ? 1 : field.psi[0].size();
    Mat s = Mat::Zero(N, N);
    for (std::size_t i = 0; i < field.psi.size(); ++i) {
        double m = mu.values[i] * mu.grid.weights[i];
        if (m > 0) s += m * (field.psi[i] * field.psi[i].adjoint());
    }
    return hermitize(s);
}

struct ReconstructionReport {
    double error_trace_norm = 0;
    std::size_t degenerate_points = 0;
};

// Rebuild the state from the dual field of the pair (r, S) and report the
// trace-norm mismatch against S.
inline ReconstructionReport reconstruct_and_compare(const GridDensity& r, const Mat& B,
                                                    const CanonicalOps& ops, const Mat& S,
                                                    double degeneracy_tol = 1e-8,
                                                    unsigned max_workers = 0) {
    GroundStateField field = legendre_sq(B, r.grid, ops, degeneracy_tol, max_workers);
    ReconstructionReport rep;
    for (char dflag : field.degenerate) rep.degenerate_points += dflag ? 1 : 0;
    rep.error_trace_norm = trace_norm(op_rs(r, field) - S);
    return rep;
}

struct GradientCheckReport {
    RVec residuals;  // per interior nondegenerate point
    double max_residual = 0;
    std::size_t checked = 0;
    std::size_t skipped_degenerate = 0;
};

// Central-difference check of grad a(z) = <psi_z|Z|psi_z>, re-evaluating the
// transform at off-grid points. Degenerate points are skipped.
inline GradientCheckReport gradient_relation_check(const Mat& B, const PhaseGrid& grid,
                                                   const CanonicalOps& ops, double h = 1e-3,
                                                   double degeneracy_tol = 1e-8,
                                                   unsigned max_workers = 0) {
    const std::size_t npts = grid.size();
    const int dd = grid.d;
    GradientCheckReport rep;
    RVec res = RVec::Constant(static_cast<Eigen::Index>(npts), -1.0);
    std::vector<char> skipped(npts, 0);
    parallel_for(npts, [&](std::size_t i) {
        GroundPoint g = ground_state_map(B, grid.points[i], ops, degeneracy_tol);
        if (g.degenerate) { skipped[i] = 1; return; }
        double worst = 0;
        for (int c = 0; c < 2 * dd; ++c) {
            std::vector<double> zp = grid.points[i], zm = grid.points[i];
            zp[c] += h;
            zm[c] -= h;
            double ap = -ground_state_map(B, zp, ops, degeneracy_tol).lambda0;
            double am = -ground_state_map(B, zm, ops, degeneracy_tol).lambda0;
            double fd = (ap - am) / (2 * h);
            int k = c / 2;
            const Mat& zop = (c % 2 == 0) ? ops.X[k] : ops.P[k];
            double expect = std::real(g.psi.dot(zop * g.psi));
            worst = std::max(worst, std::abs(expect - fd));
        }
        res(static_cast<Eigen::Index>(i)) = worst;
    }, max_workers);
    std::vector<double> kept;
    for (std::size_t i = 0; i < npts; ++i) {
        if (skipped[i]) { ++rep.skipped_degenerate; continue; }
        kept.push_back(res(static_cast<Eigen::Index>(i)));
        rep.max_residual = std::max(rep.max_residual, res(static_cast<Eigen::Index>(i)));
    }
    rep.checked = kept.size();
    rep.residuals = Eigen::Map<RVec>(kept.data(), static_cast<Eigen::Index>(kept.size()));
    return rep;
}

// CSV export of a ground-state field: q,p,lambda0,gap,a (d = 1 grids).
inline void export_field_csv(const GroundStateField& f, const std::string& path) {
    if (f.grid->d != 1)
        throw std::invalid_argument("export_field_csv: only d = 1 grids export to CSV");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_field_csv: cannot open " + path);
    os << "q,p,lambda0,gap,a\n";
    os.precision(17);
    for (std::size_t i = 0; i < f.grid->size(); ++i)
        os << f.grid->points[i][0] << ',' << f.grid->points[i][1] << ','
           << f.lambda0(static_cast<Eigen::Index>(i)) << ',' << f.gap(static_cast<Eigen::Index>(i))
           << ',' << f.a(static_cast<Eigen::Index>(i)) << '\n';
}

}  // namespace qot
