#pragma once

#include "qot/phase_space.hpp"

namespace qot {

// c_ij = |z_i - z'_j|^2 between two grids of the same d.
inline RMat classical_cost(const PhaseGrid& gf, const PhaseGrid& gg) {
    if (gf.d != gg.d) throw std::invalid_argument("classical_cost: dimension mismatch");
    RMat c(gf.size(), gg.size());
    for (std::size_t i = 0; i < gf.size(); ++i)
        for (std::size_t j = 0; j < gg.size(); ++j) {
            double s = 0;
            for (int k = 0; k < 2 * gf.d; ++k) {
                double dk = gf.points[i][k] - gg.points[j][k];
                s += dk * dk;
            }
            c(i, j) = s;
        }
    return c;
}

// Literal truncated form sum_k (q_k I - X_k)^2 + (p_k I - P_k)^2.
// Spectrum degrades near the truncation edge for large |z|; used by the
// operator-inequality checks, whose algebra is exact for this form.
inline Mat semiquantum_cost_literal(const BasisSpec& basis, const CanonicalOps& ops,
                                    const std::vector<double>& z) {
    if (z.size() != std::size_t(2 * basis.d))
        throw std::invalid_argument("semiquantum_cost_literal: z must have 2d components");
    const auto N = basis.dim();
    Mat c = Mat::Zero(N, N);
    Mat I = Mat::Identity(N, N);
    for (int k = 0; k < basis.d; ++k) {
        Mat dx = z[2 * k] * I - ops.X[k];
        Mat dp = z[2 * k + 1] * I - ops.P[k];
        c += dx * dx + dp * dp;
    }
    return hermitize(c);
}

// Displaced-oscillator form D(z)(X^2+P^2)D(z)† per axis. Unitary conjugation
// keeps the spectrum exactly z-independent, so lambda_min = d*hbar holds to
// machine precision on the truncated space.
inline Mat semiquantum_cost(const BasisSpec& basis, const CanonicalOps& ops,
                            const std::vector<double>& z) {
    if (z.size() != std::size_t(2 * basis.d))
        throw std::invalid_argument("semiquantum_cost: z must have 2d components");
    (void)ops;
    Mat x1 = position_op_1axis(basis.n_max, basis.hbar);
    Mat p1 = momentum_op_1axis(basis.n_max, basis.hbar);
    Mat h2 = x1 * x1 + p1 * p1;
    const auto N = basis.dim();
    Mat c = Mat::Zero(N, N);
    for (int k = 0; k < basis.d; ++k) {
        Mat dk = displacement(basis.n_max, basis.hbar, z[2 * k], z[2 * k + 1]);
        Mat axis = dk * h2 * dk.adjoint();
        c += embed_axis(hermitize(axis), basis.d, k, basis.n_max);
    }
    return hermitize(c);
}

// Literal tensor form sum_k (X_k(x)I - I(x)X_k)^2 + (P_k(x)I - I(x)P_k)^2.
inline Mat quantum_cost_literal(const BasisSpec& basis, const CanonicalOps& ops) {
    const auto N = basis.dim();
    Mat I = Mat::Identity(N, N);
    Mat c = Mat::Zero(N * N, N * N);
    for (int k = 0; k < basis.d; ++k) {
        Mat dx = kron(ops.X[k], I) - kron(I, ops.X[k]);
        Mat dp = kron(ops.P[k], I) - kron(I, ops.P[k]);
        c += dx * dx + dp * dp;
    }
    return hermitize(c);
}

// Beamsplitter-conjugated form W (2 sum_k (X_k^2+P_k^2) (x) I) W†: the relative
// mode is an oscillator with effective hbar doubled, and conjugation preserves
// the truncated spectrum exactly (lambda_min = 2 d hbar to machine precision).
inline Mat quantum_cost(const BasisSpec& basis, const CanonicalOps& ops, Eigen::Index mem_cap = 32) {
    const auto N = basis.dim();
    if (N > mem_cap) throw std::invalid_argument("quantum_cost: N exceeds memory cap");
    Mat h2 = Mat::Zero(N, N);
    for (int k = 0; k < basis.d; ++k)
        h2 += ops.X[k] * ops.X[k] + ops.P[k] * ops.P[k];
    Mat gen = Mat::Zero(N * N, N * N);
    Mat a1 = ladder(basis.n_max);
    for (int k = 0; k < basis.d; ++k) {
        Mat ak = embed_axis(a1, basis.d, k, basis.n_max);
        gen += kron(ak.adjoint(), ak) - kron(ak, ak.adjoint());
    }
    gen *= 3.14159265358979323846 / 4.0;
    Mat kh = cplx(0.0, -1.0) * gen;
    EighResult e = eigh(kh);
    Vec phase(e.evals.size());
    for (Eigen::Index i = 0; i < e.evals.size(); ++i)
        phase(i) = std::exp(cplx(0.0, e.evals(i)));
    Mat w = e.evecs * phase.asDiagonal() * e.evecs.adjoint();
    Mat base = kron(Mat(2.0 * h2), Mat(Mat::Identity(N, N)));
    return hermitize(w * base * w.adjoint());
}

// One displaced-oscillator cost block per grid point, in grid order.
inline std::vector<Mat> cost_field(const BasisSpec& basis, const CanonicalOps& ops,
                                   const PhaseGrid& grid, unsigned max_workers = 0) {
    const std::size_t npts = grid.size();
    std::vector<Mat> out(npts);
    parallel_for(npts, [&](std::size_t i) { out[i] = semiquantum_cost(basis, ops, grid.points[i]); },
                 max_workers);
    return out;
}

// c^eps = (I + eps c)^{-1} c: eigenvalue map x -> x/(1 + eps x) on a PSD cost.
inline Mat regularized(const Mat& cost, double eps, double psd_tol = 1e-10) {
    if (!(eps > 0)) throw std::invalid_argument("regularized: eps must be positive");
    EighResult e = eigh(cost);
    if (e.evals(0) < -psd_tol) throw std::domain_error("regularized: cost not PSD");
    return apply_func(e, [eps](double x) { return x / (1.0 + eps * x); });
}

struct CostInequalityReport {
    // lambda_min(RHS - LHS) for the five operator inequalities; all >= -1e-8 expected.
    std::array<double, 5> min_gap{};
};

// Five quadratic-cost inequalities with Peter-Paul coefficients, checked as
// operator inequalities on the literal truncated forms (the algebra is exact
// there: every cross term is a square completion of commuting factors).
// zA=(x,xi), zB=(y,eta), zC=(z,zeta) phase-space parameter points.
inline CostInequalityReport check_cost_inequalities(const BasisSpec& basis, double alpha,
                                                    const std::vector<double>& zA,
                                                    const std::vector<double>& zB,
                                                    const std::vector<double>& zC,
                                                    int n_max_triple_cap = 10) {
    if (!(alpha > 0)) throw std::invalid_argument("check_cost_inequalities: alpha must be > 0");
    CanonicalOps ops = build_canonical_ops(basis);
    const auto N = basis.dim();
    Mat I = Mat::Identity(N, N);
    auto dist2 = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0;
        for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
        return s;
    };
    Mat cA = semiquantum_cost_literal(basis, ops, zA);
    Mat cB = semiquantum_cost_literal(basis, ops, zB);
    Mat cC = semiquantum_cost_literal(basis, ops, zC);
    Mat C2 = quantum_cost_literal(basis, ops);

    CostInequalityReport rep;
    // 1: c(zA) <= (1+a)|zA-zB|^2 + (1+1/a) c(zB), on H_N.
    rep.min_gap[0] = min_eig((1 + alpha) * dist2(zA, zB) * I + (1 + 1 / alpha) * cB - cA);
    // 2: C <= (1+a) c(zB)(x)I + (1+1/a) I(x)c(zB), on H_N (x) H_N.
    rep.min_gap[1] =
        min_eig((1 + alpha) * kron(cB, I) + (1 + 1 / alpha) * kron(I, cB) - C2);
    // 3: C_13 <= (1+a) C_12 + (1+1/a) C_23, on H_N^(x)3 (capped).
    if (basis.d == 1 && basis.n_max <= n_max_triple_cap) {
        Mat x = ops.X[0], p = ops.P[0];
        auto lift3 = [&](const Mat& op, int slot) {
            Mat out = (slot == 0) ? op : I;
            out = kron(out, (slot == 1) ? op : I);
            return kron(out, Mat((slot == 2) ? op : I));
        };
        Mat x0 = lift3(x, 0), x1 = lift3(x, 1), x2 = lift3(x, 2);
        Mat p0 = lift3(p, 0), p1 = lift3(p, 1), p2 = lift3(p, 2);
        auto pairC = [&](const Mat& xa, const Mat& pa, const Mat& xb, const Mat& pb) {
            Mat dx = xa - xb, dp = pa - pb;
            return Mat(dx * dx + dp * dp);
        };
        Mat c13 = pairC(x0, p0, x2, p2);
        Mat c12 = pairC(x0, p0, x1, p1);
        Mat c23 = pairC(x1, p1, x2, p2);
        rep.min_gap[2] = min_eig((1 + alpha) * c12 + (1 + 1 / alpha) * c23 - c13);
    } else {
        throw std::invalid_argument(
            "check_cost_inequalities: triple-space check needs d=1, n_max <= cap");
    }
    // 4: |zA-zC|^2 I <= (1+a) c(zA) + (1+a) c(zC), on H_N (valid for alpha >= 1).
    rep.min_gap[3] = min_eig((1 + alpha) * cA + (1 + alpha) * cC - dist2(zA, zC) * I);
    // 5: I(x)c(zA) <= (1+a) c(zA)(x)I + (1+1/a) C, on H_N (x) H_N
    //    (first factor is the intermediate y-space).
    rep.min_gap[4] =
        min_eig((1 + alpha) * kron(cA, I) + (1 + 1 / alpha) * C2 - kron(I, cA));
    return rep;
}

}  // namespace qot
