#pragma once

#include "qot/common.hpp"

namespace qot {

struct BasisSpec {
    int d = 1;        // spatial dimension
    int n_max = 16;   // Fock truncation per axis
    double hbar = 0.1;

    BasisSpec() = default;
    BasisSpec(int d_, int n_max_, double hbar_) : d(d_), n_max(n_max_), hbar(hbar_) {
        if (d < 1) throw std::invalid_argument("BasisSpec: d must be >= 1");
        if (n_max < 2) throw std::invalid_argument("BasisSpec: n_max must be >= 2");
        if (!(hbar > 0.0)) throw std::invalid_argument("BasisSpec: hbar must be positive");
    }
    Eigen::Index dim() const {
        Eigen::Index n = 1;
        for (int k = 0; k < d; ++k) n *= n_max;
        return n;
    }
};

// a|n> = sqrt(n)|n-1>; entry (n-1, n) = sqrt(n).
inline Mat ladder(int n_max) {
    Mat a = Mat::Zero(n_max, n_max);
    for (int k = 0; k + 1 < n_max; ++k) a(k, k + 1) = std::sqrt(double(k + 1));
    return a;
}

inline Mat position_op_1axis(int n_max, double hbar) {
    Mat a = ladder(n_max);
    return std::sqrt(hbar / 2.0) * (a + a.adjoint());
}

inline Mat momentum_op_1axis(int n_max, double hbar) {
    Mat a = ladder(n_max);
    return cplx(0.0, 1.0) * std::sqrt(hbar / 2.0) * (a.adjoint() - a);
}

struct CanonicalOps {
    BasisSpec basis;
    std::vector<Mat> X;  // one per axis, embedded on the full space
    std::vector<Mat> P;
    Mat Hosc;            // sum_k hbar(N_k + 1/2), spectrally clean truncation
};

// Embed a single-axis operator at axis k of a d-fold tensor space.
inline Mat embed_axis(const Mat& op, int d, int k, int n_max) {
    Mat out = (k == 0) ? op : Mat(Mat::Identity(n_max, n_max));
    for (int j = 1; j < d; ++j)
        out = kron(out, (j == k) ? op : Mat(Mat::Identity(n_max, n_max)));
    return out;
}

inline CanonicalOps build_canonical_ops(const BasisSpec& basis) {
    if (basis.n_max < 2) throw std::invalid_argument("build_canonical_ops: n_max < 2");
    CanonicalOps ops;
    ops.basis = basis;
    Mat x1 = position_op_1axis(basis.n_max, basis.hbar);
    Mat p1 = momentum_op_1axis(basis.n_max, basis.hbar);
    // Per-axis oscillator taken as hbar(N+1/2): agrees with (X^2+P^2)/2 on all
    // levels below the top one, whose truncated value would otherwise collide
    // with an interior eigenvalue and wreck the spectral anchor.
    RVec hdiag(basis.n_max);
    for (int n = 0; n < basis.n_max; ++n) hdiag(n) = basis.hbar * (n + 0.5);
    Mat h1 = hdiag.cast<cplx>().asDiagonal();

    ops.Hosc = Mat::Zero(basis.dim(), basis.dim());
    for (int k = 0; k < basis.d; ++k) {
        ops.X.push_back(embed_axis(x1, basis.d, k, basis.n_max));
        ops.P.push_back(embed_axis(p1, basis.d, k, basis.n_max));
        ops.Hosc += embed_axis(h1, basis.d, k, basis.n_max);
    }
    return ops;
}

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

// Exact displacement unitary on the truncated space: exp(alpha a† - conj(alpha) a)
// with alpha = (q + ip)/sqrt(2 hbar). Unitary by construction (exponential of a
// skew-Hermitian generator via spectral calculus).
inline Mat displacement(int n_max, double hbar, double q, double p) {
    cplx alpha = cplx(q, p) / std::sqrt(2.0 * hbar);
    Mat a = ladder(n_max);
    Mat gen = alpha * a.adjoint() - std::conj(alpha) * a;   // skew-Hermitian
    Mat k = cplx(0.0, -1.0) * gen;                          // Hermitian
    EighResult e = eigh(k);
    Vec phase(e.evals.size());
    for (Eigen::Index i = 0; i < e.evals.size(); ++i)
        phase(i) = std::exp(cplx(0.0, e.evals(i)));
    return e.evecs * phase.asDiagonal() * e.evecs.adjoint();
}

// 50:50 beamsplitter rotation on H_n (x) H_n: exp((pi/4)(a†(x)a - a(x)a†)).
inline Mat beamsplitter(int n_max) {
    Mat a = ladder(n_max);
    Mat gen = (3.14159265358979323846 / 4.0) *
              (kron(a.adjoint(), a) - kron(a, a.adjoint()));
    Mat k = cplx(0.0, -1.0) * gen;
    EighResult e = eigh(k);
    Vec phase(e.evals.size());
    for (Eigen::Index i = 0; i < e.evals.size(); ++i)
        phase(i) = std::exp(cplx(0.0, e.evals(i)));
    return e.evecs * phase.asDiagonal() * e.evecs.adjoint();
}

inline Mat gibbs_state(const Mat& h, double beta) {
    Mat g = expm_herm(-beta * h);
    return g / trace_re(g);
}

struct DensityReport {
    bool is_density = false;
    double min_eig = 0.0;
    double trace_defect = 0.0;
};

inline DensityReport validate_density(const Mat& r, double tol = 1e-9) {
    DensityReport rep;
    if (r.rows() != r.cols()) throw std::invalid_argument("validate_density: not square");
    EighResult e = eigh(r);
    rep.min_eig = e.evals(0);
    rep.trace_defect = std::abs(trace_re(r) - 1.0);
    rep.is_density = (rep.min_eig >= -tol) && (rep.trace_defect <= tol);
    return rep;
}

}  // namespace qot
