#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <string>
#include <thread>
#include <vector>

namespace qot {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Mat& m, double tol_scale = 1e-12) {
    if (m.rows() != m.cols()) return false;
    double tol = tol_scale * (1.0 + max_abs(m));
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

struct EighResult {
    RVec evals;   // ascending
    Mat evecs;    // unitary columns
};

inline EighResult eigh(const Mat& h) {
    if (!is_hermitian(h))
        throw std::invalid_argument("eigh: input is not Hermitian within tolerance");
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(h));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigh: eigensolver failed to converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eig(const Mat& h) { return eigh(h).evals(0); }
inline double max_eig(const Mat& h) {
    RVec ev = eigh(h).evals;
    return ev(ev.size() - 1);
}

inline double trace_norm(const Mat& m) {
    // For the Hermitian differences used throughout; sum of |eigenvalues|.
    EighResult e = eigh(m);
    return e.evals.cwiseAbs().sum();
}

inline double op_norm(const Mat& m) {
    EighResult e = eigh(m);
    return std::max(std::abs(e.evals(0)), std::abs(e.evals(e.evals.size() - 1)));
}

// Functional calculus on Hermitian matrices: V f(diag) V†.
inline Mat apply_func(const EighResult& e, const std::function<double(double)>& f) {
    RVec fv(e.evals.size());
    for (Eigen::Index i = 0; i < e.evals.size(); ++i) fv(i) = f(e.evals(i));
    return e.evecs * fv.asDiagonal() * e.evecs.adjoint();
}

inline Mat expm_herm(const Mat& h) {
    return apply_func(eigh(h), [](double x) { return std::exp(x); });
}

// Eigenvalues clamped at `floor` before log; keeps entropic iterations finite
// when spectra underflow.
inline Mat logm_herm(const Mat& h, double floor = 1e-14, double psd_tol = 1e-10) {
    EighResult e = eigh(h);
    if (e.evals(0) < -psd_tol)
        throw std::domain_error("logm_herm: matrix has eigenvalue below -psd_tol");
    return apply_func(e, [floor](double x) { return std::log(std::max(x, floor)); });
}

inline Mat sqrtm_herm(const Mat& h, double psd_tol = 1e-10) {
    EighResult e = eigh(h);
    if (e.evals(0) < -psd_tol)
        throw std::domain_error("sqrtm_herm: matrix has eigenvalue below -psd_tol");
    return apply_func(e, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

// Pseudo-inverse square root: eigenvalues below floor_rel * lambda_max are
// dropped (mapped to zero), keeping near-singular marginals bounded.
inline Mat inv_sqrt_psd(const Mat& h, double floor_rel = 1e-14) {
    EighResult e = eigh(h);
    double floor = floor_rel * std::max(e.evals(e.evals.size() - 1), 1e-300);
    return apply_func(e, [floor](double x) { return x > floor ? 1.0 / std::sqrt(x) : 0.0; });
}

// Numerical rank-1 test: second-largest eigenvalue at most tol.
inline bool is_rank_one(const Mat& m, double tol = 1e-10) {
    RVec ev = eigh(m).evals;
    return ev.size() >= 2 && ev(ev.size() - 2) <= tol;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

enum class Side { left, right };

// Partial trace of an operator on H_N (x) H_N down to H_N.
// side == right traces out the second factor (returns the first marginal).
inline Mat partial_trace(const Mat& m, Side side) {
    const auto dim2 = m.rows();
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(double(dim2))));
    if (n * n != dim2 || m.cols() != dim2)
        throw std::invalid_argument("partial_trace: dimension is not a perfect square");
    Mat out = Mat::Zero(n, n);
    if (side == Side::right) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                cplx s = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) s += m(i * n + k, j * n + k);
                out(i, j) = s;
            }
    } else {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                cplx s = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) s += m(k * n + i, k * n + j);
                out(i, j) = s;
            }
    }
    return out;
}

inline double trace_re(const Mat& m) { return m.trace().real(); }

// Deterministic RNG. std::uniform_real_distribution / normal_distribution are
// implementation-defined, so the mapping from raw bits is spelled out here.
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64; passes through the whole 2^64 state space.
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() {  // [0,1)
        return double(next_u64() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        // Box-Muller, one value per call pair kept cached.
        if (have_spare_) { have_spare_ = false; return spare_; }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }
private:
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline unsigned worker_count() {
    if (const char* env = std::getenv("QOT_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

// Static work split; tasks must be independent. Results stay deterministic
// because each index writes only its own slot.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         unsigned max_workers = 0) {
    unsigned w = max_workers ? std::min(max_workers, worker_count()) : worker_count();
    if (w <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                body(i);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace qot
