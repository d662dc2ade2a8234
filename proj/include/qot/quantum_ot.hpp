#pragma once

#include "qot/cost_models.hpp"

#include <chrono>

namespace qot {

struct QuantumCoupling {
    Mat pi;  // on H_N (x) H_N
    double defect_R = 0, defect_S = 0;  // trace-norm marginal defects
};

struct QuantumDuals {
    Mat A, B;
    double margin = 0;  // lambda_min(C - A(x)I - I(x)B) after projection
    double value = 0;   // trace(AR) + trace(BS)
};

struct QuantumReport {
    double value_sq = 0;
    double dual_lb = 0;
    double gap = 0;
    int iterations = 0;
    std::vector<double> eps_trace;
    double defect_R = 0, defect_S = 0;
    double wall_ms = 0;
    bool converged = true;
};

struct MkOptions {
    double eps_start = -1;      // auto: lambda_max(C)/10
    double factor = 0.5;
    double eps_min = -1;        // auto: 3e-4 * lambda_max(C)
    double theta = 1.0;         // damping for the staged sweeps
    double theta_final = 1.8;   // overrelaxation once the final stage has warmed up
    int stage_cap = 40;
    int final_cap = 600;
    int final_warmup = 30;
    double tol = 1e-6;          // trace-norm marginal defects
    double log_floor = 1e-14;
    double gap_refine_rel = 8e-3;  // extend the ladder while gap > rel * value
    int gap_refine_max = 3;        // extra eps/3 stages allowed past the floor
};

// Uniform-shift projection of (A,B) onto the dual feasible set, and the
// certified lower bound trace(AR)+trace(BS).
inline QuantumDuals certify_dual(const Mat& A, const Mat& B, const Mat& C, const Mat& R,
                                 const Mat& S) {
    const auto N = A.rows();
    Mat I = Mat::Identity(N, N);
    Mat slackop = C - kron(A, I) - kron(I, B);
    double lam = min_eig(slackop);
    double s = std::min(0.0, lam);
    QuantumDuals d;
    d.A = A + s * I;
    d.B = B;
    d.margin = lam - s;
    d.value = std::real((d.A * R).trace() + (d.B * S).trace());
    return d;
}

inline QuantumCoupling validate_coupling(const Mat& pi, const Mat& R, const Mat& S) {
    QuantumCoupling qc;
    qc.pi = pi;
    qc.defect_R = trace_norm(partial_trace(pi, Side::right) - R);
    qc.defect_S = trace_norm(partial_trace(pi, Side::left) - S);
    return qc;
}

struct MkResult {
    QuantumCoupling coupling;
    QuantumReport report;
    QuantumDuals duals;
};

namespace detail {

// (M (x) I) * pi without forming the dense kron: block-row mixing.
inline Mat kron_left_mul(const Mat& M, const Mat& pi) {
    const auto N = M.rows();
    Mat out = Mat::Zero(pi.rows(), pi.cols());
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index k = 0; k < N; ++k)
            if (M(i, k) != cplx(0, 0))
                out.middleRows(i * N, N).noalias() += M(i, k) * pi.middleRows(k * N, N);
    return out;
}

// Congruence rounding to exact marginals: conjugating by R^{1/2} Rpi^{-1/2} (x) I
// pins the first marginal while preserving positivity, then the mirrored
// congruence pins the second; alternating contracts both defects. Returns the
// iterate with the smallest worst-side defect.
inline Mat round_to_marginals(const Mat& pi0, const Mat& R, const Mat& S, double tol,
                              int passes = 120) {
    const auto N = R.rows();
    Mat sqR = sqrtm_herm(R), sqS = sqrtm_herm(S);
    auto congruence_left = [](const Mat& M, const Mat& pi) {
        return hermitize(kron_left_mul(M, kron_left_mul(M, pi).adjoint()).adjoint());
    };
    auto congruence_right = [N](const Mat& M, const Mat& pi) {
        // (I (x) M) pi (I (x) M)^dag: per-block-row GEMMs.
        Mat t(pi.rows(), pi.cols());
        for (Eigen::Index i = 0; i < N; ++i) t.middleRows(i * N, N).noalias() = M * pi.middleRows(i * N, N);
        Mat u = t.adjoint();
        for (Eigen::Index i = 0; i < N; ++i) t.middleRows(i * N, N).noalias() = M * u.middleRows(i * N, N);
        return hermitize(t.adjoint());
    };
    Mat pi = pi0, best = pi0;
    double best_d = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int p = 0; p < passes; ++p) {
        pi = congruence_left(Mat(sqR * inv_sqrt_psd(partial_trace(pi, Side::right))), pi);
        pi = congruence_right(Mat(sqS * inv_sqrt_psd(partial_trace(pi, Side::left))), pi);
        double d = std::max(trace_norm(partial_trace(pi, Side::right) - R),
                            trace_norm(partial_trace(pi, Side::left) - S));
        stall = d > 0.999 * best_d ? stall + 1 : 0;
        if (d < best_d) { best_d = d; best = pi; }
        if (d <= tol || stall >= 5) break;
    }
    return best;
}

}  // namespace detail

// When one marginal is pure the product coupling is the only coupling, so the
// value is a direct trace: no iteration, exact up to truncation.
inline MkResult mk_rank1_fast_path(const Mat& R, const Mat& S, const Mat& C) {
    if (!is_rank_one(R) && !is_rank_one(S))
        throw std::invalid_argument("mk_rank1_fast_path: neither marginal is rank one");
    MkResult out;
    out.coupling.pi = kron(R, S);
    out.coupling.defect_R = 0;
    out.coupling.defect_S = 0;
    out.report.value_sq = std::real((C * out.coupling.pi).trace());
    out.duals = certify_dual(Mat::Zero(R.rows(), R.cols()), Mat::Zero(S.rows(), S.cols()), C, R, S);
    out.report.dual_lb = out.duals.value;
    out.report.gap = out.report.value_sq - out.report.dual_lb;
    return out;
}

// Entropic iteration for the quantum coupling problem. Pi = exp((A(x)I + I(x)B - C)/eps)
// with alternating damped potential updates and an eps-scaling outer loop; the
// final stage switches to overrelaxation after a warmup, backing off if the
// defects grow. The certified bound is tracked best-over-stages.
inline MkResult solve_mk(const Mat& R, const Mat& S, const Mat& C, MkOptions opt = {}) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const auto N = R.rows();
    if (S.rows() != N || C.rows() != N * N)
        throw std::invalid_argument("solve_mk: dimension mismatch");
    Mat I = Mat::Identity(N, N);
    const double cmax = max_eig(C);
    if (opt.eps_start <= 0) opt.eps_start = cmax / 10.0;
    if (opt.eps_min <= 0) opt.eps_min = 3e-4 * cmax;
    std::vector<double> eps_list;
    for (double e = opt.eps_start; e > opt.eps_min * 1.0001; e *= opt.factor)
        eps_list.push_back(e);
    eps_list.push_back(opt.eps_min);

    Mat A = Mat::Zero(N, N), B = Mat::Zero(N, N);
    Mat logR = logm_herm(R, opt.log_floor);
    Mat logS = logm_herm(S, opt.log_floor);

    auto plan = [&](double eps) {
        Mat expo = (kron(A, I) + kron(I, B) - C) / eps;
        // exp overflow guard: transient positive drift of the potentials.
        if (max_eig(expo) > 600.0)
            throw std::overflow_error("solve_mk: matrix-exp overflow");
        return expm_herm(expo);
    };
    auto defects = [&](double eps) {
        Mat pi = plan(eps);
        return std::pair<double, double>(trace_norm(partial_trace(pi, Side::right) - R),
                                         trace_norm(partial_trace(pi, Side::left) - S));
    };

    MkResult out;
    int iters = 0;
    double best_dual = -std::numeric_limits<double>::infinity();
    Mat bestA = A, bestB = B;
    const std::size_t base_stages = eps_list.size();
    Mat final_pi;
    for (std::size_t si = 0; si < eps_list.size(); ++si) {
        double eps = eps_list[si];
        out.report.eps_trace.push_back(eps);
        bool final = (si + 1 == eps_list.size());
        int cap = final ? (si >= base_stages ? opt.final_cap / 2 : opt.final_cap)
                        : opt.stage_cap;
        double stage_tol = final ? opt.tol : std::max(opt.tol, 0.05 * eps);
        double theta_hi = opt.theta_final;
        double dprev = std::numeric_limits<double>::infinity();
        double stage_best = std::numeric_limits<double>::infinity();
        int bad = 0, flat = 0;
        for (int it = 0; it < cap; ++it) {
            double th = (final && it >= opt.final_warmup) ? theta_hi : opt.theta;
            bool ok = true;
            try {
                Mat pi = plan(eps);
                A += th * eps * (logR - logm_herm(partial_trace(pi, Side::right), opt.log_floor));
                pi = plan(eps);
                B += th * eps * (logS - logm_herm(partial_trace(pi, Side::left), opt.log_floor));
            } catch (const std::overflow_error&) {
                // eps backoff: restart the stage ladder from a safer level.
                eps *= 2.0;
                out.report.eps_trace.push_back(eps);
                ok = false;
            }
            ++iters;
            if (!ok) continue;
            if (it % 5 == 4 || it + 1 == cap) {
                auto [dR, dS] = defects(eps);
                if (dR < stage_tol && dS < stage_tol) break;
                double dm = std::max(dR, dS);
                // The sweep rate collapses to 1 - O(eps) near the fixed point;
                // once checks stop improving, leave the rest to the next stage
                // and the marginal rounding instead of burning the cap.
                flat = dm > 0.97 * stage_best ? flat + 1 : 0;
                if (dm < stage_best) stage_best = dm;
                if (flat >= 3) break;
                if (final && it >= opt.final_warmup) {
                    if (dm > dprev * 1.02) {
                        if (++bad >= 3) { theta_hi = std::max(1.0, 0.5 * (theta_hi + 1.0)); bad = 0; }
                    } else bad = 0;
                    dprev = dm;
                }
            }
        }
        QuantumDuals d = certify_dual(A, B, C, R, S);
        if (d.value > best_dual) { best_dual = d.value; bestA = d.A; bestB = d.B; }
        if (si + 1 == eps_list.size()) {
            // Assemble at the eps this stage actually trained at (post-backoff)
            // and round to exact marginals, so the reported primal comes from a
            // feasible coupling. If the certified gap still misses the relative
            // target, extend the ladder by an eps/3 stage (warm-started) instead
            // of accepting; the extension budget caps the ladder length.
            Mat pi = detail::round_to_marginals(plan(eps), R, S, opt.tol);
            double val_now = std::real((C * pi).trace());
            if (val_now - best_dual > opt.gap_refine_rel * std::abs(val_now) &&
                eps_list.size() < base_stages + std::size_t(std::max(0, opt.gap_refine_max)))
                eps_list.push_back(eps / 3.0);
            else
                final_pi = std::move(pi);
        }
    }
    out.coupling = validate_coupling(final_pi, R, S);
    out.report.value_sq = std::real((C * final_pi).trace());
    out.report.defect_R = out.coupling.defect_R;
    out.report.defect_S = out.coupling.defect_S;
    out.report.iterations = iters;
    out.report.converged = (out.report.defect_R <= opt.tol && out.report.defect_S <= opt.tol);
    out.duals.A = bestA;
    out.duals.B = bestB;
    out.duals.value = best_dual;
    out.duals.margin = 0.0;
    out.report.dual_lb = best_dual;
    out.report.gap = out.report.value_sq - out.report.dual_lb;
    // Weak duality, exactly, for the actual marginals of pi: the certified pair
    // is feasible, so its value cannot exceed trace(C pi) by more than the
    // Hoelder allowance for the marginal defects.
    double allowance = op_norm(bestA) * out.report.defect_R +
                       op_norm(bestB) * out.report.defect_S +
                       1e-9 * (1.0 + std::abs(out.report.value_sq));
    if (out.report.dual_lb > out.report.value_sq + allowance)
        throw std::logic_error("solve_mk: weak duality violated beyond defect allowance");
    out.report.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    return out;
}

}  // namespace qot
