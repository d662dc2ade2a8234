#pragma once

#include "qot/phase_space.hpp"

#include <chrono>
#include <limits>

namespace qot {

struct TransportPlan {
    RMat pi;             // masses; row sums f_i w_i, col sums g_j w_j
    double defect_f = 0; // L1 marginal defects
    double defect_g = 0;
};

struct ClassicalDuals {
    RVec a, b;
    double margin = 0;  // min_ij (c_ij - a_i - b_j) after projection
};

struct EpsSchedule {
    double eps_start = -1;  // auto: max cost / 10
    double factor = 0.5;
    double eps_min = -1;    // auto: 1e-4 * max cost
    int max_iter = 60000;
    double marginal_tol = 1e-8;
};

struct ClassicalReport {
    double value_sq = 0;
    double dual_lb = 0;
    double gap = 0;
    int iterations = 0;
    std::vector<double> eps_trace;
    double defect_f = 0, defect_g = 0;
    double wall_ms = 0;
    bool converged = true;
};

namespace detail {

inline void check_balanced(const RVec& mu, const RVec& nu) {
    if (std::abs(mu.sum() - nu.sum()) > 1e-8)
        throw std::invalid_argument("classical solve: unbalanced masses beyond 1e-8");
}

inline RVec masses(const GridDensity& f) {
    RVec mu(f.grid.size());
    for (std::size_t i = 0; i < f.grid.size(); ++i) mu(i) = f.values(i) * f.grid.weights[i];
    return mu;
}

}  // namespace detail

// Exact transportation problem via successive shortest augmenting paths on the
// complete bipartite graph, Johnson potentials keeping reduced costs
// nonnegative so each round is one Dijkstra (dense scan-min: the graph is
// complete, so heaps only add overhead). The first attempt stops each Dijkstra
// at the nearest sink with demand and caps the potential update there; the
// final optimality certificate (zero gap, nonnegative margin) is checked, and
// on failure the solve reruns with exhaustive Dijkstras.
struct ExactResult {
    TransportPlan plan;
    double value_sq = 0;
    ClassicalDuals duals;
};

namespace detail {

struct SsPResult {
    RMat x;
    RVec pot_s, pot_t;
};

inline SsPResult ssp_run(const RVec& supply, const RVec& demand, const RMat& cost,
                         const RMat& costT, bool early_stop) {
    const Eigen::Index m = cost.rows(), n = cost.cols();
    const double inf = std::numeric_limits<double>::infinity();
    const double mass_eps = 1e-15;
    SsPResult r;
    r.x = RMat::Zero(m, n);
    r.pot_s = RVec::Zero(m);
    r.pot_t = RVec::Zero(n);
    RVec rs = supply, rd = demand;
    RVec ds(m), dt(n);
    std::vector<int> par_t(n), par_s(m);
    std::vector<char> done_s(m), done_t(n);
    const double total = supply.sum();
    const long max_rounds = 64 * long(m + n) + 1024;
    for (long round = 0;; ++round) {
        if (rs.sum() <= 1e-12 * std::max(1.0, total)) break;
        if (round > max_rounds)
            throw std::runtime_error("solve_exact: augmentation limit hit (degenerate masses?)");
        ds.setConstant(inf);
        dt.setConstant(inf);
        std::fill(par_t.begin(), par_t.end(), -1);
        std::fill(par_s.begin(), par_s.end(), -1);
        std::fill(done_s.begin(), done_s.end(), 0);
        std::fill(done_t.begin(), done_t.end(), 0);
        for (Eigen::Index i = 0; i < m; ++i)
            if (rs(i) > mass_eps) ds(i) = 0;
        int best_sink = -1;
        bool stop = false;
        while (!stop) {
            double bestd = inf;
            int node = -1;
            bool is_src = true;
            for (Eigen::Index i = 0; i < m; ++i)
                if (!done_s[i] && ds(i) < bestd) { bestd = ds(i); node = int(i); }
            for (Eigen::Index j = 0; j < n; ++j)
                if (!done_t[j] && dt(j) < bestd) { bestd = dt(j); node = int(j); is_src = false; }
            if (node < 0) break;
            if (is_src) {
                done_s[node] = 1;
                const double base = ds(node) + r.pot_s(node);
                const double* crow = costT.col(node).data();  // row `node` of cost, contiguous
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (done_t[j]) continue;
                    double cand = base + crow[j] - r.pot_t(j);
                    if (cand < dt(j) - 1e-15) { dt(j) = cand; par_t[j] = node; }
                }
            } else {
                int j = node;
                done_t[j] = 1;
                if (best_sink < 0 && rd(j) > mass_eps) {
                    best_sink = j;
                    if (early_stop) stop = true;
                }
                const double base = dt(j) + r.pot_t(j);
                const double* xcol = r.x.col(j).data();
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (done_s[i] || xcol[i] <= mass_eps) continue;  // backward arc j->i
                    double cand = base - cost(i, j) - r.pot_s(i);
                    if (cand < ds(i) - 1e-15) { ds(i) = cand; par_s[i] = j; }
                }
            }
        }
        if (best_sink < 0)
            throw std::runtime_error("solve_exact: no augmenting path (unbalanced?)");
        // Johnson update: add capped distances. Keeps c_ij + pot_s(i) - pot_t(j)
        // nonnegative everywhere and exactly zero along flow-carrying arcs.
        const double reach = dt(best_sink);
        if (early_stop) {
            for (Eigen::Index i = 0; i < m; ++i) r.pot_s(i) += std::min(ds(i), reach);
            for (Eigen::Index j = 0; j < n; ++j) r.pot_t(j) += std::min(dt(j), reach);
        } else {
            for (Eigen::Index i = 0; i < m; ++i)
                if (ds(i) < inf) r.pot_s(i) += ds(i);
            for (Eigen::Index j = 0; j < n; ++j)
                if (dt(j) < inf) r.pot_t(j) += dt(j);
        }
        // Trace path sink <- source <- sink <- ...; bottleneck first.
        double push = rd(best_sink);
        for (int j = best_sink;;) {
            int i = par_t[j];
            if (par_s[i] == -1) { push = std::min(push, rs(i)); break; }
            push = std::min(push, r.x(i, par_s[i]));
            j = par_s[i];
        }
        for (int j = best_sink;;) {
            int i = par_t[j];
            r.x(i, j) += push;
            if (par_s[i] == -1) { rs(i) -= push; break; }
            r.x(i, par_s[i]) -= push;
            j = par_s[i];
        }
        rd(best_sink) -= push;
    }
    return r;
}

}  // namespace detail

inline ExactResult solve_exact(const GridDensity& f, const GridDensity& g, const RMat& cost,
                               std::size_t size_gate = 512) {
    const Eigen::Index m = cost.rows(), n = cost.cols();
    if (std::size_t(m) > size_gate || std::size_t(n) > size_gate)
        throw std::invalid_argument("solve_exact: support exceeds size gate; use the entropic solver");
    RVec supply = detail::masses(f), demand = detail::masses(g);
    detail::check_balanced(supply, demand);
    RMat costT = cost.transpose();

    ExactResult out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        detail::SsPResult r = detail::ssp_run(supply, demand, cost, costT, attempt == 0);
        out.plan.pi = r.x;
        out.plan.defect_f = (r.x.rowwise().sum() - supply).cwiseAbs().sum();
        out.plan.defect_g = (r.x.colwise().sum().transpose() - demand).cwiseAbs().sum();
        out.value_sq = (r.x.array() * cost.array()).sum();
        // Reduced-cost optimality gives c_ij + pot_s(i) - pot_t(j) >= 0 with
        // equality on the support, so (a,b) = (-pot_s, pot_t) is a Kantorovich
        // pair; equal primal and dual values certify both optimal.
        out.duals.a = -r.pot_s;
        out.duals.b = r.pot_t;
        double margin = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < m; ++i)
                margin = std::min(margin, cost(i, j) - out.duals.a(i) - out.duals.b(j));
        if (margin < 0) {  // tiny negative from float accumulation: project
            for (Eigen::Index i = 0; i < m; ++i) out.duals.a(i) += margin;
        }
        out.duals.margin = std::max(margin, 0.0);
        double dual_val = (out.duals.a.array() * supply.array()).sum() +
                          (out.duals.b.array() * demand.array()).sum();
        double scale = 1.0 + std::abs(out.value_sq) + cost.maxCoeff();
        if (margin >= -1e-9 * scale && std::abs(out.value_sq - dual_val) <= 1e-7 * scale)
            return out;
        // Certificate failed: the capped potential update went stale; redo with
        // exhaustive Dijkstras (provably maintains the reduced-cost invariant).
    }
    throw std::runtime_error("solve_exact: optimality certificate failed");
}

struct EntropicResult {
    TransportPlan plan;
    ClassicalDuals duals;
    ClassicalReport report;
};

// Log-domain Sinkhorn with eps-scaling. Potentials a,b relate to the plan by
// pi_ij = exp((a_i + b_j - c_ij)/eps) * mu_i * nu_j scale folded into a,b:
// here the convention pi_ij = exp((a_i + b_j - c_ij)/eps) directly.
inline EntropicResult solve_entropic(const GridDensity& f, const GridDensity& g, const RMat& cost,
                                     EpsSchedule sched = {}) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    const Eigen::Index m = cost.rows(), n = cost.cols();
    RVec mu = detail::masses(f), nu = detail::masses(g);
    detail::check_balanced(mu, nu);
    RVec logmu(m), lognu(n);
    for (Eigen::Index i = 0; i < m; ++i) logmu(i) = std::log(std::max(mu(i), 1e-300));
    for (Eigen::Index j = 0; j < n; ++j) lognu(j) = std::log(std::max(nu(j), 1e-300));

    const double cmax = cost.maxCoeff();
    if (sched.eps_start <= 0) sched.eps_start = cmax > 0 ? cmax / 10.0 : 1.0;
    if (sched.eps_min <= 0) sched.eps_min = cmax > 0 ? 1e-4 * cmax : 1e-4;
    std::vector<double> eps_list;
    for (double e = sched.eps_start; e > sched.eps_min * 1.0001; e *= sched.factor)
        eps_list.push_back(e);
    eps_list.push_back(sched.eps_min);

    RVec a = RVec::Zero(m), b = RVec::Zero(n);
    auto lse_rows = [&](const RVec& bb, double eps) {  // returns per-i logsumexp_j((b_j - c_ij)/eps)
        RVec out(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j)
                mx = std::max(mx, (bb(j) - cost(i, j)));
            double s = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                s += std::exp(((bb(j) - cost(i, j)) - mx) / eps);
            out(i) = mx / eps + std::log(s);
        }
        return out;
    };
    auto lse_cols = [&](const RVec& aa, double eps) {
        RVec out(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i)
                mx = std::max(mx, (aa(i) - cost(i, j)));
            double s = 0;
            for (Eigen::Index i = 0; i < m; ++i)
                s += std::exp(((aa(i) - cost(i, j)) - mx) / eps);
            out(j) = mx / eps + std::log(s);
        }
        return out;
    };
    auto defects = [&](double eps) {
        double df = 0, dg = 0;
        RVec col = RVec::Zero(n);
        for (Eigen::Index i = 0; i < m; ++i) {
            double row = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                double v = std::exp((a(i) + b(j) - cost(i, j)) / eps);
                row += v;
                col(j) += v;
            }
            df += std::abs(row - mu(i));
        }
        for (Eigen::Index j = 0; j < n; ++j) dg += std::abs(col(j) - nu(j));
        return std::pair<double, double>(df, dg);
    };

    EntropicResult out;
    int iters = 0;
    for (std::size_t si = 0; si < eps_list.size(); ++si) {
        double eps = eps_list[si];
        out.report.eps_trace.push_back(eps);
        bool final = (si + 1 == eps_list.size());
        int cap = final ? sched.max_iter : 200;
        double stage_tol = final ? sched.marginal_tol
                                 : std::max(sched.marginal_tol, 1e-3);
        for (int it = 0; it < cap; ++it) {
            a = eps * (logmu - lse_rows(b, eps));
            b = eps * (lognu - lse_cols(a, eps));
            ++iters;
            if (it % 5 == 4 || it + 1 == cap) {
                auto [df, dg] = defects(eps);
                if (df < stage_tol && dg < stage_tol) break;
            }
        }
    }
    double eps = eps_list.back();
    auto [df, dg] = defects(eps);
    out.report.converged = (df < sched.marginal_tol && dg < sched.marginal_tol);
    out.plan.pi = RMat(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out.plan.pi(i, j) = std::exp((a(i) + b(j) - cost(i, j)) / eps);
    out.plan.defect_f = df;
    out.plan.defect_g = dg;
    out.report.defect_f = df;
    out.report.defect_g = dg;
    out.report.iterations = iters;
    out.report.value_sq = (out.plan.pi.array() * cost.array()).sum();
    // Feasibility projection: uniform shift of a by the negative margin.
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            margin = std::min(margin, cost(i, j) - a(i) - b(j));
    double shift = std::min(0.0, margin);
    out.duals.a = a.array() + shift;
    out.duals.b = b;
    out.duals.margin = margin - shift;
    out.report.dual_lb = (out.duals.a.array() * mu.array()).sum() +
                         (out.duals.b.array() * nu.array()).sum();
    out.report.gap = out.report.value_sq - out.report.dual_lb;
    // Weak duality against the plan's actual marginals: the projected pair is
    // feasible, so it can exceed the primal only through the defect allowance.
    double allowance = out.duals.a.cwiseAbs().maxCoeff() * df +
                       out.duals.b.cwiseAbs().maxCoeff() * dg +
                       1e-9 * (1.0 + std::abs(out.report.value_sq));
    if (out.report.dual_lb > out.report.value_sq + allowance)
        throw std::logic_error("solve_entropic: weak duality violated beyond defect allowance");
    out.report.wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    return out;
}

// Dispatch by size gate; returns the distance (square root of the optimal cost).
inline double dist_mk2(const GridDensity& f, const GridDensity& g, const RMat& cost,
                       std::size_t size_gate = 512) {
    if (std::size_t(cost.rows()) <= size_gate && std::size_t(cost.cols()) <= size_gate)
        return std::sqrt(std::max(0.0, solve_exact(f, g, cost, size_gate).value_sq));
    return std::sqrt(std::max(0.0, solve_entropic(f, g, cost).report.value_sq));
}

}  // namespace qot
