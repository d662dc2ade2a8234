#pragma once

#include "qot/classical_ot.hpp"
#include "qot/quantum_ot.hpp"
#include "qot/semiquantum_ot.hpp"
#include "qot/transport_maps.hpp"

#include <json.hpp>

#include <iomanip>

namespace qot {

using ordered_json = nlohmann::ordered_json;

struct GridSpec {
    std::vector<std::array<double, 2>> bounds = {{{-4.0, 4.0}}, {{-4.0, 4.0}}};
    std::vector<int> counts = {24, 24};
};

struct ExperimentConfig {
    std::vector<double> hbar_list = {0.1, 0.2};  // suite: cycled over instances; sweep: rows
    int d = 1;
    int n_max = 16;          // sweep: 0 selects per-row from the leakage estimate
    GridSpec grid;
    EpsSchedule classical_sched;
    MkOptions mk_opts;
    SemiOptions e_opts;
    std::uint64_t seed = 7;
    int instances = 20;
    std::size_t exact_gate = 4096;  // harness classical solves run the exact solver
    unsigned workers = 0;           // instance-level pool; 0 = hardware/QOT_THREADS
};

inline ExperimentConfig config_from_json(const ordered_json& j) {
    ExperimentConfig c;
    if (j.contains("hbar")) {
        c.hbar_list.clear();
        if (j["hbar"].is_array())
            for (const auto& v : j["hbar"]) c.hbar_list.push_back(v.get<double>());
        else
            c.hbar_list.push_back(j["hbar"].get<double>());
    }
    if (j.contains("d")) c.d = j["d"].get<int>();
    if (j.contains("n_max")) c.n_max = j["n_max"].get<int>();
    if (j.contains("grid")) {
        c.grid.bounds.clear();
        for (const auto& b : j["grid"]["bounds"])
            c.grid.bounds.push_back({b[0].get<double>(), b[1].get<double>()});
        c.grid.counts = j["grid"]["counts"].get<std::vector<int>>();
    }
    if (j.contains("eps_schedule")) {
        const auto& e = j["eps_schedule"];
        if (e.contains("start")) c.classical_sched.eps_start = e["start"].get<double>();
        if (e.contains("factor")) c.classical_sched.factor = e["factor"].get<double>();
        if (e.contains("min")) c.classical_sched.eps_min = e["min"].get<double>();
    }
    if (j.contains("tol")) {
        const auto& t = j["tol"];
        if (t.contains("marginal")) {
            c.classical_sched.marginal_tol = t["marginal"].get<double>();
            c.mk_opts.tol = t["marginal"].get<double>();
            c.e_opts.tol = t["marginal"].get<double>();
        }
        if (t.contains("block")) c.e_opts.block_tol = t["block"].get<double>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("instances")) c.instances = j["instances"].get<int>();
    if (j.contains("workers")) c.workers = j["workers"].get<unsigned>();
    return c;
}

inline ordered_json config_echo(const ExperimentConfig& c) {
    ordered_json j;
    j["hbar"] = c.hbar_list;
    j["d"] = c.d;
    j["n_max"] = c.n_max;
    ordered_json g;
    g["bounds"] = ordered_json::array();
    for (const auto& b : c.grid.bounds) g["bounds"].push_back({b[0], b[1]});
    g["counts"] = c.grid.counts;
    j["grid"] = g;
    j["seed"] = c.seed;
    j["instances"] = c.instances;
    return j;
}

struct SolveRecord {
    std::string name;
    double value_sq = 0, dual_lb = 0, gap = 0;
    double uncertainty = 0;  // gap plus dual-norm-weighted marginal defects
    double defect_a = 0, defect_b = 0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> eps_trace;
    double wall_ms = 0;
};

struct IneqRecord {
    std::string name;
    double lhs = 0, rhs = 0, slack = 0, tol = 0;
    bool pass = false;
};

struct InstanceResult {
    int id = 0;
    double hbar = 0;
    std::string status = "done";  // done | skipped
    std::string skip_reason;
    std::vector<SolveRecord> solves;
    std::vector<IneqRecord> records;
    double wall_ms = 0;
};

struct SuiteResult {
    ExperimentConfig config;
    std::vector<InstanceResult> instances;
    int records_total = 0, records_failed = 0, instances_skipped = 0;
    bool all_pass = false;
};

namespace detail {

// Deterministic per-instance stream: one splitmix64 lane per index.
inline Rng instance_rng(std::uint64_t seed, int idx) {
    Rng r(seed + 0x9E3779B97F4A7C15ull * std::uint64_t(idx + 1));
    r.uniform();
    return r;
}

inline GridDensity random_mixture(Rng& rng, const PhaseGrid& grid) {
    int ncomp = 1 + int(rng.uniform() * 3.0);
    if (ncomp > 3) ncomp = 3;
    std::vector<std::array<double, 2>> mean(ncomp);
    std::vector<double> sig(ncomp), wgt(ncomp);
    for (int c = 0; c < ncomp; ++c) {
        mean[c] = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        sig[c] = rng.uniform(0.3, 0.45);
        wgt[c] = rng.uniform(0.3, 1.0);
    }
    RVec raw = RVec::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double q = grid.points[i][0], p = grid.points[i][1];
        double v = 0;
        for (int c = 0; c < ncomp; ++c) {
            double dq = q - mean[c][0], dp = p - mean[c][1];
            v += wgt[c] * std::exp(-(dq * dq + dp * dp) / (2 * sig[c] * sig[c]));
        }
        raw(static_cast<Eigen::Index>(i)) = v;
    }
    return make_density(grid, raw, true);
}

inline Mat random_pure(Rng& rng, Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = cplx(rng.normal(), rng.normal());
    v /= v.norm();
    return v * v.adjoint();
}

inline Mat random_state(Rng& rng, const BasisSpec& basis, const CanonicalOps& ops,
                        const PhaseGrid& grid) {
    double kind = rng.uniform();
    if (kind < 1.0 / 3.0) {
        GridDensity mu = random_mixture(rng, grid);
        return toeplitz_quantize(basis, mu).rho;
    }
    if (kind < 2.0 / 3.0) return gibbs_state(ops.Hosc, rng.uniform(0.8, 1.6));
    return random_pure(rng, basis.dim());
}

inline SolveRecord record_classical(const std::string& name, const ExactResult& r) {
    SolveRecord s;
    s.name = name;
    s.value_sq = r.value_sq;
    s.dual_lb = r.value_sq;  // primal equals certified dual at the optimum
    s.gap = 0;
    s.uncertainty = 1e-10 * (1.0 + std::abs(r.value_sq));
    s.defect_a = r.plan.defect_f;
    s.defect_b = r.plan.defect_g;
    return s;
}

inline SolveRecord record_mk(const std::string& name, const MkResult& r) {
    SolveRecord s;
    s.name = name;
    s.value_sq = r.report.value_sq;
    s.dual_lb = r.report.dual_lb;
    s.gap = r.report.gap;
    s.uncertainty = std::max(r.report.gap, 0.0) +
                    op_norm(r.duals.A) * r.report.defect_R +
                    op_norm(r.duals.B) * r.report.defect_S;
    s.defect_a = r.report.defect_R;
    s.defect_b = r.report.defect_S;
    s.iterations = r.report.iterations;
    s.converged = r.report.converged;
    s.eps_trace = r.report.eps_trace;
    s.wall_ms = r.report.wall_ms;
    return s;
}

inline SolveRecord record_e(const std::string& name, const ERes& r) {
    SolveRecord s;
    s.name = name;
    s.value_sq = r.report.value_sq;
    s.dual_lb = r.report.dual_lb;
    s.gap = r.report.gap;
    s.uncertainty = std::max(r.report.gap, 0.0) + op_norm(r.duals.B) * r.report.defect_R;
    s.defect_a = r.report.defect_R;
    s.defect_b = r.report.per_block_defect_max;
    s.iterations = r.report.iterations;
    s.converged = r.report.converged;
    s.eps_trace = r.report.eps_trace;
    s.wall_ms = r.report.wall_ms;
    return s;
}

// Shared per-hbar immutable context: operators, costs, grid.
struct HbarContext {
    double hbar = 0;
    BasisSpec basis;
    CanonicalOps ops;
    PhaseGrid grid;
    RMat ccost;
    std::vector<Mat> ecosts;
    Mat C;
    HbarContext(double hb, int d, int n_max, const GridSpec& gs)
        : hbar(hb), basis(d, n_max, hb) {
        ops = build_canonical_ops(basis);
        grid = make_grid(d, gs.bounds, gs.counts);
        ccost = classical_cost(grid, grid);
        ecosts = cost_field(basis, ops, grid, 0);
        C = quantum_cost(basis, ops);
    }
};

}  // namespace detail

// One seeded instance: random mixture densities f, g; states R1, R3 from the
// generator mix (quantized mixture / thermal / random pure), R2 forced pure.
// Evaluates the full inequality battery with tolerances tied to the certified
// solver uncertainty: tol = max(1e-3 * scale, 3 * summed uncertainty).
inline InstanceResult run_instance(const detail::HbarContext& ctx, std::uint64_t seed, int idx,
                                   const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    InstanceResult out;
    out.id = idx;
    out.hbar = ctx.hbar;
    const double dh = ctx.basis.d * ctx.hbar;
    Rng rng = detail::instance_rng(seed, idx);
    try {
        GridDensity f = detail::random_mixture(rng, ctx.grid);
        GridDensity g = detail::random_mixture(rng, ctx.grid);
        Mat R1 = detail::random_state(rng, ctx.basis, ctx.ops, ctx.grid);
        Mat R2 = detail::random_pure(rng, ctx.basis.dim());
        Mat R3 = detail::random_state(rng, ctx.basis, ctx.ops, ctx.grid);

        GridDensity h1 = husimi(ctx.basis, R1, ctx.grid);
        GridDensity h3 = husimi(ctx.basis, R3, ctx.grid);
        Mat Tf = toeplitz_quantize(ctx.basis, f).rho;
        Mat Tg = toeplitz_quantize(ctx.basis, g).rho;

        SolveRecord dist_fg = detail::record_classical(
            "dist_f_g", solve_exact(f, g, ctx.ccost, cfg.exact_gate));
        SolveRecord dist_h = detail::record_classical(
            "dist_husimiR1_husimiR3", solve_exact(h1, h3, ctx.ccost, cfg.exact_gate));

        SemiOptions eo = cfg.e_opts;
        eo.threads = 1;
        SolveRecord e_f_r1 = detail::record_e("e_f_R1", solve_e(f, R1, ctx.ecosts, eo));
        SolveRecord e_g_r1 = detail::record_e("e_g_R1", solve_e(g, R1, ctx.ecosts, eo));
        SolveRecord e_f_r3 = detail::record_e("e_f_R3", solve_e(f, R3, ctx.ecosts, eo));
        SolveRecord e_f_r2 = detail::record_e("e_f_R2", solve_e(f, R2, ctx.ecosts, eo));
        SolveRecord e_g_r2 = detail::record_e("e_g_R2", solve_e(g, R2, ctx.ecosts, eo));
        SolveRecord e_h1_r3 = detail::record_e("e_husimiR1_R3", solve_e(h1, R3, ctx.ecosts, eo));

        MkOptions mo = cfg.mk_opts;
        SolveRecord mk13 = detail::record_mk("mk_R1_R3", solve_mk(R1, R3, ctx.C, mo));
        SolveRecord mk12 = detail::record_mk("mk_R1_R2", solve_mk(R1, R2, ctx.C, mo));
        SolveRecord mk23 = detail::record_mk("mk_R2_R3", solve_mk(R2, R3, ctx.C, mo));
        SolveRecord mkt = detail::record_mk("mk_quantized_f_g", solve_mk(Tf, Tg, ctx.C, mo));

        out.solves = {dist_fg, dist_h, e_f_r1, e_g_r1, e_f_r3,
                      e_f_r2,  e_g_r2, e_h1_r3, mk13,  mk12,
                      mk23,    mkt};

        auto rt = [](const SolveRecord& s) { return std::sqrt(std::max(0.0, s.value_sq)); };
        // Uncertainty of the square root: |d sqrt| <= u / (2 sqrt(v)), floored.
        auto rtu = [&](const SolveRecord& s) {
            double v = rt(s);
            return v > 1e-9 ? s.uncertainty / (2 * v) : std::sqrt(s.uncertainty);
        };
        auto add = [&](const std::string& name, double lhs, double rhs, double usum) {
            IneqRecord r;
            r.name = name;
            r.lhs = lhs;
            r.rhs = rhs;
            r.slack = rhs - lhs;
            r.tol = std::max(1e-3 * std::max(std::abs(lhs), std::abs(rhs)), 3.0 * usum);
            r.pass = r.slack >= -r.tol;
            out.records.push_back(r);
        };

        add("density-shift-triangle", rt(e_f_r1), rt(dist_fg) + rt(e_g_r1),
            rtu(e_f_r1) + rtu(dist_fg) + rtu(e_g_r1));
        add("state-pair-via-density", rt(mk13), rt(e_f_r1) + rt(e_f_r3),
            rtu(mk13) + rtu(e_f_r1) + rtu(e_f_r3));
        add("state-triangle-pure-mid", rt(mk13), rt(mk12) + rt(mk23),
            rtu(mk13) + rtu(mk12) + rtu(mk23));
        add("density-pair-via-pure-state", rt(dist_fg), rt(e_f_r2) + rt(e_g_r2),
            rtu(dist_fg) + rtu(e_f_r2) + rtu(e_g_r2));
        add("density-state-triangle-pure-mid", rt(e_f_r3), rt(e_f_r2) + rt(mk23),
            rtu(e_f_r3) + rtu(e_f_r2) + rtu(mk23));

        add("husimi-dist-lower-bounds-e-sq", dist_h.value_sq - dh, e_h1_r3.value_sq,
            dist_h.uncertainty + e_h1_r3.uncertainty);
        add("e-sq-lower-bounds-mk-sq", e_h1_r3.value_sq - dh, mk13.value_sq,
            e_h1_r3.uncertainty + mk13.uncertainty);
        add("husimi-dist-lower-bounds-mk-sq", dist_h.value_sq - 2 * dh, mk13.value_sq,
            dist_h.uncertainty + mk13.uncertainty);

        auto wsq = [&](const SolveRecord& s) { return std::sqrt(s.value_sq + dh); };
        add("density-pair-sqrt-corrected", rt(dist_fg), wsq(e_f_r2) + wsq(e_g_r2),
            rtu(dist_fg) + rtu(e_f_r2) + rtu(e_g_r2));
        add("density-state-sqrt-corrected", rt(e_f_r3), wsq(e_f_r2) + wsq(mk23),
            rtu(e_f_r3) + rtu(e_f_r2) + rtu(mk23));
        add("state-triangle-sqrt-corrected", rt(mk13), wsq(mk12) + wsq(mk23),
            rtu(mk13) + rtu(mk12) + rtu(mk23));
        add("state-triangle-additive-corrected", rt(mk13), rt(mk12) + rt(mk23) + dh,
            rtu(mk13) + rtu(mk12) + rtu(mk23));

        for (const SolveRecord* s : {&e_f_r1, &e_g_r1, &e_f_r3, &e_f_r2, &e_g_r2, &e_h1_r3})
            add("floor-e-sq-" + s->name, dh, s->value_sq, s->uncertainty);
        for (const SolveRecord* s : {&mk13, &mk12, &mk23, &mkt})
            add("floor-mk-sq-" + s->name, 2 * dh, s->value_sq, s->uncertainty);

        add("quantized-upper-sandwich", mkt.value_sq, dist_fg.value_sq + 2 * dh,
            mkt.uncertainty + dist_fg.uncertainty);
        add("husimi-lower-sandwich", dist_h.value_sq, mk13.value_sq + 2 * dh,
            dist_h.uncertainty + mk13.uncertainty);

        // Certified-gap gates: strict (uncertainty already carried by the gap).
        for (const SolveRecord& s : out.solves) {
            IneqRecord r;
            r.name = "gap-gate-" + s.name;
            r.lhs = s.gap;
            r.rhs = 1e-2 * std::abs(s.value_sq);
            r.slack = r.rhs - r.lhs;
            r.tol = 0;
            r.pass = r.slack >= 0;
            out.records.push_back(r);
        }
    } catch (const std::exception& ex) {
        out.status = "skipped";
        out.skip_reason = ex.what();
        out.records.clear();
    }
    out.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    return out;
}

inline SuiteResult run_inequality_suite(const ExperimentConfig& cfg) {
    if (cfg.instances < 1) throw std::invalid_argument("run_inequality_suite: instances >= 1");
    if (cfg.hbar_list.empty()) throw std::invalid_argument("run_inequality_suite: empty hbar list");
    SuiteResult res;
    res.config = cfg;
    std::vector<detail::HbarContext> ctxs;
    ctxs.reserve(cfg.hbar_list.size());
    for (double h : cfg.hbar_list) ctxs.emplace_back(h, cfg.d, cfg.n_max, cfg.grid);
    res.instances.assign(cfg.instances, InstanceResult{});
    parallel_for(std::size_t(cfg.instances), [&](std::size_t i) {
        const auto& ctx = ctxs[i % ctxs.size()];
        res.instances[i] = run_instance(ctx, cfg.seed, int(i), cfg);
    }, cfg.workers);
    res.all_pass = true;
    for (const auto& inst : res.instances) {
        if (inst.status == "skipped") {
            ++res.instances_skipped;
            res.all_pass = false;
            continue;
        }
        for (const auto& r : inst.records) {
            ++res.records_total;
            if (!r.pass) {
                ++res.records_failed;
                res.all_pass = false;
            }
        }
    }
    return res;
}

struct SweepRow {
    double hbar = 0;
    int n_max = 0;
    double mk_sq = 0, dist_sq = 0;
    double lower = 0, upper = 0;  // sandwich bounds including tolerance
    double gap = 0, tol = 0;
    bool feasible = true, pass = false;
    std::string note;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    bool all_pass = false;
    bool diffs_decreasing = false;
};

namespace detail {

// Mass-weighted coherent-projection loss of quantizing mu at truncation n_max.
inline double aggregate_leakage_estimate(const GridDensity& mu, int n_max, double hbar) {
    double acc = 0, mass = 0;
    for (std::size_t i = 0; i < mu.grid.size(); ++i) {
        double m = mu.values(static_cast<Eigen::Index>(i)) * mu.grid.weights[i];
        if (m <= 1e-15) continue;
        double al2 = 0;
        for (int k = 0; k < mu.grid.d; ++k) {
            double q = mu.grid.points[i][2 * k], p = mu.grid.points[i][2 * k + 1];
            al2 += (q * q + p * p) / (2 * hbar);
        }
        // Poisson tail beyond the cutoff, accumulated in log domain.
        double lp = -al2, s = std::exp(lp);
        for (int k = 1; k < n_max; ++k) {
            lp += std::log(al2) - std::log(double(k));
            s += std::exp(lp);
        }
        acc += m * std::max(0.0, 1.0 - s);
        mass += m;
    }
    return mass > 0 ? acc / mass : 0.0;
}

}  // namespace detail

// Quantized pair against the classical baseline across a descending hbar list.
// The truncation level is chosen per row so the quantization leakage estimate
// stays below 1e-3 unless the config pins n_max.
inline SweepResult run_hbar_sweep(const ExperimentConfig& cfg) {
    if (cfg.hbar_list.empty()) throw std::invalid_argument("run_hbar_sweep: empty hbar list");
    if (cfg.d != 1) throw std::invalid_argument("run_hbar_sweep: d = 1 only");
    for (std::size_t i = 1; i < cfg.hbar_list.size(); ++i)
        if (!(cfg.hbar_list[i] < cfg.hbar_list[i - 1]))
            throw std::invalid_argument("run_hbar_sweep: hbar list must be descending");
    SweepResult res;
    GridSpec gs = cfg.grid;
    for (double hb : cfg.hbar_list) {
        SweepRow row;
        row.hbar = hb;
        const double dh = cfg.d * hb;
        PhaseGrid grid = make_grid(cfg.d, gs.bounds, gs.counts);
        double s2 = hb / 2.0;  // quantized Gaussians at coherent width
        GridDensity f = gaussian_density(grid, {0.0, 0.0}, {s2, s2});
        GridDensity g = gaussian_density(grid, {1.0, 0.0}, {s2, s2});
        int n_max = cfg.n_max;
        if (n_max <= 0) {
            for (int cand : {12, 16, 20, 24, 28, 32}) {
                double lk = std::max(detail::aggregate_leakage_estimate(f, cand, hb),
                                     detail::aggregate_leakage_estimate(g, cand, hb));
                n_max = cand;
                if (lk <= 1e-3) break;
            }
        }
        row.n_max = n_max;
        try {
            BasisSpec basis(cfg.d, n_max, hb);
            CanonicalOps ops = build_canonical_ops(basis);
            Mat Tf = toeplitz_quantize(basis, f).rho;
            Mat Tg = toeplitz_quantize(basis, g).rho;
            RMat ccost = classical_cost(grid, grid);
            ExactResult cls = solve_exact(f, g, ccost, cfg.exact_gate);
            Mat C = quantum_cost(basis, ops);
            MkOptions mo = cfg.mk_opts;
            mo.eps_min = 1e-3 * max_eig(C);
            mo.final_cap = 300;
            MkResult mk = solve_mk(Tf, Tg, C, mo);
            row.dist_sq = cls.value_sq;
            row.mk_sq = mk.report.value_sq;
            row.gap = mk.report.gap;
            row.tol = 3.0 * (std::max(mk.report.gap, 0.0) +
                             op_norm(mk.duals.A) * mk.report.defect_R +
                             op_norm(mk.duals.B) * mk.report.defect_S);
            row.lower = row.dist_sq - 2 * dh - row.tol;
            row.upper = row.dist_sq + 2 * dh + row.tol;
            row.pass = row.mk_sq >= row.lower && row.mk_sq <= row.upper;
        } catch (const std::exception& ex) {
            row.feasible = false;
            row.pass = false;
            row.note = ex.what();
        }
        res.rows.push_back(row);
    }
    res.all_pass = true;
    res.diffs_decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : res.rows) {
        if (!r.pass) res.all_pass = false;
        double diff = std::abs(r.mk_sq - r.dist_sq);
        if (r.feasible && diff >= prev) res.diffs_decreasing = false;
        if (r.feasible) prev = diff;
    }
    return res;
}

// ---- report serialization ----

inline ordered_json solve_to_json(const SolveRecord& s) {
    ordered_json j;
    j["name"] = s.name;
    j["value_sq"] = s.value_sq;
    j["dual_lb"] = s.dual_lb;
    j["gap"] = s.gap;
    j["uncertainty"] = s.uncertainty;
    j["defect_R"] = s.defect_a;
    j["defect_S"] = s.defect_b;
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    j["eps_trace"] = s.eps_trace;
    j["wall_ms"] = s.wall_ms;
    return j;
}

inline ordered_json suite_to_json(const SuiteResult& res) {
    ordered_json j;
    j["suite"] = "inequalities";
    j["config"] = config_echo(res.config);
    j["instances"] = ordered_json::array();
    for (const auto& inst : res.instances) {
        ordered_json ji;
        ji["id"] = inst.id;
        ji["hbar"] = inst.hbar;
        ji["status"] = inst.status;
        if (!inst.skip_reason.empty()) ji["skip_reason"] = inst.skip_reason;
        ji["solves"] = ordered_json::array();
        for (const auto& s : inst.solves) ji["solves"].push_back(solve_to_json(s));
        ji["records"] = ordered_json::array();
        for (const auto& r : inst.records) {
            ordered_json jr;
            jr["name"] = r.name;
            jr["lhs"] = r.lhs;
            jr["rhs"] = r.rhs;
            jr["slack"] = r.slack;
            jr["tol"] = r.tol;
            jr["pass"] = r.pass;
            ji["records"].push_back(jr);
        }
        ji["wall_ms"] = inst.wall_ms;
        j["instances"].push_back(ji);
    }
    j["records_total"] = res.records_total;
    j["records_failed"] = res.records_failed;
    j["instances_skipped"] = res.instances_skipped;
    j["all_pass"] = res.all_pass;
    return j;
}

inline ordered_json sweep_to_json(const SweepResult& res) {
    ordered_json j;
    j["suite"] = "sweep";
    j["rows"] = ordered_json::array();
    for (const auto& r : res.rows) {
        ordered_json jr;
        jr["hbar"] = r.hbar;
        jr["n_max"] = r.n_max;
        jr["mk_sq"] = r.mk_sq;
        jr["dist_sq"] = r.dist_sq;
        jr["lower"] = r.lower;
        jr["upper"] = r.upper;
        jr["gap"] = r.gap;
        jr["tol"] = r.tol;
        jr["feasible"] = r.feasible;
        jr["pass"] = r.pass;
        if (!r.note.empty()) jr["note"] = r.note;
        j["rows"].push_back(jr);
    }
    j["all_pass"] = res.all_pass;
    j["diffs_decreasing"] = res.diffs_decreasing;
    return j;
}

// Remove wall-time keys recursively so identical-seed reports compare equal.
inline void scrub_timing(ordered_json& j) {
    if (j.is_object()) {
        j.erase("wall_ms");
        for (auto& [k, v] : j.items()) scrub_timing(v);
    } else if (j.is_array()) {
        for (auto& v : j) scrub_timing(v);
    }
}

inline void write_suite_csv(const SuiteResult& res, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_suite_csv: cannot open " + path);
    os << "instance,hbar,name,lhs,rhs,slack,tol,pass\n";
    os << std::setprecision(17);
    for (const auto& inst : res.instances)
        for (const auto& r : inst.records)
            os << inst.id << ',' << inst.hbar << ',' << r.name << ',' << r.lhs << ',' << r.rhs
               << ',' << r.slack << ',' << r.tol << ',' << (r.pass ? 1 : 0) << '\n';
}

inline void write_sweep_csv(const SweepResult& res, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    os << "hbar,mk_sq,dist_sq,lower,upper\n";
    os << std::setprecision(17);
    for (const auto& r : res.rows)
        os << r.hbar << ',' << r.mk_sq << ',' << r.dist_sq << ',' << r.lower << ',' << r.upper
           << '\n';
}

}  // namespace qot
