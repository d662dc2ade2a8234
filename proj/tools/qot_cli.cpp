// Command-line front end: classical, semiquantum, and quantum transport
// distances plus the report suites, configured by JSON.
#include "qot/metrics_harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using qot::ordered_json;

ordered_json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config: " + path);
    ordered_json j;
    is >> j;
    return j;
}

qot::PhaseGrid grid_from_json(const ordered_json& j, int d) {
    if (!j.contains("grid")) {
        std::vector<std::array<double, 2>> bounds(std::size_t(2 * d), {-4.0, 4.0});
        return qot::make_grid(d, bounds, std::vector<int>(std::size_t(2 * d), 24));
    }
    const auto& g = j["grid"];
    std::vector<std::array<double, 2>> bounds;
    for (const auto& b : g["bounds"]) bounds.push_back({b[0].get<double>(), b[1].get<double>()});
    return qot::make_grid(d, bounds, g["counts"].get<std::vector<int>>());
}

qot::GridDensity mixture_density(const ordered_json& comps, const qot::PhaseGrid& grid) {
    qot::RVec raw = qot::RVec::Zero(static_cast<Eigen::Index>(grid.size()));
    for (const auto& c : comps) {
        std::vector<double> mean = c["mean"].get<std::vector<double>>();
        if (mean.size() != std::size_t(2 * grid.d))
            throw std::invalid_argument("mixture component mean needs 2d entries");
        double sig = c["sigma"].get<double>();
        double wgt = c.value("weight", 1.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double e = 0;
            for (int k = 0; k < 2 * grid.d; ++k) {
                double dk = grid.points[i][k] - mean[std::size_t(k)];
                e += dk * dk;
            }
            raw(static_cast<Eigen::Index>(i)) += wgt * std::exp(-e / (2 * sig * sig));
        }
    }
    return qot::make_density(grid, raw, true);
}

qot::GridDensity density_from_json(const ordered_json& j, const qot::PhaseGrid& grid) {
    if (j.contains("mixture")) return mixture_density(j["mixture"], grid);
    if (j.contains("gaussian")) {
        const auto& g = j["gaussian"];
        return qot::gaussian_density(grid, g["mean"].get<std::vector<double>>(),
                                     g["sigma2"].get<std::vector<double>>());
    }
    throw std::invalid_argument("density spec needs \"mixture\" or \"gaussian\"");
}

qot::Mat state_from_json(const ordered_json& j, const qot::BasisSpec& basis,
                         const qot::CanonicalOps& ops, const qot::PhaseGrid& grid,
                         qot::Rng& rng) {
    std::string kind = j.value("kind", "vacuum");
    const auto N = basis.dim();
    if (kind == "vacuum") {
        qot::Mat r = qot::Mat::Zero(N, N);
        r(0, 0) = 1.0;
        return r;
    }
    if (kind == "coherent") {
        qot::CoherentState cs = qot::coherent_state(basis, j["z"].get<std::vector<double>>());
        return cs.v * cs.v.adjoint();
    }
    if (kind == "gibbs") return qot::gibbs_state(ops.Hosc, j["beta"].get<double>());
    if (kind == "pure_random") return qot::detail::random_pure(rng, N);
    if (kind == "toeplitz")
        return qot::toeplitz_quantize(basis, mixture_density(j["mixture"], grid)).rho;
    throw std::invalid_argument("unknown state kind: " + kind);
}

void emit(const ordered_json& j, const std::string& out, const std::string& format) {
    std::string text;
    if (format == "csv") {
        std::ostringstream os;
        os << "key,value\n" << std::setprecision(17);
        for (const auto& [k, v] : j.items()) {
            if (v.is_array()) {
                os << k << ',';
                for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i].dump();
                os << '\n';
            } else {
                os << k << ',' << v.dump() << '\n';
            }
        }
        text = os.str();
    } else {
        text = j.dump(2) + "\n";
    }
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot open output: " + out);
        os << text;
    }
}

ordered_json report_json(const qot::SolveRecord& s) {
    ordered_json j = qot::solve_to_json(s);
    j.erase("name");
    return j;
}

struct Common {
    std::string config, out, format = "json";
    std::uint64_t seed = 7;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
    auto* o = sub->add_option("--config", c.config, "JSON config file");
    if (config_required) o->required();
    sub->add_option("--seed", c.seed, "RNG seed override");
    sub->add_option("--out", c.out, "output file (suites: output directory)");
    sub->add_option("--format", c.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transport distances between phase-space densities and oscillator states"};
    app.require_subcommand(1);

    Common c_classical, c_mk, c_e, c_leg, c_quant, c_hus, c_suite, c_sweep;
    bool mk_fast = false, e_fast = false;

    auto* sc = app.add_subcommand("classical", "quadratic transport between two grid densities");
    add_common(sc, c_classical, true);
    std::string classical_solver = "exact";
    sc->add_option("--solver", classical_solver, "exact or entropic")
        ->check(CLI::IsMember({"exact", "entropic"}));

    auto* sm = app.add_subcommand("mk", "transport distance between two states");
    add_common(sm, c_mk, true);
    sm->add_flag("--fast", mk_fast, "direct product-coupling value (a marginal must be pure)");

    auto* se = app.add_subcommand("e", "transport distance between a density and a state");
    add_common(se, c_e, true);
    se->add_flag("--fast", e_fast, "direct disintegration value (state must be pure)");

    auto* sl = app.add_subcommand("legendre", "ground-state transform of a dual potential");
    add_common(sl, c_leg, true);

    auto* sq = app.add_subcommand("quantize", "coherent-projection quantization of a density");
    add_common(sq, c_quant, true);

    auto* sh = app.add_subcommand("husimi", "phase-space density of a state");
    add_common(sh, c_hus, true);

    auto* ss = app.add_subcommand("suite", "seeded inequality suite");
    add_common(ss, c_suite, false);

    auto* sw = app.add_subcommand("sweep", "quantized pair against the classical baseline");
    add_common(sw, c_sweep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (app.got_subcommand(sc)) {
            ordered_json cfg = load_json(c_classical.config);
            int d = cfg.value("d", 1);
            qot::PhaseGrid grid = grid_from_json(cfg, d);
            qot::GridDensity f = density_from_json(cfg.at("f"), grid);
            qot::GridDensity g = density_from_json(cfg.at("g"), grid);
            qot::RMat cost = qot::classical_cost(grid, grid);
            ordered_json out;
            if (classical_solver == "exact") {
                qot::ExactResult r = qot::solve_exact(f, g, cost, grid.size());
                out["value_sq"] = r.value_sq;
                out["dual_lb"] = r.value_sq;
                out["gap"] = 0.0;
                out["margin"] = r.duals.margin;
                emit(out, c_classical.out, c_classical.format);
                return 0;
            }
            qot::EpsSchedule sched;
            if (cfg.contains("eps_schedule")) {
                const auto& e = cfg["eps_schedule"];
                if (e.contains("start")) sched.eps_start = e["start"].get<double>();
                if (e.contains("factor")) sched.factor = e["factor"].get<double>();
                if (e.contains("min")) sched.eps_min = e["min"].get<double>();
            }
            qot::EntropicResult r = qot::solve_entropic(f, g, cost, sched);
            out["value_sq"] = r.report.value_sq;
            out["dual_lb"] = r.report.dual_lb;
            out["gap"] = r.report.gap;
            out["iterations"] = r.report.iterations;
            out["defect_f"] = r.report.defect_f;
            out["defect_g"] = r.report.defect_g;
            out["eps_trace"] = r.report.eps_trace;
            out["converged"] = r.report.converged;
            emit(out, c_classical.out, c_classical.format);
            return r.report.converged ? 0 : 3;
        }

        if (app.got_subcommand(sm)) {
            ordered_json cfg = load_json(c_mk.config);
            qot::BasisSpec basis(cfg.value("d", 1), cfg.value("n_max", 16),
                                 cfg.value("hbar", 0.1));
            qot::CanonicalOps ops = qot::build_canonical_ops(basis);
            qot::PhaseGrid grid = grid_from_json(cfg, basis.d);
            qot::Rng rng(c_mk.seed);
            qot::Mat R = state_from_json(cfg.at("R"), basis, ops, grid, rng);
            qot::Mat S = state_from_json(cfg.at("S"), basis, ops, grid, rng);
            qot::Mat C = qot::quantum_cost(basis, ops);
            qot::MkResult r = mk_fast ? qot::mk_rank1_fast_path(R, S, C)
                                      : qot::solve_mk(R, S, C);
            qot::SolveRecord rec = qot::detail::record_mk("mk", r);
            emit(report_json(rec), c_mk.out, c_mk.format);
            return rec.converged ? 0 : 3;
        }

        if (app.got_subcommand(se)) {
            ordered_json cfg = load_json(c_e.config);
            qot::BasisSpec basis(cfg.value("d", 1), cfg.value("n_max", 16),
                                 cfg.value("hbar", 0.1));
            qot::CanonicalOps ops = qot::build_canonical_ops(basis);
            qot::PhaseGrid grid = grid_from_json(cfg, basis.d);
            qot::Rng rng(c_e.seed);
            qot::GridDensity f = density_from_json(cfg.at("f"), grid);
            qot::Mat R = state_from_json(cfg.at("R"), basis, ops, grid, rng);
            std::vector<qot::Mat> costs = qot::cost_field(basis, ops, grid);
            qot::ERes r = e_fast ? qot::e_rank1_fast_path(f, R, costs)
                                 : qot::solve_e(f, R, costs);
            qot::SolveRecord rec = qot::detail::record_e("e", r);
            emit(report_json(rec), c_e.out, c_e.format);
            return rec.converged ? 0 : 3;
        }

        if (app.got_subcommand(sl)) {
            ordered_json cfg = load_json(c_leg.config);
            qot::BasisSpec basis(cfg.value("d", 1), cfg.value("n_max", 32),
                                 cfg.value("hbar", 0.1));
            qot::CanonicalOps ops = qot::build_canonical_ops(basis);
            qot::PhaseGrid grid = grid_from_json(cfg, basis.d);
            std::string bkind = cfg.contains("B") ? cfg["B"].value("kind", "harmonic")
                                                  : std::string("harmonic");
            const auto N = basis.dim();
            qot::Mat B = qot::Mat::Zero(N, N);
            if (bkind == "harmonic") {
                for (int k = 0; k < basis.d; ++k)
                    B += 0.5 * (ops.X[k] * ops.X[k] + ops.P[k] * ops.P[k]);
                B -= 0.5 * basis.d * basis.hbar * qot::Mat::Identity(N, N);
            } else if (bkind != "zero") {
                throw std::invalid_argument("unknown potential kind: " + bkind);
            }
            qot::GroundStateField field = qot::legendre_sq(B, grid, ops);
            if (c_leg.format == "csv") {
                if (c_leg.out.empty())
                    throw std::invalid_argument("legendre --format csv needs --out");
                qot::export_field_csv(field, c_leg.out);
                return 0;
            }
            ordered_json out;
            out["points"] = ordered_json::array();
            for (std::size_t i = 0; i < grid.size(); ++i) {
                ordered_json p;
                p["z"] = grid.points[i];
                p["lambda0"] = field.lambda0(static_cast<Eigen::Index>(i));
                p["gap"] = field.gap(static_cast<Eigen::Index>(i));
                p["a"] = field.a(static_cast<Eigen::Index>(i));
                out["points"].push_back(p);
            }
            emit(out, c_leg.out, "json");
            return 0;
        }

        if (app.got_subcommand(sq)) {
            ordered_json cfg = load_json(c_quant.config);
            qot::BasisSpec basis(cfg.value("d", 1), cfg.value("n_max", 16),
                                 cfg.value("hbar", 0.1));
            qot::PhaseGrid grid = grid_from_json(cfg, basis.d);
            qot::GridDensity mu = density_from_json(cfg, grid);
            qot::DensityMat dm = qot::toeplitz_quantize(basis, mu);
            qot::DensityReport rep = qot::validate_density(dm.rho);
            ordered_json out;
            out["leakage"] = dm.leakage;
            out["trace_defect"] = dm.trace_defect;
            out["min_eig"] = rep.min_eig;
            out["is_density"] = rep.is_density;
            emit(out, c_quant.out, c_quant.format);
            return 0;
        }

        if (app.got_subcommand(sh)) {
            ordered_json cfg = load_json(c_hus.config);
            qot::BasisSpec basis(cfg.value("d", 1), cfg.value("n_max", 16),
                                 cfg.value("hbar", 0.1));
            qot::CanonicalOps ops = qot::build_canonical_ops(basis);
            qot::PhaseGrid grid = grid_from_json(cfg, basis.d);
            qot::Rng rng(c_hus.seed);
            qot::Mat R = state_from_json(cfg.at("R"), basis, ops, grid, rng);
            qot::GridDensity h = qot::husimi(basis, R, grid);
            if (c_hus.format == "csv") {
                if (c_hus.out.empty()) throw std::invalid_argument("husimi --format csv needs --out");
                qot::export_density_csv(h, c_hus.out);
                return 0;
            }
            ordered_json out;
            out["values"] = std::vector<double>(h.values.data(), h.values.data() + h.values.size());
            out["norm_defect"] = h.norm_defect;
            out["clipped"] = h.clipped;
            emit(out, c_hus.out, "json");
            return 0;
        }

        if (app.got_subcommand(ss) || app.got_subcommand(sw)) {
            bool is_suite = app.got_subcommand(ss);
            const Common& com = is_suite ? c_suite : c_sweep;
            qot::ExperimentConfig cfg;
            bool pinned_n = false;
            if (!com.config.empty()) {
                ordered_json raw = load_json(com.config);
                cfg = qot::config_from_json(raw);
                pinned_n = raw.contains("n_max");
            }
            if (!is_suite) {
                if (com.config.empty()) cfg.hbar_list = {0.4, 0.2, 0.1};
                if (!pinned_n) cfg.n_max = 0;  // per-row truncation from the leakage estimate
            }
            if (ss->count("--seed") || sw->count("--seed")) cfg.seed = com.seed;
            std::filesystem::path dir = com.out.empty() ? "." : com.out;
            std::filesystem::create_directories(dir);
            if (is_suite) {
                qot::SuiteResult res = qot::run_inequality_suite(cfg);
                ordered_json j = qot::suite_to_json(res);
                std::ofstream(dir / "report.json") << j.dump(2) << "\n";
                qot::write_suite_csv(res, (dir / "records.csv").string());
                std::cout << "instances " << res.instances.size() << ", skipped "
                          << res.instances_skipped << ", records " << res.records_total
                          << ", failed " << res.records_failed << ", all_pass "
                          << (res.all_pass ? "true" : "false") << "\n";
                if (res.records_failed > 0) return 4;
                if (res.instances_skipped > 0) return 3;
                return 0;
            }
            qot::SweepResult res = qot::run_hbar_sweep(cfg);
            ordered_json j = qot::sweep_to_json(res);
            std::ofstream(dir / "sweep.json") << j.dump(2) << "\n";
            qot::write_sweep_csv(res, (dir / "sweep.csv").string());
            std::cout << "rows " << res.rows.size() << ", all_pass "
                      << (res.all_pass ? "true" : "false") << ", diffs_decreasing "
                      << (res.diffs_decreasing ? "true" : "false") << "\n";
            bool infeasible = false;
            for (const auto& r : res.rows) infeasible |= !r.feasible;
            if (!res.all_pass) return 4;
            if (infeasible) return 3;
            return 0;
        }
    } catch (const nlohmann::json::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "validation error: " << ex.what() << "\n";
        return 2;
    } catch (const std::domain_error& ex) {
        std::cerr << "validation error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "solver error: " << ex.what() << "\n";
        return 3;
    }
    return 2;
}
