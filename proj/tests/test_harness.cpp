#include "test_util.hpp"

#include <filesystem>

using namespace qot;
using Catch::Approx;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.hbar_list = {0.25};
    cfg.n_max = 12;
    cfg.grid.bounds = {{-3.0, 3.0}, {-3.0, 3.0}};
    cfg.grid.counts = {10, 10};
    cfg.instances = 2;
    cfg.seed = 11;
    cfg.workers = 1;
    return cfg;
}

}  // namespace

TEST_CASE("quantization leakage estimate matches the measured aggregate", "[harness]") {
    PhaseGrid grid = make_grid(1, {{-1.5, 1.5}, {-1.5, 1.5}}, {9, 9});
    GridDensity mu = gaussian_density(grid, {0.2, -0.1}, {0.3, 0.4});
    BasisSpec basis(1, 14, 0.2);
    double est = detail::aggregate_leakage_estimate(mu, 14, 0.2);
    DensityMat dm = toeplitz_quantize(basis, mu);
    CHECK(est == Approx(dm.leakage).margin(1e-9));
    // More truncation levels can only shrink the estimate.
    CHECK(detail::aggregate_leakage_estimate(mu, 20, 0.2) <= est);
}

TEST_CASE("tiny inequality suite passes with no skips and is deterministic",
          "[harness]") {
    ExperimentConfig cfg = tiny_config();
    SuiteResult a = run_inequality_suite(cfg);
    REQUIRE(a.instances.size() == 2);
    CHECK(a.instances_skipped == 0);
    for (const auto& inst : a.instances) {
        INFO("instance " << inst.id << " status " << inst.status << " "
                         << inst.skip_reason);
        CHECK(inst.status == "done");
        CHECK(inst.solves.size() == 12);
        for (const auto& rec : inst.records) {
            INFO(rec.name << ": lhs=" << rec.lhs << " rhs=" << rec.rhs
                          << " slack=" << rec.slack << " tol=" << rec.tol);
            CHECK(rec.pass);
        }
    }
    CHECK(a.all_pass);
    CHECK(a.records_total > 0);
    CHECK(a.records_failed == 0);

    SuiteResult b = run_inequality_suite(cfg);
    ordered_json ja = suite_to_json(a);
    ordered_json jb = suite_to_json(b);
    scrub_timing(ja);
    scrub_timing(jb);
    CHECK(ja.dump() == jb.dump());
    CHECK(ja.dump().find("wall_ms") == std::string::npos);
}

TEST_CASE("suite report carries the config echo and per-record tolerances",
          "[harness]") {
    ExperimentConfig cfg = tiny_config();
    cfg.instances = 1;
    SuiteResult res = run_inequality_suite(cfg);
    ordered_json j = suite_to_json(res);
    CHECK(j["config"]["n_max"].get<int>() == 12);
    CHECK(j["config"]["hbar"].size() == 1);
    CHECK(j["instances"].size() == 1);
    const auto& recs = j["instances"][0]["records"];
    REQUIRE(recs.size() > 0);
    for (const auto& r : recs) {
        CHECK(r.contains("tol"));
        CHECK(r.contains("slack"));
    }
    auto path = std::filesystem::temp_directory_path() / "qot_suite_test.csv";
    write_suite_csv(res, path.string());
    std::ifstream is(path);
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "instance,hbar,name,lhs,rhs,slack,tol,pass");
    std::size_t rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == std::size_t(res.records_total));
    std::filesystem::remove(path);
}

TEST_CASE("config parsing maps every documented key", "[harness]") {
    ordered_json j = ordered_json::parse(R"({
        "hbar": [0.3, 0.15],
        "d": 1,
        "n_max": 10,
        "grid": {"bounds": [[-2.0, 2.0], [-1.5, 1.5]], "counts": [8, 6]},
        "eps_schedule": {"start": 0.5, "factor": 0.4, "min": 0.001},
        "tol": {"marginal": 1e-7, "block": 1e-9},
        "seed": 99,
        "instances": 4,
        "workers": 2
    })");
    ExperimentConfig cfg = config_from_json(j);
    CHECK(cfg.hbar_list == std::vector<double>{0.3, 0.15});
    CHECK(cfg.n_max == 10);
    CHECK(cfg.grid.bounds[1][0] == -1.5);
    CHECK(cfg.grid.counts == std::vector<int>{8, 6});
    CHECK(cfg.classical_sched.eps_start == 0.5);
    CHECK(cfg.classical_sched.factor == 0.4);
    CHECK(cfg.classical_sched.eps_min == 0.001);
    CHECK(cfg.classical_sched.marginal_tol == 1e-7);
    CHECK(cfg.mk_opts.tol == 1e-7);
    CHECK(cfg.e_opts.tol == 1e-7);
    CHECK(cfg.e_opts.block_tol == 1e-9);
    CHECK(cfg.seed == 99);
    CHECK(cfg.instances == 4);
    CHECK(cfg.workers == 2);
    // Scalar hbar form and defaults elsewhere.
    ExperimentConfig scal = config_from_json(ordered_json::parse(R"({"hbar": 0.2})"));
    CHECK(scal.hbar_list == std::vector<double>{0.2});
    CHECK(scal.n_max == 16);
    ordered_json echo = config_echo(cfg);
    CHECK(echo["seed"].get<std::uint64_t>() == 99);
    CHECK(echo["grid"]["counts"][1].get<int>() == 6);
}

TEST_CASE("single-row sweep picks its truncation and lands in the sandwich",
          "[harness]") {
    ExperimentConfig cfg;
    cfg.hbar_list = {0.4};
    cfg.n_max = 0;  // auto from the leakage estimate
    cfg.grid.bounds = {{-2.5, 3.5}, {-3.0, 3.0}};
    cfg.grid.counts = {12, 12};
    SweepResult res = run_hbar_sweep(cfg);
    REQUIRE(res.rows.size() == 1);
    const SweepRow& row = res.rows[0];
    INFO("note: " << row.note << " mk_sq=" << row.mk_sq << " dist_sq=" << row.dist_sq
                  << " bounds [" << row.lower << ", " << row.upper << "]");
    CHECK(row.feasible);
    CHECK(row.n_max == 12);
    CHECK(row.pass);
    CHECK(row.mk_sq >= row.lower);
    CHECK(row.mk_sq <= row.upper);
    CHECK(res.all_pass);

    ordered_json j = sweep_to_json(res);
    CHECK(j["rows"].size() == 1);
    auto path = std::filesystem::temp_directory_path() / "qot_sweep_test.csv";
    write_sweep_csv(res, path.string());
    std::ifstream is(path);
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "hbar,mk_sq,dist_sq,lower,upper");
    std::filesystem::remove(path);
}

TEST_CASE("sweep and suite reject malformed configurations", "[harness]") {
    ExperimentConfig cfg;
    cfg.hbar_list = {0.1, 0.2};  // ascending: rejected
    CHECK_THROWS_AS(run_hbar_sweep(cfg), std::invalid_argument);
    cfg.hbar_list.clear();
    CHECK_THROWS_AS(run_hbar_sweep(cfg), std::invalid_argument);
    CHECK_THROWS_AS(run_inequality_suite(cfg), std::invalid_argument);
    cfg.hbar_list = {0.2};
    cfg.d = 2;
    CHECK_THROWS_AS(run_hbar_sweep(cfg), std::invalid_argument);
    cfg.d = 1;
    cfg.instances = 0;
    CHECK_THROWS_AS(run_inequality_suite(cfg), std::invalid_argument);
}
