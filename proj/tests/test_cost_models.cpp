#include "test_util.hpp"

using namespace qot;
using Catch::Approx;

TEST_CASE("classical cost is the squared euclidean distance", "[cost_models]") {
    PhaseGrid g = make_grid(1, {{0.0, 2.0}, {0.0, 2.0}}, {2, 2});
    RMat c = classical_cost(g, g);
    CHECK(c(0, 0) == Approx(0.0));
    // points: (0.5,0.5),(0.5,1.5),(1.5,0.5),(1.5,1.5)
    CHECK(c(0, 3) == Approx(2.0));
    CHECK(c(1, 2) == Approx(2.0));
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("displaced cost floor sits exactly at hbar everywhere", "[cost_models]") {
    BasisSpec basis(1, 16, 0.15);
    CanonicalOps ops = build_canonical_ops(basis);
    RVec ref = eigh(semiquantum_cost(basis, ops, {0.0, 0.0})).evals;
    CHECK(ref(0) == Approx(0.15).margin(1e-12));
    for (auto z : std::vector<std::vector<double>>{{0.7, 0.2}, {-1.4, 0.9}, {2.0, 0.0}}) {
        RVec ev = eigh(semiquantum_cost(basis, ops, z)).evals;
        CHECK(ev(0) == Approx(0.15).margin(1e-12));
        // Conjugation by a unitary: the whole spectrum is point-independent.
        CHECK((ev - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("displaced cost reduces to the literal form at the origin", "[cost_models]") {
    BasisSpec basis(1, 10, 0.3);
    CanonicalOps ops = build_canonical_ops(basis);
    Mat a = semiquantum_cost(basis, ops, {0.0, 0.0});
    Mat b = semiquantum_cost_literal(basis, ops, {0.0, 0.0});
    CHECK(max_abs(a - b) < 1e-12);
}

TEST_CASE("displaced cost matches the reference matrix", "[cost_models]") {
    auto j = testutil::load_oracle("operators")["semiquantum_cost"];
    BasisSpec basis(1, j["n"].get<int>(), j["hbar"].get<double>());
    CanonicalOps ops = build_canonical_ops(basis);
    auto z = j["z"].get<std::vector<double>>();
    Mat expect = testutil::mat_from_json(j["c"]);
    CHECK(max_abs(semiquantum_cost(basis, ops, z) - expect) < 1e-9);
}

TEST_CASE("two-axis displaced cost adds per-axis blocks", "[cost_models]") {
    BasisSpec basis(2, 5, 0.4);
    CanonicalOps ops = build_canonical_ops(basis);
    Mat c = semiquantum_cost(basis, ops, {0.3, -0.1, 0.2, 0.5});
    CHECK(min_eig(c) == Approx(2 * 0.4).margin(1e-12));
    CHECK(c.rows() == 25);
}

TEST_CASE("pair cost matches the reference and its floor is 2 hbar", "[cost_models]") {
    auto j = testutil::load_oracle("quantum")["cost_matrix"];
    BasisSpec basis(1, j["n"].get<int>(), j["hbar"].get<double>());
    CanonicalOps ops = build_canonical_ops(basis);
    Mat expect = testutil::mat_from_json(j["C"]);
    Mat c = quantum_cost(basis, ops);
    CHECK(max_abs(c - expect) < 1e-9);

    BasisSpec b16(1, 16, 0.1);
    CanonicalOps ops16 = build_canonical_ops(b16);
    CHECK(min_eig(quantum_cost(b16, ops16)) == Approx(0.2).margin(1e-12));
    CHECK_THROWS_AS(quantum_cost(BasisSpec(1, 40, 0.1), ops16, 32), std::invalid_argument);
}

TEST_CASE("pair cost agrees with the literal form on the vacuum pair", "[cost_models]") {
    BasisSpec basis(1, 8, 0.2);
    CanonicalOps ops = build_canonical_ops(basis);
    Mat c = quantum_cost(basis, ops);
    Mat lit = quantum_cost_literal(basis, ops);
    Mat vac2 = Mat::Zero(64, 64);
    vac2(0, 0) = 1.0;
    CHECK(trace_re(c * vac2) == Approx(2 * 0.2).margin(1e-10));
    CHECK(trace_re(lit * vac2) == Approx(2 * 0.2).margin(1e-10));
}

TEST_CASE("cost field follows the grid order", "[cost_models]") {
    BasisSpec basis(1, 6, 0.3);
    CanonicalOps ops = build_canonical_ops(basis);
    PhaseGrid g = make_grid(1, {{-0.5, 0.5}, {-0.5, 0.5}}, {2, 2});
    auto field = cost_field(basis, ops, g);
    REQUIRE(field.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(max_abs(field[i] - semiquantum_cost(basis, ops, g.points[i])) < 1e-14);
}

TEST_CASE("regularized cost is monotone in eps and recovers the cost", "[cost_models]") {
    BasisSpec basis(1, 12, 0.2);
    CanonicalOps ops = build_canonical_ops(basis);
    Mat c = semiquantum_cost(basis, ops, {0.4, -0.3});
    Rng rng(3);
    Mat g(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int k = 0; k < 12; ++k) g(i, k) = cplx(rng.normal(), rng.normal());
    Mat q = g * g.adjoint();
    q /= trace_re(q);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e-8, 1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0}) {
        double v = trace_re(q * regularized(c, eps));
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK(std::abs(trace_re(q * regularized(c, 1e-8)) - trace_re(q * c)) < 1e-6);
    CHECK_THROWS_AS(regularized(c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(regularized(c, -1.0), std::invalid_argument);
}

TEST_CASE("quadratic-cost operator bounds hold on the truncated forms", "[cost_models]") {
    BasisSpec basis(1, 8, 0.25);
    for (double alpha : {1.0, 1.7}) {
        CostInequalityReport rep = check_cost_inequalities(
            basis, alpha, {0.3, -0.2}, {-0.4, 0.5}, {0.6, 0.1});
        for (double gap : rep.min_gap) CHECK(gap >= -1e-8);
    }
    CHECK_THROWS_AS(
        check_cost_inequalities(basis, 0.0, {0.1, 0.0}, {0.0, 0.0}, {0.2, 0.1}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        check_cost_inequalities(BasisSpec(1, 12, 0.25), 1.0, {0.1, 0.0}, {0.0, 0.0},
                                {0.2, 0.1}, 10),
        std::invalid_argument);
}
