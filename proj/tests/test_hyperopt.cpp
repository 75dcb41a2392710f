#include "test_util.hpp"

#include <srgp/data.hpp>
#include <srgp/hyperopt.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace srgp;
using namespace srgp::hyperopt;

namespace {

// K_a + sigma^2 I assembled from the oracle gram.
Matrix dense_system(const Matrix& X, const std::vector<double>& a, double noise) {
    return test::poly_gram(X, a) + noise * Matrix::Identity(X.rows(), X.rows());
}

std::vector<rla::SymEigFactor> exact_powers(const Matrix& X, int m) {
    const Matrix D = test::distances(X, X);
    std::vector<rla::SymEigFactor> out;
    Matrix P = D;
    for (int i = 1; i < m; ++i) {
        out.push_back(rla::exact_eig(P, X.rows()));
        P = P.cwiseProduct(D);
    }
    return out;
}

// Plain in-sample objective: y - (K_a - a0 I)(K_a + sigma^2 I)^{-1} y.
double oracle_objective(const Matrix& X, const Vector& y, const std::vector<double>& a, double noise) {
    const Matrix A = dense_system(X, a, noise);
    Matrix C = test::poly_gram(X, a);
    C.diagonal().array() -= a[0];
    const Vector r = y - C * Eigen::FullPivLU<Matrix>(A).solve(y);
    return r.norm() / std::sqrt(static_cast<double>(y.size()));
}

HyperState make_state(const Matrix& X, const Vector& y, std::vector<double> a, double noise, gp::Engine route,
                      rla::SketchParams params = {}, OptConfig opt = {}) {
    HyperState s(std::move(a), noise, route, params, opt);
    absorb(s, X, y);
    return s;
}

rla::SketchParams wide(Index n) {
    rla::SketchParams p;
    p.k = n;
    p.p = 1;
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("chained inverse, m = 2, matches a dense solve") {
    const Matrix X = test::random_matrix(20, 3, 101);
    const std::vector<double> a{0.7, 0.3};
    const double noise = 0.5;
    const ChainedInverse chain(exact_powers(X, 2), a, noise);
    const Matrix V = test::random_matrix(20, 3, 102);
    const Matrix oracle = Eigen::FullPivLU<Matrix>(dense_system(X, a, noise)).solve(V);
    CHECK(test::rel_diff(chain.apply(V), oracle) <= 1e-8);
    CHECK(chain.dim() == 20);
}

TEST_CASE("chained inverse, a = [1, 0, 0] and unit noise gives I / 2") {
    const Matrix X = test::random_matrix(12, 2, 103);
    const ChainedInverse chain(exact_powers(X, 3), {1.0, 0.0, 0.0}, 1.0);
    const Matrix I = Matrix::Identity(12, 12);
    CHECK((chain.apply(I) - 0.5 * I).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("chained inverse, m = 3, n <= 100, random feasible a") {
    for (const Index n : {Index{10}, Index{30}, Index{60}, Index{100}}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            CAPTURE(n);
            CAPTURE(seed);
            const Matrix X = test::random_matrix(n, 3, 200 + seed * 7 + static_cast<std::uint64_t>(n));
            const auto a = test::random_coefficients(3, seed * 31 + static_cast<std::uint64_t>(n));
            const double noise = 0.4;
            const Matrix A = dense_system(X, a, noise);
            const ChainedInverse chain(exact_powers(X, 3), a, noise);
            const Matrix V = test::random_matrix(n, 2, seed + 500);
            const Matrix got = chain.apply(V);
            const Matrix oracle = Eigen::FullPivLU<Matrix>(A).solve(V);
            const Eigen::JacobiSVD<Matrix> svd(A);
            const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
            CHECK(test::rel_diff(A * got, V) <= 1e-9 * cond);
            CHECK(test::rel_diff(got, oracle) <= 1e-7);
        }
    }
}

TEST_CASE("chained inverse validates its inputs") {
    const Matrix X = test::random_matrix(8, 2, 104);
    CHECK_THROWS_AS(ChainedInverse(exact_powers(X, 3), {1.0, 0.5}, 0.1), DimensionError);
}

TEST_CASE("default coefficients use the median pairwise distance") {
    const Matrix X = test::random_matrix(15, 2, 105);
    const Matrix D = test::distances(X, X);
    std::vector<double> off;
    for (Index i = 0; i < 15; ++i)
        for (Index j = i + 1; j < 15; ++j) off.push_back(D(i, j));
    std::sort(off.begin(), off.end());
    // 105 pairs: the median is the 53rd smallest
    const double med = off[off.size() / 2];
    const auto a = default_coefficients(X, 3);
    REQUIRE(a.size() == 3);
    CHECK(a[0] == 1.0);
    CHECK(a[1] == doctest::Approx(1.0 / med).epsilon(1e-13));
    CHECK(a[2] == doctest::Approx(1.0 / (med * med)).epsilon(1e-13));
    CHECK_THROWS_AS(default_coefficients(X, 1), ConfigError);
}

TEST_CASE("objective with only a0 is ||y|| / sqrt(n)") {
    const Matrix X = test::random_matrix(25, 3, 106);
    const Vector y = test::random_matrix(25, 1, 107);
    for (const auto route : {gp::Engine::NRMF, gp::Engine::BRMF, gp::Engine::SRMF}) {
        const auto s = make_state(X, y, {0.3, 0.2, 0.1}, 0.2, route, wide(25));
        CHECK(training_objective(s, {0.3, 0.0, 0.0}) == doctest::Approx(y.norm() / 5.0).epsilon(1e-12));
    }
}

TEST_CASE("objective matches the dense oracle on every route at full width") {
    const Matrix X = test::random_matrix(40, 3, 108);
    const Vector y = test::random_matrix(40, 1, 109);
    const std::vector<double> a{0.5, 0.8, 0.2};
    const double expected = oracle_objective(X, y, a, 0.3);
    for (const auto route : {gp::Engine::NRMF, gp::Engine::BRMF, gp::Engine::SRMF}) {
        CAPTURE(gp::to_string(route));
        const auto s = make_state(X, y, a, 0.3, route, wide(40));
        CHECK(training_objective(s, a) == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("predict matches a dense poly GP") {
    const Matrix X = test::random_matrix(30, 2, 110);
    const Vector y = test::random_matrix(30, 1, 111);
    const Matrix Z = test::random_matrix(6, 2, 112);
    const std::vector<double> a{0.6, 0.5, 0.1};
    const Matrix Dz = test::distances(X, Z);
    const Matrix Kx = 0.5 * Dz + 0.1 * Dz.cwiseProduct(Dz);
    Matrix K = test::poly_gram(X, a);
    const auto oracle = test::dense_gp(K, Kx, Vector::Constant(6, 0.6), y, 0.25);
    for (const auto route : {gp::Engine::NRMF, gp::Engine::SRMF}) {
        const auto s = make_state(X, y, a, 0.25, route, wide(30));
        const auto got = predict(s, Z);
        CHECK(test::rel_diff(got.mean, oracle.mean) <= 1e-8);
    }
}

TEST_CASE("optimizer recovers the generating coefficients' objective") {
    const Index n = 100;
    const std::vector<double> a_star{0.1, 2.0, 0.5};
    const double noise = 0.1;
    const Matrix X = test::random_matrix(n, 2, 113) * 0.5;
    // Sample from the PSD part of K_{a*}; distance kernels are indefinite.
    const Eigen::SelfAdjointEigenSolver<Matrix> es(test::poly_gram(X, a_star));
    const Vector lam = es.eigenvalues().cwiseMax(0.0);
    const Vector z = test::random_matrix(n, 1, 114);
    const Vector noise_draw = test::random_matrix(n, 1, 115) * std::sqrt(noise);
    const Vector y = es.eigenvectors() * (lam.cwiseSqrt().asDiagonal() * z) + noise_draw;

    OptConfig opt;
    opt.max_iters = 200;
    const auto s = make_state(X, y, default_coefficients(X, 3), noise, gp::Engine::NRMF, {}, opt);
    const auto res = optimize_hypers(s);
    const double target = training_objective(s, a_star);
    CHECK(res.objective <= 1.1 * target);
    CHECK(res.objective <= res.start_objective);
}

TEST_CASE("optimizer invariants: feasibility, monotone trace, no worse than start, determinism") {
    const Matrix X = test::random_matrix(60, 3, 116);
    const Vector y = test::random_matrix(60, 1, 117);
    rla::SketchParams params;
    params.k = 20;
    params.p = 5;
    const auto s = make_state(X, y, {1.0, 0.5, 0.1}, 0.2, gp::Engine::SRMF, params);
    const auto r1 = optimize_hypers(s);
    const auto r2 = optimize_hypers(s);

    CHECK(r1.objective <= r1.start_objective);
    CHECK(r1.iterations <= s.opt.max_iters);
    REQUIRE(!r1.trace.empty());
    double prev = r1.start_objective;
    for (const auto& row : r1.trace) {
        for (const double v : row.a) CHECK(v >= kCoefficientFloor);
        CHECK(row.objective <= prev);
        prev = row.objective;
    }
    for (const double v : r1.a) CHECK(v >= kCoefficientFloor);
    CHECK(r1.a == r2.a);
    CHECK(r1.objective == r2.objective);
    CHECK(r1.evaluations == r2.evaluations);
}

TEST_CASE("optimizer handles boundary starts and zero outputs") {
    const Matrix X = test::random_matrix(30, 2, 118);
    const Vector y = test::random_matrix(30, 1, 119);
    const auto s = make_state(X, y, {0.5, 0.0, 0.0}, 0.2, gp::Engine::NRMF);
    const auto r = optimize_hypers(s);
    CHECK(std::isfinite(r.objective));
    CHECK(r.objective <= r.start_objective);
    for (const double v : r.a) CHECK(v >= 0.0);

    const auto zero = make_state(X, Vector::Zero(30), {1.0, 0.5, 0.1}, 0.2, gp::Engine::NRMF);
    const auto rz = optimize_hypers(zero);
    CHECK(rz.objective == 0.0);
    for (const double v : rz.a) CHECK(std::isfinite(v));
}

TEST_CASE("optimizing never touches the tracked distance factors") {
    const Matrix X = test::random_matrix(50, 3, 120);
    const Vector y = test::random_matrix(50, 1, 121);
    rla::SketchParams params;
    params.k = 15;
    params.p = 5;
    HyperState s(std::vector<double>{1.0, 0.4, 0.1}, 0.2, gp::Engine::SRMF, params);
    absorb(s, X.topRows(25), y.head(25));
    absorb(s, X.bottomRows(25), y.tail(25));
    const auto before = s.d_powers.factors;
    const auto r = optimize_hypers(s);
    s.a = r.a;
    REQUIRE(s.d_powers.factors.size() == before.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(test::bit_equal(s.d_powers.factors[i].U, before[i].U));
        CHECK(test::bit_equal(s.d_powers.factors[i].S, before[i].S));
    }
}

TEST_CASE("holdout objective is finite and deterministic") {
    const Matrix X = test::random_matrix(40, 2, 122);
    const Vector y = test::random_matrix(40, 1, 123);
    OptConfig opt;
    opt.holdout_fraction = 0.25;
    const auto s = make_state(X, y, {1.0, 0.5, 0.1}, 0.2, gp::Engine::NRMF, {}, opt);
    const double a = training_objective(s, s.a);
    CHECK(std::isfinite(a));
    CHECK(a == training_objective(s, s.a));
    OptConfig bad;
    bad.holdout_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sequential distance factors stay within the sketch error bound") {
    const Index n = 60;
    const Matrix X = test::random_matrix(n, 3, 124);
    rla::SketchParams params;
    params.k = 12;
    params.p = 5;
    params.seed = 9;
    HyperState s(std::vector<double>{1.0, 0.5, 0.1}, 0.2, gp::Engine::SRMF, params);
    double bound1 = 0.0, bound2 = 0.0;
    const Matrix D = test::distances(X, X);
    for (Index start = 0; start < n; start += 20) {
        update_distance_factors(s, X.middleRows(start, 20));
        const Index t = start + 20;
        const Matrix Dt = D.topLeftCorner(t, t);
        const Matrix D2t = Dt.cwiseProduct(Dt);
        bound1 += 2.0 * rla::sketch_error_term(Dt, params);
        bound2 += 2.0 * rla::sketch_error_term(D2t, params);
        const auto& f1 = s.d_powers.factors[0];
        const auto& f2 = s.d_powers.factors[1];
        const Matrix E1 = Dt - f1.U * f1.S.asDiagonal() * f1.U.transpose();
        const Matrix E2 = D2t - f2.U * f2.S.asDiagonal() * f2.U.transpose();
        CHECK(rla::sym_spectral_norm(E1) <= bound1 + 1e-9);
        CHECK(rla::sym_spectral_norm(E2) <= bound2 + 1e-9);
    }
    CHECK(s.d_powers.n == n);
}

TEST_CASE("distance powers with few distinct points are tracked exactly") {
    // Five distinct locations repeated: rank(D^i) <= 5 < k.
    const Matrix base = test::random_matrix(5, 3, 125);
    Matrix X(60, 3);
    for (Index i = 0; i < 60; ++i) X.row(i) = base.row((i * 7) % 5);
    rla::SketchParams params;
    params.k = 12;
    params.p = 5;
    HyperState s(std::vector<double>{1.0, 0.5, 0.1}, 0.2, gp::Engine::SRMF, params);
    for (Index start = 0; start < 60; start += 20) update_distance_factors(s, X.middleRows(start, 20));
    const Matrix D = test::distances(X, X);
    const auto& f1 = s.d_powers.factors[0];
    const auto& f2 = s.d_powers.factors[1];
    CHECK(rla::sym_spectral_norm(D - f1.U * f1.S.asDiagonal() * f1.U.transpose()) <= 1e-6);
    CHECK(rla::sym_spectral_norm(D.cwiseProduct(D) - f2.U * f2.S.asDiagonal() * f2.U.transpose()) <= 1e-6);
}

TEST_CASE("modes: parsing and schedules") {
    CHECK(parse_mode("none") == ModeKind::NoOpt);
    CHECK(parse_mode("Continuous") == ModeKind::Continuous);
    CHECK(parse_mode("initial") == ModeKind::Initial);
    CHECK(parse_mode("HYBRID") == ModeKind::Hybrid);
    CHECK_THROWS_AS(parse_mode("sometimes"), ConfigError);
    for (const auto k : {ModeKind::NoOpt, ModeKind::Continuous, ModeKind::Initial, ModeKind::Hybrid})
        CHECK(parse_mode(to_string(k)) == k);

    const Mode none{ModeKind::NoOpt, 10}, cont{ModeKind::Continuous, 10}, init{ModeKind::Initial, 3};
    CHECK(!none.optimizes_at(0));
    CHECK(cont.optimizes_at(1000));
    CHECK(init.optimizes_at(2));
    CHECK(!init.optimizes_at(3));
}

namespace {

std::vector<Batch> smooth_stream(Index rows, Index b, std::uint64_t seed) {
    const auto ds = data::synthetic_smooth(rows, 3, seed);
    data::StreamPlan plan;
    plan.batch_size = b;
    return data::make_stream(ds, plan);
}

}  // namespace

TEST_CASE("run_mode schedules: frozen coefficients after n_steps, none never moves") {
    const auto stream = smooth_stream(300, 50, 126);
    rla::SketchParams params;
    params.k = 20;
    params.p = 5;
    OptConfig opt;
    opt.max_iters = 15;

    const auto none = run_mode({ModeKind::NoOpt, 2}, gp::Engine::NRMF, stream, 0.1, params, opt);
    REQUIRE(none.metrics.batches.size() == stream.size());
    for (const auto& rec : none.metrics.batches) CHECK(rec.coefficients == none.metrics.batches[0].coefficients);
    CHECK(none.trace.empty());

    const auto init = run_mode({ModeKind::Initial, 2}, gp::Engine::SRMF, stream, 0.1, params, opt);
    const auto& recs = init.metrics.batches;
    for (std::size_t t = 2; t < recs.size(); ++t) CHECK(recs[t].coefficients == recs[1].coefficients);
    CHECK(init.final_coefficients == recs.back().coefficients);
    for (const auto& row : init.trace) CHECK(row.batch < 2);

    const auto hybrid = run_mode({ModeKind::Hybrid, 2}, gp::Engine::SRMF, stream, 0.1, params, opt);
    CHECK(hybrid.final_coefficients == init.final_coefficients);
    for (const auto& rec : hybrid.metrics.batches) CHECK(std::isfinite(rec.predicted() ? rec.rmse : 0.0));

    const auto again = run_mode({ModeKind::Initial, 2}, gp::Engine::SRMF, stream, 0.1, params, opt);
    for (std::size_t t = 0; t < recs.size(); ++t) {
        CHECK(again.metrics.batches[t].coefficients == recs[t].coefficients);
        if (recs[t].predicted()) CHECK(again.metrics.batches[t].rmse == recs[t].rmse);
    }
}

TEST_CASE("trace file lists batch, iteration, objective and coefficients") {
    const auto dir = std::filesystem::temp_directory_path() / "srgp_test_trace";
    std::filesystem::create_directories(dir);
    const auto path = dir / "trace.csv";
    write_trace(path.string(), {{0, 1, 2.5, {1.0, 0.5}}, {1, 2, 2.0, {0.9, 0.4}}});
    const std::string text = slurp(path);
    std::istringstream lines(text);
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header.rfind("batch,iteration,objective", 0) == 0);
    CHECK(first.rfind("0,1,2.5", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("without optimization, self-labeled errors compound") {
    const auto dir = std::filesystem::temp_directory_path() / "srgp_test_noopt";
    std::filesystem::create_directories(dir);
    const auto path = dir / "abalone.csv";
    data::write_synthetic_abalone(path, 1000, 127);
    const auto [ds, _] = data::standardize(data::load_csv(path, data::abalone_schema()), 100);
    data::StreamPlan plan;
    plan.batch_size = 100;
    const auto stream = data::make_stream(ds, plan);
    rla::SketchParams params;
    params.k = 30;
    params.p = 5;
    OptConfig opt;

    const auto none = run_mode({ModeKind::NoOpt, 10}, gp::Engine::NRMF, stream, 0.3, params, opt);
    const auto init = run_mode({ModeKind::Initial, 10}, gp::Engine::NRMF, stream, 0.3, params, opt);
    const double last_none = none.metrics.batches.back().rmse;
    const double last_init = init.metrics.batches.back().rmse;
    CAPTURE(last_none);
    CAPTURE(last_init);
    CHECK(last_none >= 2.0 * last_init);
    std::filesystem::remove_all(dir);
}
