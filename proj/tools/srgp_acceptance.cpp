// Acceptance runner: one PASS/FAIL line per criterion. Every threshold is a
// named constant below; nothing is read from the environment.

#include <srgp/bench.hpp>
#include <srgp/data.hpp>
#include <srgp/gp.hpp>
#include <srgp/hyperopt.hpp>
#include <srgp/kernels.hpp>
#include <srgp/rla.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace srgp;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr int kBoundSeeds = 100;
constexpr int kBoundBatches = 10;
constexpr Index kBoundBatchSize = 50;
constexpr int kBoundK = 10;
constexpr int kBoundP = 5;
constexpr double kBoundMinPass = 0.95;
constexpr double kBoundMaxSeconds = 120.0;
// Criterion 2
constexpr Index kEquivN = 200;
constexpr Index kEquivBatch = 50;
constexpr double kEquivRelTol = 1e-5;
constexpr double kEquivMaxSeconds = 30.0;
// Criterion 3
constexpr double kWoodburyRelTol = 1e-7;
constexpr double kWoodburyMaxSeconds = 10.0;
// Criteria 4 and 5
constexpr Index kTableOneSamples = 4000;
constexpr Index kBatchSize = 100;
constexpr double kSrmfMaxExponent = 1.5;
constexpr double kNrmfMinExponent = 2.0;
constexpr double kTableOneMaxSeconds = 15.0 * 60.0;
constexpr double kRmseRatioMax = 1.5;
// Criteria 6 and 7
constexpr Index kPolySamples = 2000;
constexpr int kInitialSteps = 10;
constexpr double kNoOptOverInitialMin = 5.0;
constexpr double kContinuousTimeRatioMin = 10.0;
constexpr double kHybridRmseRatioMax = 1.2;
// Criterion 8
constexpr double kOrthoTol = 1e-10;
constexpr double kInvariantMaxSeconds = 300.0;

struct Outcome {
    Outcome(int i, std::string t) : id(i), title(std::move(t)) {}

    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = z(gen);
    return M;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// ---------------------------------------------------------------------------

Outcome criterion_bounds(const fs::path& out) {
    const auto t0 = Clock::now();
    bench::BoundsConfig cfg;
    cfg.seeds = kBoundSeeds;
    cfg.batches = kBoundBatches;
    cfg.batch_size = kBoundBatchSize;
    cfg.sketch.k = kBoundK;
    cfg.sketch.p = kBoundP;
    const auto report = bench::verify_bounds(cfg);
    bench::write_bounds(report, out / "bounds");
    Outcome o{1, "sequential factor error within the accumulated sketch bound"};
    o.seconds = since(t0);
    o.pass = report.pass_fraction() >= kBoundMinPass && o.seconds < kBoundMaxSeconds;
    o.detail = std::to_string(report.runs - report.violating_runs) + "/" + std::to_string(report.runs) +
               " runs within bound (need >= " + fmt("%.0f%%", 100 * kBoundMinPass) + "), max error/bound " +
               fmt("%.3g", report.max_ratio) + ", n=" + std::to_string(kBoundBatches * kBoundBatchSize);
    return o;
}

Outcome criterion_equivalence() {
    const auto t0 = Clock::now();
    const auto train = data::synthetic_smooth(kEquivN, 3, 11);
    const auto test = data::synthetic_smooth(40, 3, 12);
    rla::SketchParams wide;
    wide.k = static_cast<int>(kEquivN);
    wide.p = 10;
    wide.seed = 5;

    double worst = 0.0;
    const std::vector<kernels::KernelSpec> specs{kernels::squared_exponential(1.5, 1.0, 0.1),
                                                 kernels::poly_distance({0.5, 0.4, 0.1}, 0.3)};
    for (const auto& spec : specs) {
        std::vector<gp::Prediction> preds;
        for (const auto engine : {gp::Engine::NRMF, gp::Engine::BRMF, gp::Engine::SRMF}) {
            gp::GpState state(spec, engine, wide);
            for (Index s = 0; s < kEquivN; s += kEquivBatch)
                gp::absorb_batch(state, train.features.middleRows(s, kEquivBatch), train.targets.segment(s, kEquivBatch));
            preds.push_back(gp::predict(state, test.features));
        }
        for (std::size_t e = 1; e < preds.size(); ++e) {
            worst = std::max(worst, rel(preds[e].mean, preds[0].mean));
            worst = std::max(worst, rel(preds[e].variance, preds[0].variance));
        }
    }
    Outcome o{2, "engines agree when the sketch covers the full matrix"};
    o.seconds = since(t0);
    o.pass = worst <= kEquivRelTol && o.seconds < kEquivMaxSeconds;
    o.detail = "n=" + std::to_string(kEquivN) + ", k+p=" + std::to_string(wide.width()) +
               ", worst relative difference " + fmt("%.2e", worst) + " (tol " + fmt("%.0e", kEquivRelTol) + ")";
    return o;
}

Outcome criterion_woodbury() {
    const auto t0 = Clock::now();
    double worst_single = 0.0, worst_chain = 0.0;
    int instances = 0;
    for (const Index n : {Index{10}, Index{40}, Index{70}, Index{100}}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            ++instances;
            // single-factor identity with a signed spectrum
            const Index r = std::max<Index>(2, n / 4);
            const Matrix Q = Eigen::HouseholderQR<Matrix>(gaussian(n, r, seed)).householderQ() * Matrix::Identity(n, r);
            Vector S = gaussian(r, 1, seed + 100).col(0).cwiseAbs() * 3.0;
            S(r - 1) = -0.2;
            const rla::SymEigFactor f(Q, S);
            const double nugget = 0.5;
            const gp::WoodburyInverse w(f, nugget);
            const Matrix V = gaussian(n, 3, seed + 200);
            const Matrix A = f.reconstruct() + nugget * Matrix::Identity(n, n);
            worst_single = std::max(worst_single, rel(w.apply(f, V), Eigen::FullPivLU<Matrix>(A).solve(V)));

            // distance-power chain with random feasible coefficients
            const Matrix X = gaussian(n, 3, seed + 300);
            const Matrix D = kernels::pairwise_distances(X);
            const Matrix D2 = D.cwiseProduct(D);
            std::mt19937_64 gen(seed + 400);
            std::uniform_real_distribution<double> u(0.05, 1.0);
            const std::vector<double> a{u(gen), u(gen), u(gen)};
            const double noise = 0.4;
            const hyperopt::ChainedInverse chain({rla::exact_eig(D, n), rla::exact_eig(D2, n)}, a, noise);
            const Matrix K = (a[0] + noise) * Matrix::Identity(n, n) + a[1] * D + a[2] * D2;
            worst_chain = std::max(worst_chain, rel(chain.apply(V), Eigen::FullPivLU<Matrix>(K).solve(V)));
        }
    }
    Outcome o{3, "Woodbury inverse and distance-power chain match dense solves"};
    o.seconds = since(t0);
    o.pass = worst_single <= kWoodburyRelTol && worst_chain <= kWoodburyRelTol && o.seconds < kWoodburyMaxSeconds;
    o.detail = std::to_string(instances) + " instances, n<=100: single " + fmt("%.2e", worst_single) + ", chain " +
               fmt("%.2e", worst_chain) + " (tol " + fmt("%.0e", kWoodburyRelTol) + ")";
    return o;
}

// ---------------------------------------------------------------------------

struct AbaloneSource {
    bench::Json dataset;
    std::string label;
};

AbaloneSource abalone_source(const fs::path& data_dir) {
    const fs::path real = data_dir / "abalone.csv";
    if (fs::exists(real)) return {{{"format", "abalone"}, {"path", real.string()}}, "abalone.csv"};
    return {{{"format", "abalone"}, {"synthetic", true}, {"rows", 4177}, {"seed", 0}}, "surrogate abalone (4177 rows)"};
}

bench::ExperimentResult run_config(const bench::Json& doc, const fs::path& out) {
    auto cfg = bench::parse_config(doc);
    cfg.output_dir = (out / "data_cache").string();
    auto res = bench::run_experiment(cfg);
    bench::write_outputs(res, out / cfg.name);
    return res;
}

bench::Json se_doc(const AbaloneSource& src, const std::string& engine) {
    return {{"schema_version", bench::kConfigSchemaVersion},
            {"name", "table1_" + engine},
            {"dataset", src.dataset},
            {"stream", {{"batch_size", kBatchSize}, {"max_samples", kTableOneSamples}, {"labeling", "self"}}},
            {"engine", engine},
            {"kernel", {{"family", "se"}, {"lengthscale", 4.0}, {"signal_variance", 1.0}, {"noise_variance", 0.3}}},
            {"sketch", {{"k", 30}, {"p", 5}}}};
}

bench::Json poly_doc(const AbaloneSource& src, const std::string& name, const std::string& engine,
                     const std::string& mode) {
    return {{"schema_version", bench::kConfigSchemaVersion},
            {"name", name},
            {"dataset", src.dataset},
            {"stream", {{"batch_size", kBatchSize}, {"max_samples", kPolySamples}, {"labeling", "self"}}},
            {"engine", engine},
            {"kernel", {{"family", "poly"}, {"m", 3}, {"coefficients", "auto"}, {"noise_variance", 0.3}}},
            {"hyperopt", {{"mode", mode}, {"n_steps", kInitialSteps}, {"max_iters", 50}, {"tolerance", 1e-4}}},
            {"sketch", {{"k", 30}, {"p", 5}}}};
}

std::vector<Outcome> criteria_table_one(const AbaloneSource& src, const fs::path& out) {
    const auto t0 = Clock::now();
    const auto nrmf = run_config(se_doc(src, "NRMF"), out);
    const auto brmf = run_config(se_doc(src, "BRMF"), out);
    const auto srmf = run_config(se_doc(src, "SRMF"), out);
    const double total = since(t0);

    const auto half = static_cast<Index>(srmf.metrics.batches.size() / 2);
    const double e_srmf = bench::fit_exponent(srmf.metrics, half);
    const double e_nrmf = bench::fit_exponent(nrmf.metrics, half);
    const double ts = srmf.metrics.mean_seconds(), tb = brmf.metrics.mean_seconds(), tn = nrmf.metrics.mean_seconds();

    Outcome c4{4, "per-batch time ordering and growth on the SE stream"};
    c4.seconds = total;
    c4.pass = ts < tb && tb < tn && e_srmf < kSrmfMaxExponent && e_nrmf > kNrmfMinExponent && total < kTableOneMaxSeconds;
    c4.detail = src.label + ", " + std::to_string(kTableOneSamples) + " samples: mean s/batch SRMF " + fmt("%.4f", ts) +
                " < BRMF " + fmt("%.4f", tb) + " < NRMF " + fmt("%.4f", tn) + "; exponent SRMF " + fmt("%.2f", e_srmf) +
                " (< " + fmt("%.1f", kSrmfMaxExponent) + "), NRMF " + fmt("%.2f", e_nrmf) + " (> " +
                fmt("%.1f", kNrmfMinExponent) + ")";

    const double ratio = srmf.metrics.mean_rmse() / nrmf.metrics.mean_rmse();
    Outcome c5{5, "SRMF accuracy close to NRMF with the default SE hyperparameters"};
    c5.pass = std::isfinite(ratio) && ratio <= kRmseRatioMax;
    c5.detail = "mean RMSE SRMF " + fmt("%.4f", srmf.metrics.mean_rmse()) + " / NRMF " +
                fmt("%.4f", nrmf.metrics.mean_rmse()) + " = " + fmt("%.3f", ratio) + " (<= " +
                fmt("%.1f", kRmseRatioMax) + "); BRMF " + fmt("%.4f", brmf.metrics.mean_rmse());
    return {c4, c5};
}

Outcome criterion_modes(const AbaloneSource& src, const fs::path& out) {
    const auto t0 = Clock::now();
    const auto none = run_config(poly_doc(src, "table2_noopt", "NRMF", "none"), out);
    const auto cont = run_config(poly_doc(src, "table2_continuous", "NRMF", "continuous"), out);
    const auto init = run_config(poly_doc(src, "table2_initial", "NRMF", "initial"), out);

    const double r_none = none.metrics.mean_rmse(), r_cont = cont.metrics.mean_rmse(), r_init = init.metrics.mean_rmse();
    const double time_ratio = cont.metrics.mean_seconds() / init.metrics.mean_seconds();
    const bool a = r_none > kNoOptOverInitialMin * r_init;
    const bool b = r_cont <= r_init;
    const bool c = time_ratio > kContinuousTimeRatioMin;

    Outcome o{6, "optimization mode ordering on the distance-kernel stream"};
    o.seconds = since(t0);
    o.pass = a && b && c;
    o.detail = std::string(a ? "ok" : "FAIL") + " NoOpt/Initial rmse " + fmt("%.2f", r_none / r_init) + "x (> " +
               fmt("%.0f", kNoOptOverInitialMin) + "); " + (b ? "ok" : "FAIL") + " Continuous rmse " +
               fmt("%.4f", r_cont) + " <= Initial " + fmt("%.4f", r_init) + "; " + (c ? "ok" : "FAIL") +
               " Continuous/Initial time " + fmt("%.2f", time_ratio) + "x (> " + fmt("%.0f", kContinuousTimeRatioMin) +
               ")";
    return o;
}

Outcome criterion_hybrid(const AbaloneSource& src, const fs::path& out) {
    const auto t0 = Clock::now();
    const auto nrmf = run_config(poly_doc(src, "table3_hybrid_NRMF", "NRMF", "hybrid"), out);
    const auto brmf = run_config(poly_doc(src, "table3_hybrid_BRMF", "BRMF", "hybrid"), out);
    const auto srmf = run_config(poly_doc(src, "table3_hybrid_SRMF", "SRMF", "hybrid"), out);

    const double ts = srmf.metrics.mean_seconds(), tb = brmf.metrics.mean_seconds(), tn = nrmf.metrics.mean_seconds();
    const double ratio = srmf.metrics.mean_rmse() / nrmf.metrics.mean_rmse();
    Outcome o{7, "hybrid scheme: time ordering and SRMF accuracy"};
    o.seconds = since(t0);
    o.pass = ts < tb && tb < tn && std::isfinite(ratio) && ratio <= kHybridRmseRatioMax;
    o.detail = "mean s/batch SRMF " + fmt("%.4f", ts) + " < BRMF " + fmt("%.4f", tb) + " < NRMF " + fmt("%.4f", tn) +
               "; SRMF rmse " + fmt("%.4f", srmf.metrics.mean_rmse()) + " vs NRMF " +
               fmt("%.4f", nrmf.metrics.mean_rmse()) + " = " + fmt("%.3f", ratio) + "x (<= " +
               fmt("%.1f", kHybridRmseRatioMax) + "); BRMF rmse " + fmt("%.4g", brmf.metrics.mean_rmse());
    return o;
}

// ---------------------------------------------------------------------------

std::string strip_seconds(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

Outcome criterion_invariants() {
    const auto t0 = Clock::now();
    std::vector<std::string> failed;
    auto check = [&failed](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    // orthonormality of initial and sequentially updated factors
    const auto ds = data::synthetic_smooth(300, 3, 21);
    const kernels::KernelSpec se = kernels::squared_exponential(1.0, 1.0, 0.1);
    const Matrix K = se.gram(ds.features);
    rla::SketchParams params;
    params.k = 20;
    params.p = 5;
    params.seed = 3;
    auto f = rla::approx_eig([&](const Matrix& W) -> Matrix { return K.topLeftCorner(100, 100) * W; }, 100, params);
    check(f.orthonormality_defect() <= kOrthoTol, "orthonormality (initial)");
    for (Index s = 100; s < 300; s += 100) {
        f = rla::seq_update(f, K.block(0, s, s, 100), K.block(s, s, 100, 100), params);
        check(f.orthonormality_defect() <= kOrthoTol, "orthonormality (update)");
    }

    // determinism by seed
    const auto act = [&](const Matrix& W) -> Matrix { return K * W; };
    const auto g1 = rla::approx_eig(act, 300, params);
    const auto g2 = rla::approx_eig(act, 300, params);
    check(g1.U == g2.U && g1.S == g2.S, "same seed gives identical factors");
    rla::SketchParams other = params;
    other.seed = 4;
    check(!(rla::approx_eig(act, 300, other).U == g1.U), "different seed changes the sketch");

    // optimizer feasibility
    hyperopt::HyperState hs({1.0, 0.5, 0.1}, 0.2, gp::Engine::SRMF, params);
    hyperopt::absorb(hs, ds.features.topRows(80), ds.targets.head(80));
    const auto opt = hyperopt::optimize_hypers(hs);
    bool feasible = opt.objective <= opt.start_objective;
    for (const auto& row : opt.trace)
        for (double v : row.a) feasible = feasible && v >= 0.0 && std::isfinite(v);
    for (double v : opt.a) feasible = feasible && v >= 0.0;
    check(feasible, "optimizer iterates feasible and never worse than the start");

    // variance non-negativity on every engine
    for (const auto engine : {gp::Engine::NRMF, gp::Engine::BRMF, gp::Engine::SRMF}) {
        gp::GpState st(se, engine, params);
        for (Index s = 0; s < 300; s += 100)
            gp::absorb_batch(st, ds.features.middleRows(s, 100), ds.targets.segment(s, 100));
        const auto p = gp::predict(st, data::synthetic_smooth(50, 3, 22).features);
        check(p.variance.minCoeff() >= 0.0 && p.variance.allFinite(), "variances non-negative (" + gp::to_string(engine) + ")");
    }

    // stream determinism
    bench::Json doc = {{"schema_version", bench::kConfigSchemaVersion},
                       {"dataset", {{"format", "smooth"}, {"rows", 400}, {"seed", 5}}},
                       {"stream", {{"batch_size", 50}}},
                       {"engine", "SRMF"},
                       {"kernel", {{"family", "se"}, {"lengthscale", 1.5}, {"noise_variance", 0.1}}},
                       {"sketch", {{"k", 20}, {"p", 5}, {"seed", 9}}}};
    const auto cfg = bench::parse_config(doc);
    check(strip_seconds(bench::metrics_csv(bench::run_experiment(cfg).metrics)) ==
              strip_seconds(bench::metrics_csv(bench::run_experiment(cfg).metrics)),
          "stream metrics identical across runs");

    Outcome o{8, "invariants: orthonormality, seed determinism, feasibility, variances, stream determinism"};
    o.seconds = since(t0);
    o.pass = failed.empty() && o.seconds < kInvariantMaxSeconds;
    if (failed.empty()) {
        o.detail = "all checks hold (unit suites cover the full property set)";
    } else {
        for (const auto& s : failed) o.detail += (o.detail.empty() ? "" : "; ") + s;
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks for the streaming GP library"};
    std::string data_dir = "data";
    std::string out_dir = "out/acceptance";
    std::vector<int> only;
    std::vector<int> expected_fail;
    app.add_option("--data-dir", data_dir, "Directory searched for abalone.csv");
    app.add_option("-o,--output", out_dir, "Directory for run outputs and the report");
    app.add_option("--only", only, "Run only these criteria");
    app.add_option("--expected-fail", expected_fail,
                   "Criteria known to fail; they are still reported as FAIL but do not change the exit code");
    CLI11_PARSE(app, argc, argv);

    const std::set<int> selected(only.begin(), only.end());
    const std::set<int> known(expected_fail.begin(), expected_fail.end());
    auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

    const fs::path out(out_dir);
    fs::create_directories(out);
    const auto src = abalone_source(data_dir);

    std::vector<std::function<std::vector<Outcome>()>> jobs;
    if (wanted(1)) jobs.push_back([&] { return std::vector<Outcome>{criterion_bounds(out)}; });
    if (wanted(2)) jobs.push_back([] { return std::vector<Outcome>{criterion_equivalence()}; });
    if (wanted(3)) jobs.push_back([] { return std::vector<Outcome>{criterion_woodbury()}; });
    if (wanted(4) || wanted(5)) jobs.push_back([&] { return criteria_table_one(src, out); });
    if (wanted(6)) jobs.push_back([&] { return std::vector<Outcome>{criterion_modes(src, out)}; });
    if (wanted(7)) jobs.push_back([&] { return std::vector<Outcome>{criterion_hybrid(src, out)}; });
    if (wanted(8)) jobs.push_back([] { return std::vector<Outcome>{criterion_invariants()}; });

    std::ofstream report(out / "acceptance.txt");
    int unexpected = 0;
    for (const auto& job : jobs) {
        std::vector<Outcome> results;
        try {
            results = job();
        } catch (const std::exception& e) {
            std::cout << "FAIL  error: " << e.what() << std::endl;
            report << "FAIL  error: " << e.what() << '\n';
            ++unexpected;
            continue;
        }
        for (const auto& r : results) {
            if (!wanted(r.id)) continue;
            std::ostringstream line;
            line << (r.pass ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.title << ": " << r.detail;
            if (r.seconds > 0.0) line << " [" << fmt("%.1f", r.seconds) << " s]";
            if (!r.pass && known.count(r.id)) line << " (known failure)";
            if (r.pass && known.count(r.id)) line << " (listed as known failure, now passing)";
            std::cout << line.str() << std::endl;
            report << line.str() << '\n';
            if (!r.pass && !known.count(r.id)) ++unexpected;
        }
    }
    return unexpected == 0 ? 0 : 1;
}
