#include <srgp/hyperopt.hpp>

#include <algorithm>
#include <cstdio>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

namespace srgp::hyperopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogCeiling = 50.0;

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    return text;
}

void append_rows(Matrix& X, const Matrix& X_b) {
    if (X.rows() == 0) {
        X = X_b;
        return;
    }
    const Index n = X.rows();
    X.conservativeResize(n + X_b.rows(), Eigen::NoChange);
    X.bottomRows(X_b.rows()) = X_b;
}

void append_values(Vector& y, const Vector& y_b) {
    const Index n = y.size();
    y.conservativeResize(n + y_b.size());
    y.tail(y_b.size()) = y_b;
}

rla::SketchParams power_params(const rla::SketchParams& params, int power) {
    rla::SketchParams out = params;
    out.seed = mix_seed(params.seed, static_cast<std::uint64_t>(power) * 0x100000001ULL);
    return out;
}

Matrix extend_symmetric(const Matrix& old, const Matrix& cross, const Matrix& corner) {
    const Index n = old.rows();
    const Index b = corner.rows();
    Matrix out(n + b, n + b);
    out.topLeftCorner(n, n) = old;
    out.topRightCorner(n, b) = cross;
    out.bottomLeftCorner(b, n) = cross.transpose();
    out.bottomRightCorner(b, b) = corner;
    return out;
}

}  // namespace

std::string to_string(ModeKind kind) {
    switch (kind) {
        case ModeKind::NoOpt: return "none";
        case ModeKind::Continuous: return "continuous";
        case ModeKind::Initial: return "initial";
        case ModeKind::Hybrid: return "hybrid";
    }
    return "?";
}

ModeKind parse_mode(const std::string& text) {
    const std::string t = lower(text);
    if (t == "none" || t == "noopt" || t == "no-opt") return ModeKind::NoOpt;
    if (t == "continuous") return ModeKind::Continuous;
    if (t == "initial") return ModeKind::Initial;
    if (t == "hybrid") return ModeKind::Hybrid;
    throw ConfigError("unknown hyperopt mode '" + text + "' (expected none|continuous|initial|hybrid)");
}

bool Mode::optimizes_at(Index t) const {
    switch (kind) {
        case ModeKind::NoOpt: return false;
        case ModeKind::Continuous: return true;
        case ModeKind::Initial:
        case ModeKind::Hybrid: return t < n_steps;
    }
    return false;
}

void OptConfig::validate() const {
    if (max_iters < 1) throw ConfigError("OptConfig: max_iters must be >= 1");
    if (!(objective_tolerance >= 0.0)) throw ConfigError("OptConfig: objective_tolerance must be >= 0");
    if (!(initial_step > 0.0)) throw ConfigError("OptConfig: initial_step must be > 0");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw ConfigError("OptConfig: holdout_fraction must lie in [0, 1)");
}

HyperState::HyperState(std::vector<double> coefficients, double noise, gp::Engine r, rla::SketchParams p,
                       OptConfig o)
    : a(std::move(coefficients)), noise_variance(noise), route(r), params(p), opt(std::move(o)) {
    spec().validate();
    params.validate();
    opt.validate();
    if (!(noise_variance > 0.0)) throw ConfigError("HyperState: noise variance must be > 0");
}

kernels::KernelSpec HyperState::spec() const { return spec(a); }

kernels::KernelSpec HyperState::spec(const std::vector<double>& coefficients) const {
    return kernels::poly_distance(coefficients, noise_variance);
}

std::vector<double> default_coefficients(const Matrix& X, int m) {
    if (m < 2) throw ConfigError("default_coefficients: m must be >= 2");
    const Matrix D = kernels::pairwise_distances(X);
    std::vector<double> offdiag;
    offdiag.reserve(static_cast<std::size_t>(D.rows() * (D.rows() - 1) / 2));
    for (Index j = 0; j < D.cols(); ++j)
        for (Index i = j + 1; i < D.rows(); ++i) offdiag.push_back(D(i, j));
    double median = 1.0;
    if (!offdiag.empty()) {
        auto mid = offdiag.begin() + static_cast<std::ptrdiff_t>(offdiag.size() / 2);
        std::nth_element(offdiag.begin(), mid, offdiag.end());
        median = *mid > 0.0 ? *mid : 1.0;
    }
    std::vector<double> a(static_cast<std::size_t>(m));
    a[0] = 1.0;
    for (int i = 1; i < m; ++i) a[static_cast<std::size_t>(i)] = std::pow(median, -i);
    return a;
}

void update_distance_factors(HyperState& state, const Matrix& X_b) {
    if (X_b.rows() == 0) return;
    if (state.size() > 0 && X_b.cols() != state.X.cols())
        throw DimensionError("update_distance_factors: feature count mismatch");
    const int powers = state.m() - 1;
    const Index n_old = state.size();

    switch (state.route) {
        case gp::Engine::NRMF: {
            const Matrix corner = kernels::pairwise_distances(X_b);
            if (n_old == 0) {
                state.dense_powers.clear();
                for (int i = 1; i <= powers; ++i) state.dense_powers.push_back(kernels::hadamard_power(corner, i));
            } else {
                const Matrix cross = kernels::cross_distances(state.X, X_b);
                for (int i = 1; i <= powers; ++i) {
                    auto& Di = state.dense_powers[static_cast<std::size_t>(i - 1)];
                    Di = extend_symmetric(Di, kernels::hadamard_power(cross, i), kernels::hadamard_power(corner, i));
                }
            }
            append_rows(state.X, X_b);
            break;
        }
        case gp::Engine::BRMF: {
            append_rows(state.X, X_b);
            const Index n = state.size();
            const Matrix D = kernels::pairwise_distances(state.X);
            state.d_powers.factors.clear();
            for (int i = 1; i <= powers; ++i) {
                const Matrix Di = kernels::hadamard_power(D, i);
                rla::SketchParams step = power_params(state.params, i);
                if (step.width() >= n) {
                    state.d_powers.factors.push_back(rla::exact_eig(Di, step.truncate_to_k ? step.k : step.width()));
                } else {
                    step.seed = mix_seed(step.seed, static_cast<std::uint64_t>(n));
                    state.d_powers.factors.push_back(
                        rla::approx_eig([&Di](const Matrix& W) -> Matrix { return Di * W; }, n, step));
                }
            }
            break;
        }
        case gp::Engine::SRMF: {
            const Matrix corner = kernels::pairwise_distances(X_b);
            if (n_old == 0) {
                state.d_powers.factors.clear();
                for (int i = 1; i <= powers; ++i)
                    state.d_powers.factors.push_back(rla::initial_factor(kernels::hadamard_power(corner, i),
                                                                         power_params(state.params, i),
                                                                         state.exact_limit));
            } else {
                const Matrix cross = kernels::cross_distances(state.X, X_b);
                for (int i = 1; i <= powers; ++i) {
                    auto& f = state.d_powers.factors[static_cast<std::size_t>(i - 1)];
                    f = rla::seq_update_or_exact(f, kernels::hadamard_power(cross, i),
                                                 kernels::hadamard_power(corner, i), power_params(state.params, i));
                }
            }
            append_rows(state.X, X_b);
            break;
        }
    }
    state.d_powers.n = state.size();
}

void absorb(HyperState& state, const Matrix& X_b, const Vector& y_b) {
    if (X_b.rows() != y_b.size()) throw DimensionError("absorb: inputs and outputs disagree in length");
    update_distance_factors(state, X_b);
    append_values(state.y, y_b);
}

ChainedInverse::ChainedInverse(const std::vector<rla::SymEigFactor>& factors, const std::vector<double>& a,
                               double noise) {
    if (a.size() != factors.size() + 1) throw DimensionError("ChainedInverse: need one factor per power");
    base_ = a[0] + noise;
    if (!(base_ > 0.0)) throw NumericalError("ChainedInverse: a0 + sigma^2 must be positive");
    dim_ = factors.empty() ? 0 : factors.front().dim();

    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& f = factors[i];
        const double ai = a[i + 1];
        if (f.dim() != dim_) throw DimensionError("ChainedInverse: factor dimension mismatch");
        if (ai == 0.0 || f.rank() == 0) continue;

        const double cutoff = gp::kClampRelative * f.S.cwiseAbs().maxCoeff();
        std::vector<Index> keep;
        for (Index j = 0; j < f.rank(); ++j)
            if (std::abs(f.S(j)) >= cutoff) keep.push_back(j);
        if (keep.empty()) continue;

        const auto r = static_cast<Index>(keep.size());
        Matrix U(dim_, r);
        Vector inv_scaled(r);
        for (Index j = 0; j < r; ++j) {
            U.col(j) = f.U.col(keep[static_cast<std::size_t>(j)]);
            inv_scaled(j) = 1.0 / (ai * f.S(keep[static_cast<std::size_t>(j)]));
        }

        Term term;
        term.W = apply_prefix(U, terms_.size());
        Matrix core = U.transpose() * term.W;
        core = 0.5 * (core + core.transpose());
        core.diagonal() += inv_scaled;
        term.core.compute(core);
        const double rcond = term.core.rcond();
        if (!(rcond > 1e-14))
            throw SingularSystemError("ChainedInverse: inner system for power " + std::to_string(i + 1) +
                                          " is singular (rcond " + std::to_string(rcond) + ")",
                                      rcond);
        terms_.push_back(std::move(term));
    }
}

Matrix ChainedInverse::apply_prefix(const Matrix& V, std::size_t count) const {
    Matrix out = V / base_;
    for (std::size_t i = 0; i < count; ++i) {
        const Term& t = terms_[i];
        const Matrix coeffs = t.core.solve(t.W.transpose() * V);
        out.noalias() -= t.W * coeffs;
    }
    return out;
}

Matrix ChainedInverse::apply(const Matrix& V) const {
    if (V.rows() != dim_) throw DimensionError("ChainedInverse::apply: dimension mismatch");
    return apply_prefix(V, terms_.size());
}

Matrix chained_inverse_apply(const HyperState& state, const Matrix& V) {
    return ChainedInverse(state.d_powers.factors, state.a, state.noise_variance).apply(V);
}

MatrixAction make_inverse(const HyperState& state, const std::vector<double>& a) {
    if (state.route == gp::Engine::NRMF) {
        const Index n = state.size();
        Matrix A = Matrix::Identity(n, n) * (a[0] + state.noise_variance);
        for (std::size_t i = 1; i < a.size(); ++i)
            if (a[i] != 0.0) A += a[i] * state.dense_powers[i - 1];
        auto solver = std::make_shared<gp::DenseSolver>(A);
        return [solver](const Matrix& V) { return solver->solve(V); };
    }
    auto chain = std::make_shared<ChainedInverse>(state.d_powers.factors, a, state.noise_variance);
    return [chain](const Matrix& V) { return chain->apply(V); };
}

namespace {

double holdout_objective(const HyperState& state, const std::vector<double>& a) {
    const Index n = state.size();
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::mt19937_64 gen(state.opt.rng_seed);
    std::shuffle(idx.begin(), idx.end(), gen);
    const auto n_val = std::clamp<Index>(static_cast<Index>(std::lround(state.opt.holdout_fraction * n)), 1, n - 1);

    Matrix Xv(n_val, state.X.cols()), Xt(n - n_val, state.X.cols());
    Vector yv(n_val), yt(n - n_val);
    for (Index i = 0; i < n; ++i) {
        const Index src = idx[static_cast<std::size_t>(i)];
        if (i < n_val) {
            Xv.row(i) = state.X.row(src);
            yv(i) = state.y(src);
        } else {
            Xt.row(i - n_val) = state.X.row(src);
            yt(i - n_val) = state.y(src);
        }
    }
    const auto spec = state.spec(a);
    Matrix A = spec.gram(Xt);
    A.diagonal().array() += state.noise_variance;
    const Vector alpha = gp::DenseSolver(A).solve(yt);
    const Vector pred = spec.cross(Xv, Xt) * alpha;
    return std::sqrt((pred - yv).squaredNorm() / static_cast<double>(n_val));
}

}  // namespace

double training_objective(const HyperState& state, const std::vector<double>& a) {
    const Index n = state.size();
    if (n == 0) throw Error("training_objective: no absorbed data");
    try {
        if (state.opt.holdout_fraction > 0.0 && n >= 2) return holdout_objective(state, a);
        const Vector alpha = make_inverse(state, a)(state.y);
        const double value = (a[0] + state.noise_variance) * alpha.norm() / std::sqrt(static_cast<double>(n));
        return std::isfinite(value) ? value : kInf;
    } catch (const NumericalError&) {
        return kInf;
    }
}

OptResult optimize_hypers(const HyperState& state) {
    state.opt.validate();
    const auto m = static_cast<std::size_t>(state.m());
    const double log_floor = std::log(kCoefficientFloor);

    OptResult result;
    auto to_coeffs = [&](const Vector& x) {
        std::vector<double> a(m);
        for (std::size_t i = 0; i < m; ++i) a[i] = std::exp(x(static_cast<Index>(i)));
        return a;
    };
    auto project = [&](Vector x) { return Vector(x.cwiseMax(log_floor).cwiseMin(kLogCeiling)); };
    auto evaluate = [&](const Vector& x) {
        ++result.evaluations;
        return training_objective(state, to_coeffs(x));
    };

    result.start_objective = training_objective(state, state.a);

    // simplex in log space around the (floored) start
    const auto dims = static_cast<Index>(m);
    std::vector<Vector> simplex;
    Vector x0(dims);
    for (Index i = 0; i < dims; ++i) x0(i) = std::log(std::max(state.a[static_cast<std::size_t>(i)], kCoefficientFloor));
    x0 = project(x0);
    simplex.push_back(x0);
    for (Index i = 0; i < dims; ++i) {
        Vector v = x0;
        v(i) += state.opt.initial_step;
        simplex.push_back(project(v));
    }
    std::vector<double> f;
    for (const auto& v : simplex) f.push_back(evaluate(v));

    std::vector<std::size_t> order(simplex.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return f[i] < f[j]; });
        std::vector<Vector> s2;
        std::vector<double> f2;
        for (auto i : order) {
            s2.push_back(simplex[i]);
            f2.push_back(f[i]);
        }
        simplex.swap(s2);
        f.swap(f2);
    };

    for (int iter = 1; iter <= state.opt.max_iters; ++iter) {
        sort_simplex();
        result.iterations = iter;
        result.trace.push_back({-1, iter, f.front(), to_coeffs(simplex.front())});

        const double spread = f.back() - f.front();
        if (std::isfinite(spread) && (spread <= state.opt.objective_tolerance * std::abs(f.front()) || spread == 0.0))
            break;

        Vector centroid = Vector::Zero(dims);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
        centroid /= static_cast<double>(dims);
        const Vector& worst = simplex.back();

        const Vector xr = project(centroid + (centroid - worst));
        const double fr = evaluate(xr);
        if (fr < f.front()) {
            const Vector xe = project(centroid + 2.0 * (centroid - worst));
            const double fe = evaluate(xe);
            if (fe < fr) {
                simplex.back() = xe;
                f.back() = fe;
            } else {
                simplex.back() = xr;
                f.back() = fr;
            }
            continue;
        }
        if (fr < f[f.size() - 2]) {
            simplex.back() = xr;
            f.back() = fr;
            continue;
        }
        const bool outside = fr < f.back();
        const Vector xc = outside ? project(centroid + 0.5 * (xr - centroid)) : project(centroid + 0.5 * (worst - centroid));
        const double fc = evaluate(xc);
        if (fc < std::min(fr, f.back())) {
            simplex.back() = xc;
            f.back() = fc;
            continue;
        }
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            simplex[i] = project(simplex.front() + 0.5 * (simplex[i] - simplex.front()));
            f[i] = evaluate(simplex[i]);
        }
    }
    sort_simplex();

    result.a = to_coeffs(simplex.front());
    result.objective = f.front();

    const bool collapsed = std::all_of(result.a.begin(), result.a.end(),
                                       [](double v) { return v <= kCoefficientFloor * (1.0 + 1e-9); });
    if (!std::isfinite(result.objective) || collapsed) {
        result.warning = true;
        result.a = state.a;
        result.objective = result.start_objective;
    } else if (!(result.objective <= result.start_objective)) {
        result.a = state.a;
        result.objective = result.start_objective;
    }
    return result;
}

gp::Prediction predict(const HyperState& state, const Matrix& X_new) {
    if (state.size() == 0) throw Error("predict: no absorbed data");
    const auto spec = state.spec();
    const Matrix Kc = spec.cross(state.X, X_new);
    Matrix rhs(state.size(), 1 + Kc.cols());
    rhs.col(0) = state.y;
    rhs.rightCols(Kc.cols()) = Kc;
    const Matrix solved = make_inverse(state, state.a)(rhs);

    gp::Prediction out;
    out.mean = Kc.transpose() * solved.col(0);
    out.variance =
        (spec.prior_variance() - Kc.cwiseProduct(solved.rightCols(Kc.cols())).colwise().sum().array()).matrix().transpose();
    for (Index j = 0; j < out.variance.size(); ++j)
        if (out.variance(j) < 0.0) {
            out.variance(j) = 0.0;
            ++out.clamped;
        }
    return out;
}

namespace {

gp::GpState kernel_state_from(const HyperState& hs) {
    const auto spec = hs.spec();
    if (hs.route != gp::Engine::SRMF) {
        gp::GpState state(spec, hs.route, hs.params);
        gp::absorb_batch(state, hs.X, hs.y);
        return state;
    }
    // Combine the tracked distance factors into one factor of K_a - a0 I.
    std::vector<double> off = hs.a;
    off[0] = 0.0;
    const kernels::PolyDistanceOperator op(hs.d_powers.factors, off);
    const Index n = hs.size();
    rla::SymEigFactor factor;
    if (hs.params.width() >= n) {
        factor = rla::exact_eig(op.apply(Matrix::Identity(n, n)), hs.params.width());
    } else {
        rla::SketchParams step = hs.params;
        step.seed = mix_seed(hs.params.seed, static_cast<std::uint64_t>(n) ^ 0xabcdefULL);
        factor = rla::approx_eig(op.action(), n, step);
    }
    return gp::from_factor(spec, gp::Engine::SRMF, hs.params, hs.X, hs.y, std::move(factor));
}

}  // namespace

ModeResult run_mode(const Mode& mode, gp::Engine route, const std::vector<Batch>& stream, double noise_variance,
                    const rla::SketchParams& params, const OptConfig& opt, const ModeOptions& options) {
    using clock = std::chrono::steady_clock;
    opt.validate();
    ModeResult out;
    out.metrics.label = to_string(mode.kind) + "/" + gp::to_string(route);

    std::optional<HyperState> hs;
    std::optional<gp::GpState> kernel;

    for (std::size_t t = 0; t < stream.size(); ++t) {
        const Batch& batch = stream[t];
        const auto ti = static_cast<Index>(t);
        BatchRecord rec;
        rec.index = ti;

        const auto start = clock::now();
        if (!hs && !kernel) {
            std::vector<double> a = options.initial_coefficients.empty()
                                        ? default_coefficients(batch.X, options.m)
                                        : options.initial_coefficients;
            if (mode.kind == ModeKind::NoOpt) {
                kernel.emplace(kernels::poly_distance(a, noise_variance), route, params);
            } else {
                hs.emplace(std::move(a), noise_variance, route, params, opt);
            }
        }

        gp::Prediction pred;
        const bool first = kernel ? kernel->empty() : hs->size() == 0;
        const bool predicting = !first && batch.size() > 0;
        if (predicting) pred = kernel ? gp::predict(*kernel, batch.X) : predict(*hs, batch.X);
        const Vector& labels = (predicting && options.labeling == Labeling::SelfLabels) ? pred.mean : batch.y;

        if (kernel) {
            gp::absorb_batch(*kernel, batch.X, labels);
        } else {
            absorb(*hs, batch.X, labels);
            if (mode.optimizes_at(ti)) {
                OptResult res = optimize_hypers(*hs);
                hs->a = res.a;
                if (res.warning) ++out.optimizer_warnings;
                for (auto& row : res.trace) {
                    row.batch = ti;
                    out.trace.push_back(std::move(row));
                }
            }
            if (mode.kind == ModeKind::Hybrid && !mode.optimizes_at(ti + 1)) kernel = kernel_state_from(*hs);
        }
        rec.seconds = std::chrono::duration<double>(clock::now() - start).count();

        if (predicting) {
            rec.rmse = std::sqrt((pred.mean - batch.y).squaredNorm() / static_cast<double>(batch.size()));
            rec.clamped_variances = pred.clamped;
        }
        if (kernel) {
            rec.n_so_far = kernel->size();
            rec.retained_rank = kernel->retained_rank();
            rec.coefficients = kernel->spec.poly().coefficients;
        } else {
            rec.n_so_far = hs->size();
            rec.retained_rank = route == gp::Engine::NRMF ? hs->size()
                                : hs->d_powers.factors.empty() ? 0
                                                               : hs->d_powers.factors.front().rank();
            rec.coefficients = hs->a;
        }
        out.metrics.batches.push_back(std::move(rec));
    }

    out.final_coefficients = kernel ? kernel->spec.poly().coefficients : (hs ? hs->a : std::vector<double>{});
    if (!opt.trace_path.empty()) write_trace(opt.trace_path, out.trace);
    return out;
}

void write_trace(const std::string& path, const std::vector<TraceRow>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write optimizer trace to " + path);
    std::size_t m = 0;
    for (const auto& r : rows) m = std::max(m, r.a.size());
    os << "batch,iteration,objective";
    for (std::size_t i = 0; i < m; ++i) os << ",a" << i;
    os << '\n';
    os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
        os << r.batch << ',' << r.iteration << ',' << r.objective;
        for (double v : r.a) os << ',' << v;
        os << '\n';
    }
}

}  // namespace srgp::hyperopt
