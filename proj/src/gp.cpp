#include <srgp/gp.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

namespace srgp::gp {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

std::string to_string(Engine engine) {
    switch (engine) {
        case Engine::NRMF: return "NRMF";
        case Engine::BRMF: return "BRMF";
        case Engine::SRMF: return "SRMF";
    }
    return "?";
}

Engine parse_engine(const std::string& text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "NRMF") return Engine::NRMF;
    if (upper == "BRMF") return Engine::BRMF;
    if (upper == "SRMF") return Engine::SRMF;
    throw ConfigError("unknown engine '" + text + "' (expected NRMF|BRMF|SRMF)");
}

DenseSolver::DenseSolver(const Matrix& A) : dim_(A.rows()) {
    llt_.compute(A);
    if (llt_.info() == Eigen::Success) return;
    use_llt_ = false;
    lu_.compute(A);
    const double rcond = lu_.rcond();
    if (!(rcond > 1e-15)) throw SingularSystemError("DenseSolver: matrix is numerically singular", rcond);
}

Matrix DenseSolver::solve(const Matrix& rhs) const {
    if (rhs.rows() != dim_) throw DimensionError("DenseSolver::solve: dimension mismatch");
    return use_llt_ ? Matrix(llt_.solve(rhs)) : Matrix(lu_.solve(rhs));
}

WoodburyInverse::WoodburyInverse(const rla::SymEigFactor& factor, double nugget) : nugget_(nugget) {
    if (!(nugget > 0.0)) throw NumericalError("inverse requires a positive noise variance (got nugget " +
                                              std::to_string(nugget) + ")");
    const Index r = factor.rank();
    weights_ = Vector::Zero(r);
    if (r == 0) return;
    const double cutoff = kClampRelative * factor.S.cwiseAbs().maxCoeff();
    for (Index i = 0; i < r; ++i) {
        const double s = factor.S(i);
        if (std::abs(s) < cutoff) {
            ++dropped_;
            continue;
        }
        const double denom = s + nugget;
        if (std::abs(denom) < 1e-14 * std::max(std::abs(s), nugget))
            throw SingularSystemError("WoodburyInverse: eigenvalue cancels the nugget", std::abs(denom) / nugget);
        weights_(i) = s / (nugget * denom);
    }
}

Matrix WoodburyInverse::apply(const rla::SymEigFactor& factor, const Matrix& V) const {
    if (factor.rank() != weights_.size()) throw DimensionError("WoodburyInverse: factor rank changed");
    Matrix out = V / nugget_;
    if (factor.rank() == 0) return out;
    Matrix coeffs = factor.U.transpose() * V;
    coeffs = weights_.asDiagonal() * coeffs;
    out.noalias() -= factor.U * coeffs;
    return out;
}

GpState::GpState(kernels::KernelSpec s, Engine e, rla::SketchParams p)
    : spec(std::move(s)), engine(e), params(p) {
    spec.validate();
    params.validate();
}

double GpState::nugget() const { return spec.noise_variance + spec.diagonal_shift(); }

Index GpState::retained_rank() const { return engine == Engine::NRMF ? size() : factor.rank(); }

void GpState::refresh_inverse() {
    if (!(spec.noise_variance > 0.0))
        throw NumericalError("forming (K + sigma^2 I)^{-1} requires a positive noise variance");
    if (empty()) {
        alpha.resize(0);
        return;
    }
    if (engine == Engine::NRMF) {
        Matrix A = spec.gram(X);
        A.diagonal().array() += spec.noise_variance;
        dense = DenseSolver(A);
        alpha = dense.solve(y);
    } else {
        woodbury = WoodburyInverse(factor, nugget());
        alpha = woodbury.apply(factor, y);
    }
}

Matrix inverse_apply(const GpState& state, const Matrix& V) {
    if (!(state.spec.noise_variance > 0.0))
        throw NumericalError("inverse_apply requires a positive noise variance");
    if (V.rows() != state.size())
        throw DimensionError("inverse_apply: block has " + std::to_string(V.rows()) + " rows, state has " +
                             std::to_string(state.size()) + " points");
    if (state.engine == Engine::NRMF) return state.dense.solve(V);
    return state.woodbury.apply(state.factor, V);
}

Prediction predict(const GpState& state, const Matrix& X_new) {
    if (state.empty()) throw Error("predict: state has no training points");
    if (X_new.cols() != state.X.cols())
        throw DimensionError("predict: test points have " + std::to_string(X_new.cols()) + " features, expected " +
                             std::to_string(state.X.cols()));
    const Matrix Kc = state.spec.cross(state.X, X_new);
    Prediction out;
    out.mean = Kc.transpose() * state.alpha;
    const Matrix W = inverse_apply(state, Kc);
    out.variance = (state.spec.prior_variance() - Kc.cwiseProduct(W).colwise().sum().array()).matrix().transpose();
    for (Index j = 0; j < out.variance.size(); ++j)
        if (out.variance(j) < 0.0) {
            out.variance(j) = 0.0;
            ++out.clamped;
        }
    return out;
}

namespace {

void append_rows(GpState& state, const Matrix& X_b, const Vector& y_b) {
    if (state.empty()) {
        state.X = X_b;
        state.y = y_b;
        return;
    }
    const Index n = state.size();
    state.X.conservativeResize(n + X_b.rows(), Eigen::NoChange);
    state.X.bottomRows(X_b.rows()) = X_b;
    state.y.conservativeResize(n + y_b.size());
    state.y.tail(y_b.size()) = y_b;
}

rla::SymEigFactor batch_factor(const Matrix& K, const rla::SketchParams& params) {
    const Index n = K.rows();
    if (params.width() >= n) return rla::exact_eig(K, params.truncate_to_k ? params.k : params.width());
    rla::SketchParams step = params;
    step.seed = mix_seed(params.seed, static_cast<std::uint64_t>(n));
    return rla::approx_eig([&K](const Matrix& W) -> Matrix { return K * W; }, n, step);
}

}  // namespace

void absorb_batch(GpState& state, const Matrix& X_b, const Vector& y_b) {
    if (X_b.rows() != y_b.size())
        throw DimensionError("absorb_batch: " + std::to_string(X_b.rows()) + " inputs but " +
                             std::to_string(y_b.size()) + " outputs");
    if (X_b.rows() == 0) return;
    if (!state.empty() && X_b.cols() != state.X.cols())
        throw DimensionError("absorb_batch: batch has " + std::to_string(X_b.cols()) + " features, expected " +
                             std::to_string(state.X.cols()));
    state.spec.validate();

    switch (state.engine) {
        case Engine::NRMF:
            append_rows(state, X_b, y_b);
            break;
        case Engine::BRMF:
            append_rows(state, X_b, y_b);
            state.factor = batch_factor(state.spec.off_gram(state.X), state.params);
            break;
        case Engine::SRMF:
            if (state.empty()) {
                state.factor = rla::initial_factor(state.spec.off_gram(X_b), state.params, state.exact_limit);
            } else {
                const Matrix B = state.spec.cross(state.X, X_b);
                const Matrix C = state.spec.off_gram(X_b);
                state.factor = rla::seq_update_or_exact(state.factor, B, C, state.params);
            }
            append_rows(state, X_b, y_b);
            break;
    }
    state.refresh_inverse();
}

GpState from_factor(kernels::KernelSpec spec, Engine engine, rla::SketchParams params, Matrix X, Vector y,
                    rla::SymEigFactor factor) {
    GpState state(std::move(spec), engine, params);
    if (X.rows() != y.size()) throw DimensionError("from_factor: X and y disagree in length");
    if (engine != Engine::NRMF && factor.dim() != X.rows())
        throw DimensionError("from_factor: factor dimension does not match the training set");
    state.X = std::move(X);
    state.y = std::move(y);
    state.factor = std::move(factor);
    state.refresh_inverse();
    return state;
}

double factor_error(const GpState& state) {
    if (state.engine == Engine::NRMF || state.empty()) return 0.0;
    return rla::sym_spectral_norm(state.spec.off_gram(state.X) - state.factor.reconstruct());
}

StreamMetrics stream_run(Engine engine, const std::vector<Batch>& stream, const kernels::KernelSpec& spec,
                         const rla::SketchParams& params, const StreamOptions& options) {
    using clock = std::chrono::steady_clock;
    GpState state(spec, engine, params);
    StreamMetrics metrics;
    metrics.label = to_string(engine);

    for (std::size_t t = 0; t < stream.size(); ++t) {
        const Batch& batch = stream[t];
        BatchRecord rec;
        rec.index = static_cast<Index>(t);

        const auto start = clock::now();
        if (state.empty() || batch.size() == 0) {
            absorb_batch(state, batch.X, batch.y);
        } else {
            const Prediction pred = predict(state, batch.X);
            const Vector& labels = options.labeling == Labeling::SelfLabels ? pred.mean : batch.y;
            absorb_batch(state, batch.X, labels);
            rec.rmse = std::sqrt((pred.mean - batch.y).squaredNorm() / static_cast<double>(batch.size()));
            rec.clamped_variances = pred.clamped;
        }
        rec.seconds = std::chrono::duration<double>(clock::now() - start).count();

        rec.n_so_far = state.size();
        rec.retained_rank = state.retained_rank();
        if (options.factor_oracle) rec.factor_error = factor_error(state);
        if (spec.is_poly()) rec.coefficients = spec.poly().coefficients;
        metrics.batches.push_back(std::move(rec));
    }
    return metrics;
}

namespace {

constexpr std::array<char, 8> kMagic{'S', 'R', 'G', 'P', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("checkpoint: truncated file");
    return value;
}

void put_rowmajor(std::ostream& os, const Matrix& M) {
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) put<double>(os, M(i, j));
}

Matrix get_rowmajor(std::istream& is, Index rows, Index cols) {
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = get<double>(is);
    return M;
}

}  // namespace

void save_checkpoint(const GpState& state, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot open " + path.string() + " for writing");
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(state.engine));
    put<std::uint8_t>(os, state.spec.is_poly() ? 1 : 0);
    put<std::int32_t>(os, state.params.k);
    put<std::int32_t>(os, state.params.p);
    put<std::uint64_t>(os, state.params.seed);
    put<std::uint8_t>(os, state.params.truncate_to_k ? 1 : 0);
    put<double>(os, state.spec.noise_variance);

    std::vector<double> hyper;
    if (state.spec.is_poly()) {
        hyper = state.spec.poly().coefficients;
    } else {
        const auto& se = std::get<kernels::SquaredExponential>(state.spec.family);
        hyper = {se.lengthscale, se.signal_variance};
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(hyper.size()));
    for (double h : hyper) put<double>(os, h);

    put<std::uint64_t>(os, static_cast<std::uint64_t>(state.X.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(state.X.cols()));
    put_rowmajor(os, state.X);
    for (Index i = 0; i < state.y.size(); ++i) put<double>(os, state.y(i));

    const bool factored = state.engine != Engine::NRMF;
    const Index r = factored ? state.factor.rank() : 0;
    put<std::uint64_t>(os, static_cast<std::uint64_t>(r));
    for (Index j = 0; j < r; ++j) put<double>(os, state.factor.S(j));
    if (r > 0) put_rowmajor(os, state.factor.U);
    if (!os) throw DataError("checkpoint: write failed for " + path.string());
}

GpState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open " + path.string());
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("checkpoint: bad magic bytes");
    const auto version = get<std::uint32_t>(is);
    if (version != kCheckpointVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));

    const auto engine_code = get<std::uint8_t>(is);
    if (engine_code > 2) throw DataError("checkpoint: bad engine code");
    const auto family = get<std::uint8_t>(is);
    rla::SketchParams params;
    params.k = get<std::int32_t>(is);
    params.p = get<std::int32_t>(is);
    params.seed = get<std::uint64_t>(is);
    params.truncate_to_k = get<std::uint8_t>(is) != 0;
    const double noise = get<double>(is);

    const auto count = get<std::uint32_t>(is);
    if (count > 1024) throw DataError("checkpoint: implausible hyperparameter count");
    std::vector<double> hyper(count);
    for (auto& h : hyper) h = get<double>(is);

    kernels::KernelSpec spec;
    if (family == 1) {
        spec = kernels::poly_distance(hyper, noise);
    } else if (family == 0 && count == 2) {
        spec = kernels::squared_exponential(hyper[0], hyper[1], noise);
    } else {
        throw DataError("checkpoint: bad kernel block");
    }

    const auto n = static_cast<Index>(get<std::uint64_t>(is));
    const auto d = static_cast<Index>(get<std::uint64_t>(is));
    Matrix X = get_rowmajor(is, n, d);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = get<double>(is);

    const auto r = static_cast<Index>(get<std::uint64_t>(is));
    if (r > n) throw DataError("checkpoint: factor rank exceeds dimension");
    Vector S(r);
    for (Index j = 0; j < r; ++j) S(j) = get<double>(is);
    Matrix U = r > 0 ? get_rowmajor(is, n, r) : Matrix(n, 0);

    const auto engine = static_cast<Engine>(engine_code);
    return from_factor(std::move(spec), engine, params, std::move(X), std::move(y),
                       rla::SymEigFactor(std::move(U), std::move(S)));
}

}  // namespace srgp::gp
