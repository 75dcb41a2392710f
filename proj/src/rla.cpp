#include <srgp/rla.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

namespace srgp {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace srgp

namespace srgp::rla {

namespace {

constexpr double kSymmetryTolerance = 1e-8;

Matrix gaussian_block(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix omega(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) omega(i, j) = normal(gen);
    return omega;
}

std::vector<Index> order_by_magnitude(const Vector& values) {
    std::vector<Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return std::abs(values(a)) > std::abs(values(b)); });
    return idx;
}

SymEigFactor sorted_factor(const Matrix* basis, const Matrix& vectors, const Vector& values, Index keep) {
    auto idx = order_by_magnitude(values);
    keep = std::min<Index>(keep, values.size());
    Matrix V(vectors.rows(), keep);
    Vector S(keep);
    for (Index j = 0; j < keep; ++j) {
        V.col(j) = vectors.col(idx[static_cast<std::size_t>(j)]);
        S(j) = values(idx[static_cast<std::size_t>(j)]);
    }
    if (basis == nullptr) return SymEigFactor(std::move(V), std::move(S));
    return SymEigFactor(*basis * V, std::move(S));
}

}  // namespace

SymEigFactor::SymEigFactor(Matrix u, Vector s) : U(std::move(u)), S(std::move(s)) {
    if (U.cols() != S.size())
        throw DimensionError("SymEigFactor: U has " + std::to_string(U.cols()) + " columns but S has " +
                             std::to_string(S.size()) + " entries");
}

Matrix SymEigFactor::apply(const Matrix& X) const {
    if (X.rows() != dim())
        throw DimensionError("SymEigFactor::apply: block has " + std::to_string(X.rows()) + " rows, expected " +
                             std::to_string(dim()));
    if (rank() == 0) return Matrix::Zero(X.rows(), X.cols());
    Matrix coeffs = U.transpose() * X;
    coeffs = S.asDiagonal() * coeffs;
    return U * coeffs;
}

Matrix SymEigFactor::reconstruct() const { return U * S.asDiagonal() * U.transpose(); }

double SymEigFactor::orthonormality_defect() const {
    if (rank() == 0) return 0.0;
    return (U.transpose() * U - Matrix::Identity(rank(), rank())).norm();
}

void SketchParams::validate() const {
    if (k < 1) throw ConfigError("SketchParams: target rank k must be >= 1");
    if (p < 1) throw ConfigError("SketchParams: oversampling p must be >= 1");
}

BorderedOperator::BorderedOperator(SymEigFactor f, Matrix b, Matrix c)
    : factor(std::move(f)), B(std::move(b)), C(std::move(c)) {
    if (C.rows() != C.cols()) throw DimensionError("BorderedOperator: C must be square");
    if (B.rows() != factor.dim() || B.cols() != C.rows())
        throw DimensionError("BorderedOperator: B is " + std::to_string(B.rows()) + "x" + std::to_string(B.cols()) +
                             ", expected " + std::to_string(factor.dim()) + "x" + std::to_string(C.rows()));
    if (C.size() == 0) return;
    const double scale = std::max(C.cwiseAbs().maxCoeff(), 1.0);
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw NonSymmetricError("BorderedOperator: new diagonal block C is not symmetric");
}

RangeBasis range_finder(const MatrixAction& apply, Index n, const SketchParams& params) {
    params.validate();
    const Index width = params.width();
    if (width > n)
        throw DimensionError("range_finder: sketch width k+p=" + std::to_string(width) + " exceeds dimension " +
                             std::to_string(n));

    const Matrix omega = gaussian_block(n, width, params.seed);
    Matrix Y = apply(omega);
    if (Y.rows() != n || Y.cols() != width)
        throw DimensionError("range_finder: apply returned " + std::to_string(Y.rows()) + "x" +
                             std::to_string(Y.cols()) + ", expected " + std::to_string(n) + "x" +
                             std::to_string(width));

    Eigen::HouseholderQR<Matrix> qr(Y);
    RangeBasis out;
    out.Q = qr.householderQ() * Matrix::Identity(n, width);

    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    const double top = diag.size() ? diag.maxCoeff() : 0.0;
    const double cutoff = top * 1e-13 * static_cast<double>(n);
    out.numerical_rank = top > 0.0 ? (diag.array() > cutoff).count() : 0;
    out.rank_deficient = out.numerical_rank < width;
    return out;
}

SymEigFactor approx_eig(const MatrixAction& apply, Index n, const SketchParams& params) {
    const RangeBasis basis = range_finder(apply, n, params);
    const Matrix AQ = apply(basis.Q);
    Matrix Z = basis.Q.transpose() * AQ;

    const double znorm = Z.norm();
    if (znorm > 0.0 && (Z - Z.transpose()).norm() > kSymmetryTolerance * znorm)
        throw NonSymmetricError("approx_eig: projected matrix Q^T A Q is not symmetric; apply closure is not symmetric");
    Z = 0.5 * (Z + Z.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(Z);
    if (eig.info() != Eigen::Success) throw NumericalError("approx_eig: eigensolver failed");
    const Index keep = params.truncate_to_k ? params.k : params.width();
    return sorted_factor(&basis.Q, eig.eigenvectors(), eig.eigenvalues(), keep);
}

SymEigFactor exact_eig(const Matrix& A, Index max_rank) {
    if (A.rows() != A.cols()) throw DimensionError("exact_eig: matrix must be square");
    const Index n = A.rows();
    if (n == 0) return SymEigFactor::empty(0);
    const Matrix sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericalError("exact_eig: eigensolver failed");
    return sorted_factor(nullptr, eig.eigenvectors(), eig.eigenvalues(), std::min(max_rank, n));
}

SymEigFactor initial_factor(const Matrix& A, const SketchParams& params, Index exact_limit) {
    params.validate();
    const Index n = A.rows();
    const Index keep = params.truncate_to_k ? params.k : params.width();
    if (n <= exact_limit || params.width() > n) return exact_eig(A, keep);
    return approx_eig([&A](const Matrix& W) -> Matrix { return A * W; }, n, params);
}

Matrix bordered_apply(const BorderedOperator& op, const Matrix& W) {
    const Index n_prev = op.prev_dim();
    const Index b = op.border_dim();
    if (W.rows() != n_prev + b)
        throw DimensionError("bordered_apply: block has " + std::to_string(W.rows()) + " rows, expected " +
                             std::to_string(n_prev + b));

    const auto w1 = W.topRows(n_prev);
    const auto w2 = W.bottomRows(b);
    Matrix Y(n_prev + b, W.cols());
    Y.topRows(n_prev) = op.factor.apply(w1);
    if (b > 0) {
        Y.topRows(n_prev).noalias() += op.B * w2;
        Y.bottomRows(b).noalias() = op.B.transpose() * w1;
        Y.bottomRows(b).noalias() += op.C * w2;
    }
    return Y;
}

Matrix bordered_dense(const BorderedOperator& op) {
    const Index n_prev = op.prev_dim();
    const Index b = op.border_dim();
    Matrix K(n_prev + b, n_prev + b);
    K.topLeftCorner(n_prev, n_prev) = op.factor.reconstruct();
    K.topRightCorner(n_prev, b) = op.B;
    K.bottomLeftCorner(b, n_prev) = op.B.transpose();
    K.bottomRightCorner(b, b) = op.C;
    return K;
}

SymEigFactor seq_update(const SymEigFactor& factor, const Matrix& B, const Matrix& C, const SketchParams& params) {
    params.validate();
    const BorderedOperator op(factor, B, C);
    const Index n = op.dim();
    if (params.width() > n)
        throw SketchTooWideError("seq_update: k+p=" + std::to_string(params.width()) + " exceeds grown dimension " +
                                 std::to_string(n) + "; use exact initialization for matrices this small");

    SketchParams step = params;
    step.seed = mix_seed(params.seed, static_cast<std::uint64_t>(n));
    return approx_eig([&op](const Matrix& W) { return bordered_apply(op, W); }, n, step);
}

SymEigFactor seq_update_or_exact(const SymEigFactor& factor, const Matrix& B, const Matrix& C,
                                 const SketchParams& params) {
    const Index n = factor.dim() + C.rows();
    if (params.width() < n) return seq_update(factor, B, C, params);
    const BorderedOperator op(factor, B, C);
    const Index keep = params.truncate_to_k ? params.k : params.width();
    return exact_eig(bordered_dense(op), keep);
}

double sym_spectral_norm(const Matrix& A) {
    if (A.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double sketch_error_term(const Matrix& A, const SketchParams& params) {
    const Index n = A.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    Vector sv = eig.eigenvalues().cwiseAbs();
    std::sort(sv.data(), sv.data() + sv.size(), std::greater<>());
    const double sigma_next = params.k < n ? sv(params.k) : 0.0;
    return (1.0 + 9.0 * std::sqrt(static_cast<double>(params.width()) * static_cast<double>(n))) * sigma_next;
}

void write_factor(std::ostream& os, const SymEigFactor& f) {
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    os << f.dim() << ' ' << f.rank() << '\n';
    for (Index j = 0; j < f.rank(); ++j) os << (j ? " " : "") << f.S(j);
    os << '\n';
    for (Index i = 0; i < f.dim(); ++i) {
        for (Index j = 0; j < f.rank(); ++j) os << (j ? " " : "") << f.U(i, j);
        os << '\n';
    }
    os.precision(old_precision);
}

SymEigFactor read_factor(std::istream& is) {
    Index n = 0, r = 0;
    if (!(is >> n >> r) || n < 0 || r < 0 || r > n) throw DataError("read_factor: bad header");
    Vector S(r);
    for (Index j = 0; j < r; ++j)
        if (!(is >> S(j))) throw DataError("read_factor: truncated eigenvalues");
    Matrix U(n, r);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < r; ++j)
            if (!(is >> U(i, j))) throw DataError("read_factor: truncated eigenvectors");
    return SymEigFactor(std::move(U), std::move(S));
}

}  // namespace srgp::rla
