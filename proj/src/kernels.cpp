#include <srgp/kernels.hpp>

#include <cmath>
#include <string>

namespace srgp::kernels {

namespace {

void require_finite(const Matrix& X, const char* what) {
    if (!X.allFinite()) throw DataError(std::string(what) + ": non-finite input");
}

void check_coefficients(const std::vector<double>& a) {
    if (a.size() < 2) throw ConstraintError("PolyDistance: need at least 2 coefficients (m >= 2)");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i] >= 0.0) || !std::isfinite(a[i]))
            throw ConstraintError("PolyDistance: coefficient a" + std::to_string(i) + " = " + std::to_string(a[i]) +
                                  " violates a_i >= 0");
}

}  // namespace

void KernelSpec::validate() const {
    if (!(noise_variance >= 0.0)) throw ConstraintError("noise variance must be >= 0");
    if (const auto* se = std::get_if<SquaredExponential>(&family)) {
        if (!(se->lengthscale > 0.0)) throw ConstraintError("SquaredExponential: lengthscale must be > 0");
        if (!(se->signal_variance > 0.0)) throw ConstraintError("SquaredExponential: signal variance must be > 0");
    } else {
        check_coefficients(poly().coefficients);
    }
}

Matrix KernelSpec::cross(const Matrix& X, const Matrix& Z) const {
    if (const auto* se = std::get_if<SquaredExponential>(&family)) return se_kernel(X, Z, *se);
    const auto& a = poly().coefficients;
    const Matrix D = cross_distances(X, Z);
    Matrix K = Matrix::Zero(D.rows(), D.cols());
    Matrix power = D;
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (i > 1) power = power.cwiseProduct(D);
        if (a[i] != 0.0) K += a[i] * power;
    }
    return K;
}

double KernelSpec::diagonal_shift() const { return is_poly() ? poly().coefficients.front() : 0.0; }

double KernelSpec::prior_variance() const {
    if (const auto* se = std::get_if<SquaredExponential>(&family)) return se->signal_variance;
    return poly().coefficients.front();
}

Matrix KernelSpec::off_gram(const Matrix& X) const {
    Matrix K = cross(X, X);
    K = 0.5 * (K + K.transpose());
    K.diagonal().setConstant(is_poly() ? 0.0 : prior_variance());
    return K;
}

Matrix KernelSpec::gram(const Matrix& X) const {
    Matrix K = off_gram(X);
    if (is_poly()) K.diagonal().array() += diagonal_shift();
    return K;
}

KernelSpec squared_exponential(double lengthscale, double signal_variance, double noise_variance) {
    KernelSpec spec{SquaredExponential{lengthscale, signal_variance}, noise_variance};
    spec.validate();
    return spec;
}

KernelSpec poly_distance(std::vector<double> coefficients, double noise_variance) {
    KernelSpec spec{PolyDistance{std::move(coefficients)}, noise_variance};
    spec.validate();
    return spec;
}

Matrix cross_sq_distances(const Matrix& X, const Matrix& Z) {
    if (X.cols() != Z.cols())
        throw DimensionError("cross_distances: inputs have " + std::to_string(X.cols()) + " and " +
                             std::to_string(Z.cols()) + " features");
    require_finite(X, "cross_distances");
    require_finite(Z, "cross_distances");
    const Vector xx = X.rowwise().squaredNorm();
    const Vector zz = Z.rowwise().squaredNorm();
    Matrix sq = -2.0 * (X * Z.transpose());
    sq.colwise() += xx;
    sq.rowwise() += zz.transpose();
    return sq.cwiseMax(0.0);
}

Matrix cross_distances(const Matrix& X, const Matrix& Z) { return cross_sq_distances(X, Z).cwiseSqrt(); }

Matrix pairwise_distances(const Matrix& X) {
    Matrix D = cross_distances(X, X);
    D = 0.5 * (D + D.transpose());
    D.diagonal().setZero();
    return D;
}

Matrix hadamard_power(const Matrix& D, int power) {
    if (power < 1) throw ConfigError("hadamard_power: power must be a positive integer");
    Matrix out = D;
    for (int i = 1; i < power; ++i) out = out.cwiseProduct(D);
    return out;
}

double most_negative_eigenvalue(const Matrix& A) {
    if (A.rows() != A.cols()) throw DimensionError("most_negative_eigenvalue: matrix must be square");
    if (A.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

Matrix se_kernel(const Matrix& X, const Matrix& Z, const SquaredExponential& se) {
    const double scale = -0.5 / (se.lengthscale * se.lengthscale);
    return se.signal_variance * (scale * cross_sq_distances(X, Z)).array().exp().matrix();
}

PolyDistanceOperator::PolyDistanceOperator(std::vector<Matrix> dense_powers, std::vector<double> coefficients)
    : dense_(std::move(dense_powers)), a_(std::move(coefficients)) {
    check_coefficients(a_);
    if (dense_.size() != a_.size() - 1)
        throw DimensionError("poly_distance_kernel: expected " + std::to_string(a_.size() - 1) + " distance powers");
    dim_ = dense_.front().rows();
    for (const auto& D : dense_)
        if (D.rows() != dim_ || D.cols() != dim_) throw DimensionError("poly_distance_kernel: power size mismatch");
}

PolyDistanceOperator::PolyDistanceOperator(std::vector<rla::SymEigFactor> factored_powers,
                                           std::vector<double> coefficients)
    : factored_(std::move(factored_powers)), a_(std::move(coefficients)) {
    check_coefficients(a_);
    if (factored_.size() != a_.size() - 1)
        throw DimensionError("poly_distance_kernel: expected " + std::to_string(a_.size() - 1) + " distance powers");
    dim_ = factored_.front().dim();
    for (const auto& f : factored_)
        if (f.dim() != dim_) throw DimensionError("poly_distance_kernel: factor dimension mismatch");
}

Matrix PolyDistanceOperator::apply(const Matrix& V) const {
    if (V.rows() != dim_) throw DimensionError("PolyDistanceOperator::apply: dimension mismatch");
    Matrix out = a_[0] * V;
    for (std::size_t i = 1; i < a_.size(); ++i) {
        if (a_[i] == 0.0) continue;
        if (!dense_.empty())
            out.noalias() += a_[i] * (dense_[i - 1] * V);
        else
            out += a_[i] * factored_[i - 1].apply(V);
    }
    return out;
}

MatrixAction PolyDistanceOperator::action() const {
    return [op = *this](const Matrix& V) { return op.apply(V); };
}

PolyDistanceOperator poly_distance_kernel(std::vector<Matrix> dense_powers, std::vector<double> coefficients) {
    return PolyDistanceOperator(std::move(dense_powers), std::move(coefficients));
}

PolyDistanceOperator poly_distance_kernel(std::vector<rla::SymEigFactor> factored_powers,
                                          std::vector<double> coefficients) {
    return PolyDistanceOperator(std::move(factored_powers), std::move(coefficients));
}

}  // namespace srgp::kernels
