#pragma once

#include <srgp/rla.hpp>
#include <srgp/types.hpp>

#include <variant>
#include <vector>

namespace srgp::kernels {

/// s * exp(-||x - z||^2 / (2 l^2)).
struct SquaredExponential {
    double lengthscale = 1.0;
    double signal_variance = 1.0;
};

/// a0 I + sum_{i=1}^{m-1} a_i D^i, with D^i the elementwise power of the
/// pairwise Euclidean distance matrix. m = coefficients.size().
struct PolyDistance {
    std::vector<double> coefficients;
};

struct KernelSpec {
    std::variant<SquaredExponential, PolyDistance> family;
    double noise_variance = 1e-2;

    bool is_poly() const { return std::holds_alternative<PolyDistance>(family); }
    const PolyDistance& poly() const { return std::get<PolyDistance>(family); }
    PolyDistance& poly() { return std::get<PolyDistance>(family); }

    /// Throws ConstraintError on a violated hyperparameter constraint.
    void validate() const;

    /// Kernel between distinct inputs (rows of X against rows of Z). For the
    /// polynomial-distance family the a0 I term never appears here: it
    /// attaches to training-set indices, not to input values.
    Matrix cross(const Matrix& X, const Matrix& Z) const;

    /// Diagonal term added on top of cross(X, X) in the Gram matrix (a0 for
    /// the polynomial-distance family, 0 for squared exponential).
    double diagonal_shift() const;

    /// Prior variance k(x, x).
    double prior_variance() const;

    /// Exactly symmetric cross(X, X); zero diagonal for the polynomial-distance family.
    Matrix off_gram(const Matrix& X) const;

    /// off_gram(X) + diagonal_shift() I.
    Matrix gram(const Matrix& X) const;
};

KernelSpec squared_exponential(double lengthscale, double signal_variance, double noise_variance);
KernelSpec poly_distance(std::vector<double> coefficients, double noise_variance);

/// D_ij = ||x_i - x_j||, exactly symmetric with zero diagonal.
Matrix pairwise_distances(const Matrix& X);
/// n x b distances between rows of X and rows of Z.
Matrix cross_distances(const Matrix& X, const Matrix& Z);
/// Squared distances via ||x||^2 + ||z||^2 - 2 x^T z, negatives clamped to 0.
Matrix cross_sq_distances(const Matrix& X, const Matrix& Z);

Matrix hadamard_power(const Matrix& D, int power);

/// Smallest eigenvalue of a symmetric matrix. Euclidean distance matrices are
/// indefinite in general, so this is reported as a diagnostic for D^i.
double most_negative_eigenvalue(const Matrix& A);

Matrix se_kernel(const Matrix& X, const Matrix& Z, const SquaredExponential& se);

/// Implicit operator for a0 I + sum a_i D^i where each D^i is held either as
/// a dense matrix or a SymEigFactor. Applying costs O(n r m) when factored.
class PolyDistanceOperator {
  public:
    PolyDistanceOperator(std::vector<Matrix> dense_powers, std::vector<double> coefficients);
    PolyDistanceOperator(std::vector<rla::SymEigFactor> factored_powers, std::vector<double> coefficients);

    Index dim() const { return dim_; }
    Matrix apply(const Matrix& V) const;
    MatrixAction action() const;

  private:
    std::vector<Matrix> dense_;
    std::vector<rla::SymEigFactor> factored_;
    std::vector<double> a_;
    Index dim_ = 0;
};

PolyDistanceOperator poly_distance_kernel(std::vector<Matrix> dense_powers, std::vector<double> coefficients);
PolyDistanceOperator poly_distance_kernel(std::vector<rla::SymEigFactor> factored_powers,
                                          std::vector<double> coefficients);

}  // namespace srgp::kernels
