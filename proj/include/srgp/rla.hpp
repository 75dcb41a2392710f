#pragma once

// Randomized range finding, approximate symmetric eigendecomposition and the
// sequential bordered-block update used to track growing kernel matrices.

#include <srgp/types.hpp>

#include <iosfwd>
#include <string>

namespace srgp::rla {

/// Truncated symmetric eigendecomposition A ~ U diag(S) U^T.
///
/// Eigenvalues are signed (indefinite matrices are allowed) and sorted by
/// descending magnitude. A rank-0 factor keeps its logical dimension in U.rows().
struct SymEigFactor {
    Matrix U;
    Vector S;

    SymEigFactor() = default;
    SymEigFactor(Matrix u, Vector s);

    static SymEigFactor empty(Index n) { return SymEigFactor(Matrix(n, 0), Vector(0)); }

    Index dim() const { return U.rows(); }
    Index rank() const { return S.size(); }

    /// U diag(S) U^T X without forming the n x n matrix.
    Matrix apply(const Matrix& X) const;
    Matrix reconstruct() const;
    /// ||U^T U - I||_F.
    double orthonormality_defect() const;
};

struct SketchParams {
    int k = 10;
    int p = 5;
    std::uint64_t seed = 0;
    /// Keep only the k leading eigenpairs instead of all k+p.
    bool truncate_to_k = false;

    int width() const { return k + p; }
    void validate() const;
};

/// The implicit matrix [U S U^T, B; B^T, C].
struct BorderedOperator {
    SymEigFactor factor;
    Matrix B;
    Matrix C;

    BorderedOperator(SymEigFactor f, Matrix b, Matrix c);

    Index prev_dim() const { return factor.dim(); }
    Index border_dim() const { return C.rows(); }
    Index dim() const { return prev_dim() + border_dim(); }
};

struct RangeBasis {
    Matrix Q;
    /// True when the sample matrix was numerically rank deficient and Q
    /// contains completion columns not supported by the range of A.
    bool rank_deficient = false;
    Index numerical_rank = 0;
};

/// Gaussian sketch followed by Householder QR. Requires k+p <= n.
RangeBasis range_finder(const MatrixAction& apply, Index n, const SketchParams& params);

/// Project-then-eigendecompose: U = Q V, S = eig(Q^T A Q). Requires k+p <= n.
SymEigFactor approx_eig(const MatrixAction& apply, Index n, const SketchParams& params);

/// Dense symmetric eigendecomposition truncated to the `max_rank` eigenpairs
/// of largest magnitude.
SymEigFactor exact_eig(const Matrix& A, Index max_rank);

/// Factor for the first block of a stream: exact when n <= exact_limit, else approx_eig.
SymEigFactor initial_factor(const Matrix& A, const SketchParams& params, Index exact_limit = 2000);

/// Y = [U S U^T w1 + B w2; B^T w1 + C w2] for the conformal split of W.
Matrix bordered_apply(const BorderedOperator& op, const Matrix& W);

/// Dense assembly of the bordered operator (oracle / exact path only).
Matrix bordered_dense(const BorderedOperator& op);

/// Factor of the grown matrix [U S U^T, B; B^T, C]. Every matrix action goes
/// through bordered_apply. Throws SketchTooWideError when k+p exceeds the new dimension.
SymEigFactor seq_update(const SymEigFactor& factor, const Matrix& B, const Matrix& C, const SketchParams& params);

/// Same update, but when the sketch is at least as wide as the grown matrix it
/// falls back to the exact eigendecomposition of the bordered matrix.
SymEigFactor seq_update_or_exact(const SymEigFactor& factor, const Matrix& B, const Matrix& C,
                                 const SketchParams& params);

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double sym_spectral_norm(const Matrix& A);

/// (1 + 9 sqrt((k+p) n)) sigma_{k+1}(A) for symmetric A.
double sketch_error_term(const Matrix& A, const SketchParams& params);

// Plain-text dump: header line "n r", then S on one line, then U row-major.
void write_factor(std::ostream& os, const SymEigFactor& f);
SymEigFactor read_factor(std::istream& is);

}  // namespace srgp::rla
