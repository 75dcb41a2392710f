#pragma once

// Gaussian-process posterior prediction with three interchangeable inverse
// engines for K + sigma^2 I:
//   NRMF  dense factorization rebuilt from scratch on every batch,
//   BRMF  randomized eigendecomposition recomputed from the dense kernel,
//   SRMF  sequential bordered-block update of the previous factor.
//
// For the polynomial-distance kernel the a0 I term is treated as part of the
// diagonal: factored engines track K - a0 I and invert with the combined
// nugget a0 + sigma^2.

#include <srgp/kernels.hpp>
#include <srgp/rla.hpp>
#include <srgp/stream.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace srgp::gp {

enum class Engine { NRMF, BRMF, SRMF };

std::string to_string(Engine engine);
Engine parse_engine(const std::string& text);

/// Drop |S_i| below this fraction of max |S| from the Woodbury correction.
inline constexpr double kClampRelative = 1e-10;

/// Symmetric solve: Cholesky when positive definite, partial-pivot LU otherwise
/// (the polynomial-distance kernel is indefinite in general).
class DenseSolver {
  public:
    DenseSolver() = default;
    explicit DenseSolver(const Matrix& A);

    Matrix solve(const Matrix& rhs) const;
    bool cholesky() const { return use_llt_; }
    Index dim() const { return dim_; }

  private:
    Eigen::LLT<Matrix> llt_;
    Eigen::PartialPivLU<Matrix> lu_;
    bool use_llt_ = true;
    Index dim_ = 0;
};

/// (U S U^T + nugget I)^{-1} applied as v / nugget - U diag(w) U^T v, with
/// w_i = S_i / (nugget (S_i + nugget)). Holds only the weights; the factor is
/// passed to apply().
class WoodburyInverse {
  public:
    WoodburyInverse() = default;
    WoodburyInverse(const rla::SymEigFactor& factor, double nugget);

    Matrix apply(const rla::SymEigFactor& factor, const Matrix& V) const;
    double nugget() const { return nugget_; }
    Index dropped() const { return dropped_; }

  private:
    double nugget_ = 1.0;
    Vector weights_;
    Index dropped_ = 0;
};

struct Prediction {
    Vector mean;
    Vector variance;
    /// Number of variances raised to zero by clamping.
    Index clamped = 0;
};

struct GpState {
    Matrix X;
    Vector y;
    kernels::KernelSpec spec;
    Engine engine = Engine::SRMF;
    rla::SketchParams params;
    /// SRMF uses the exact dense eigendecomposition for the first block when it is at most this large.
    Index exact_limit = 2000;

    // inverse representation; which member is live depends on the engine
    DenseSolver dense;
    rla::SymEigFactor factor;
    WoodburyInverse woodbury;
    /// (K + sigma^2 I)^{-1} y, refreshed after every absorb.
    Vector alpha;

    GpState() = default;
    GpState(kernels::KernelSpec spec, Engine engine, rla::SketchParams params);

    Index size() const { return X.rows(); }
    bool empty() const { return X.rows() == 0; }
    /// Diagonal added to the tracked kernel before inversion (sigma^2 + a0).
    double nugget() const;
    Index retained_rank() const;

    /// Rebuild the inverse representation from the current factor or data.
    void refresh_inverse();
};

/// (K + sigma^2 I)^{-1} V.
Matrix inverse_apply(const GpState& state, const Matrix& V);

Prediction predict(const GpState& state, const Matrix& X_new);

/// Append a batch and update the inverse representation for the engine.
void absorb_batch(GpState& state, const Matrix& X_b, const Vector& y_b);

/// Build a state directly from an externally computed factor of K - a0 I.
GpState from_factor(kernels::KernelSpec spec, Engine engine, rla::SketchParams params, Matrix X, Vector y,
                    rla::SymEigFactor factor);

/// Dense spectral error ||K_off(X) - U S U^T||_2 of a factored state.
double factor_error(const GpState& state);

struct StreamOptions {
    Labeling labeling = Labeling::SelfLabels;
    /// Compute the dense factor error after every batch (untimed).
    bool factor_oracle = false;
};

/// Predict-then-absorb over the batches. The first batch is always absorbed
/// with its true labels.
StreamMetrics stream_run(Engine engine, const std::vector<Batch>& stream, const kernels::KernelSpec& spec,
                         const rla::SketchParams& params, const StreamOptions& options = {});

// Versioned binary checkpoint. Layout (little-endian):
//   "SRGPCKPT" | u32 version | u8 engine | u8 family | i32 k | i32 p | u64 seed | u8 truncate
//   | f64 noise | u32 count + f64[count] kernel hyperparameters
//   | u64 n | u64 d | f64[n*d] X row-major | f64[n] y
//   | u64 r | f64[r] S | f64[n*r] U row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const GpState& state, const std::filesystem::path& path);
GpState load_checkpoint(const std::filesystem::path& path);

}  // namespace srgp::gp
