#pragma once

// Hyperparameter optimization for the polynomial-distance kernel
//   K_a = a0 I + sum_{i=1}^{m-1} a_i D^i.
// The elementwise distance powers D^i are tracked independently of a, so a
// candidate coefficient vector is evaluated without refactoring anything: the
// inverse of K_a + sigma^2 I is assembled by folding each a_i U_i S_i U_i^T
// term into (a0 + sigma^2) I with one Woodbury step per power.

#include <srgp/gp.hpp>
#include <srgp/kernels.hpp>
#include <srgp/rla.hpp>
#include <srgp/stream.hpp>

#include <optional>
#include <string>
#include <vector>

namespace srgp::hyperopt {

/// Coefficients are kept at or above this floor inside the optimizer (log space).
inline constexpr double kCoefficientFloor = 1e-12;

enum class ModeKind { NoOpt, Continuous, Initial, Hybrid };

std::string to_string(ModeKind kind);
ModeKind parse_mode(const std::string& text);

struct Mode {
    ModeKind kind = ModeKind::Initial;
    int n_steps = 10;

    /// Whether the coefficients are re-optimized after absorbing batch t (0-based).
    bool optimizes_at(Index t) const;
};

struct OptConfig {
    int max_iters = 50;
    /// Stop when the simplex objective spread falls below this relative threshold.
    double objective_tolerance = 1e-4;
    /// Initial simplex edge length in log-coefficient space.
    double initial_step = 1.0;
    std::uint64_t rng_seed = 0;
    /// Fraction of the absorbed points held out for the objective; 0 uses in-sample RMSE.
    double holdout_fraction = 0.0;
    /// Optimizer trace CSV (batch, iteration, objective, a...); empty disables it.
    std::string trace_path;

    void validate() const;
};

struct DistancePowerSet {
    /// factors[i-1] approximates D^i.
    std::vector<rla::SymEigFactor> factors;
    Index n = 0;
};

/// Distance-power representation of the absorbed data plus the current
/// coefficients. The route decides how the powers are held:
///   NRMF  dense D^i, extended every batch;
///   BRMF  factors recomputed from the dense D^i every batch;
///   SRMF  factors updated by the sequential bordered-block scheme.
struct HyperState {
    std::vector<double> a;
    double noise_variance = 1e-2;
    gp::Engine route = gp::Engine::SRMF;
    rla::SketchParams params;
    OptConfig opt;
    Index exact_limit = 2000;

    Matrix X;
    Vector y;
    DistancePowerSet d_powers;
    std::vector<Matrix> dense_powers;

    HyperState() = default;
    HyperState(std::vector<double> coefficients, double noise, gp::Engine route, rla::SketchParams params,
               OptConfig opt = {});

    int m() const { return static_cast<int>(a.size()); }
    Index size() const { return X.rows(); }
    kernels::KernelSpec spec() const;
    kernels::KernelSpec spec(const std::vector<double>& coefficients) const;
};

/// [1, 1/median(D), 1/median(D)^2, ...] from the pairwise distances of X.
std::vector<double> default_coefficients(const Matrix& X, int m);

/// Extend the distance-power representation with a new batch and append X_b
/// to state.X. Outputs are appended separately by absorb().
void update_distance_factors(HyperState& state, const Matrix& X_b);

void absorb(HyperState& state, const Matrix& X_b, const Vector& y_b);

/// (a0 + sigma^2) I + sum a_i U_i S_i U_i^T inverted by nested Woodbury steps,
/// folding the powers in ascending order.
class ChainedInverse {
  public:
    ChainedInverse(const std::vector<rla::SymEigFactor>& factors, const std::vector<double>& a, double noise);

    Matrix apply(const Matrix& V) const;
    Index dim() const { return dim_; }

  private:
    struct Term {
        Matrix W;  // P_{i-1}^{-1} U_i on the retained columns
        Eigen::PartialPivLU<Matrix> core;
    };
    Matrix apply_prefix(const Matrix& V, std::size_t terms) const;

    Index dim_ = 0;
    double base_ = 1.0;
    std::vector<Term> terms_;
};

Matrix chained_inverse_apply(const HyperState& state, const Matrix& V);

/// (K_a + sigma^2 I)^{-1} for the state's route: dense solve for NRMF, the
/// Woodbury chain otherwise.
MatrixAction make_inverse(const HyperState& state, const std::vector<double>& a);

/// In-sample RMSE of predicting the absorbed outputs with coefficients a.
/// Training predictions use the cross-covariance (K_a - a0 I), so they equal
/// y - (a0 + sigma^2) alpha with alpha = (K_a + sigma^2 I)^{-1} y.
double training_objective(const HyperState& state, const std::vector<double>& a);

struct TraceRow {
    Index batch = -1;
    int iteration = 0;
    double objective = 0.0;
    std::vector<double> a;
};

struct OptResult {
    std::vector<double> a;
    double objective = 0.0;
    double start_objective = 0.0;
    int iterations = 0;
    int evaluations = 0;
    /// Set when the search collapsed and the start point was returned.
    bool warning = false;
    std::vector<TraceRow> trace;
};

/// Nelder-Mead on log-coefficients starting from state.a. Never returns a
/// point worse than the start. Does not modify the state.
OptResult optimize_hypers(const HyperState& state);

gp::Prediction predict(const HyperState& state, const Matrix& X_new);

struct ModeResult {
    StreamMetrics metrics;
    std::vector<double> final_coefficients;
    std::vector<TraceRow> trace;
    int optimizer_warnings = 0;
};

struct ModeOptions {
    Labeling labeling = Labeling::SelfLabels;
    /// Initial coefficients; empty picks default_coefficients() on the first batch.
    std::vector<double> initial_coefficients;
    int m = 3;
};

/// Stream the batches under an optimization schedule:
///   NoOpt       fixed coefficients, kernel engine from the first batch;
///   Continuous  re-optimize after every batch;
///   Initial     re-optimize for the first n_steps batches, then freeze;
///   Hybrid      Initial, then switch to the kernel-factor engine.
ModeResult run_mode(const Mode& mode, gp::Engine route, const std::vector<Batch>& stream, double noise_variance,
                    const rla::SketchParams& params, const OptConfig& opt, const ModeOptions& options = {});

void write_trace(const std::string& path, const std::vector<TraceRow>& rows);

}  // namespace srgp::hyperopt
