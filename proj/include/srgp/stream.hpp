#pragma once

#include <srgp/types.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace srgp {

struct Batch {
    Matrix X;
    Vector y;

    Index size() const { return X.rows(); }
};

enum class Labeling { TrueLabels, SelfLabels };

std::string to_string(Labeling labeling);
Labeling parse_labeling(const std::string& text);

struct BatchRecord {
    Index index = 0;
    /// Training-set size after the batch was absorbed.
    Index n_so_far = 0;
    /// RMSE of the predictions for this batch against its held true labels.
    /// NaN for the initial batch, which is only used for training.
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
    Index retained_rank = 0;
    /// Spectral-norm error of the tracked factor against the dense matrix;
    /// NaN unless the dense oracle was enabled.
    double factor_error = std::numeric_limits<double>::quiet_NaN();
    Index clamped_variances = 0;
    std::vector<double> coefficients;

    bool predicted() const { return !std::isnan(rmse); }
};

struct StreamMetrics {
    std::string label;
    std::vector<BatchRecord> batches;

    double mean_rmse() const;
    double mean_seconds() const;
    double total_seconds() const;
};

}  // namespace srgp
