#pragma once

#include <srgp/stream.hpp>
#include <srgp/types.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace srgp::data {

struct Dataset {
    std::string name;
    Matrix features;
    Vector targets;
    std::vector<std::string> feature_names;

    Index size() const { return features.rows(); }
    Index dims() const { return features.cols(); }
};

enum class HeaderMode { No, Yes, Auto };

struct CsvSchema {
    std::string name = "csv";
    /// Target column; negative values count from the end (-1 = last).
    int target_column = -1;
    /// Columns used as features; empty means every non-target column.
    std::vector<int> feature_columns;
    /// Categorical columns, one-hot encoded in place.
    std::vector<int> categorical_columns;
    /// Fixed level order per categorical column. Columns without an entry
    /// take levels in order of first appearance.
    std::map<int, std::vector<std::string>> levels;
    char delimiter = ',';
    HeaderMode header = HeaderMode::Auto;
    /// Required number of columns per row; 0 takes the first data row's count.
    int expected_columns = 0;
};

/// UCI Abalone: sex (M/F/I, one-hot) + 7 measurements, rings as target.
CsvSchema abalone_schema();
/// SARCOS inverse dynamics: 21 inputs, torque of the first joint (22nd column) as target.
CsvSchema sarcos_schema();

/// RFC-4180 style reader (quoted fields, doubled quotes, configurable delimiter).
/// Throws DataError naming the line for malformed rows and non-finite cells.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema);

/// Affine map x -> (x - mean) / scale on features and y -> y - target_offset.
struct Standardizer {
    Vector mean;
    Vector scale;
    double target_offset = 0.0;

    Dataset apply(const Dataset& ds) const;
    Dataset inverse(const Dataset& ds) const;
};

/// z-score the features and center the targets using the first `fit_rows`
/// rows only, so no statistic depends on data the stream has not delivered yet.
std::pair<Dataset, Standardizer> standardize(const Dataset& ds, Index fit_rows);

struct StreamPlan {
    Index batch_size = 100;
    /// 0 streams the whole dataset.
    Index max_samples = 0;
    Labeling labeling = Labeling::SelfLabels;

    void validate() const;
};

/// Consecutive batches in file order; the last batch may be short.
std::vector<Batch> make_stream(const Dataset& ds, const StreamPlan& plan);

/// Deterministic stand-ins that follow the on-disk format of the real files
/// (column layout, categorical coding, value ranges), for CI and offline runs.
void write_synthetic_abalone(const std::filesystem::path& path, Index rows, std::uint64_t seed);
void write_synthetic_sarcos(const std::filesystem::path& path, Index rows, std::uint64_t seed);

/// Uniform inputs on [-2, 2]^dims with y = sin(x0) + 0.5 cos(2 x1) + 0.1 x2 + noise.
Dataset synthetic_smooth(Index rows, Index dims, std::uint64_t seed, double noise_sd = 0.05);

}  // namespace srgp::data
