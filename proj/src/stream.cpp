#include <srgp/stream.hpp>

namespace srgp {

std::string to_string(Labeling labeling) { return labeling == Labeling::TrueLabels ? "true" : "self"; }

Labeling parse_labeling(const std::string& text) {
    if (text == "true" || text == "true_labels") return Labeling::TrueLabels;
    if (text == "self" || text == "self_labels") return Labeling::SelfLabels;
    throw ConfigError("unknown labeling mode '" + text + "' (expected true|self)");
}

double StreamMetrics::mean_rmse() const {
    double sum = 0.0;
    int count = 0;
    for (const auto& b : batches)
        if (b.predicted()) {
            sum += b.rmse;
            ++count;
        }
    return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

// Mean over every batch, including the initial training batch.
double StreamMetrics::mean_seconds() const {
    return batches.empty() ? 0.0 : total_seconds() / static_cast<double>(batches.size());
}

double StreamMetrics::total_seconds() const {
    double sum = 0.0;
    for (const auto& b : batches) sum += b.seconds;
    return sum;
}

}  // namespace srgp
