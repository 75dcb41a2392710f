#include <srgp/data.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace srgp::data {

namespace {

struct Record {
    std::vector<std::string> fields;
    Index line = 0;
};

std::vector<Record> split_records(const std::string& text, char delim) {
    std::vector<Record> out;
    Record rec;
    std::string field;
    bool quoted = false;
    bool any = false;
    Index line = 1;
    rec.line = line;

    auto finish_field = [&] {
        rec.fields.push_back(field);
        field.clear();
    };
    auto finish_record = [&] {
        finish_field();
        const bool blank = rec.fields.size() == 1 && rec.fields[0].find_first_not_of(" \t\r") == std::string::npos;
        if (!blank) out.push_back(std::move(rec));
        rec = Record{};
        any = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (!any) {
            rec.line = line;
            any = true;
        }
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            finish_field();
        } else if (c == '\n') {
            finish_record();
            ++line;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (quoted) throw DataError("csv: unterminated quoted field starting near line " + std::to_string(rec.line));
    if (any) finish_record();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& raw, double& value) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const auto res = std::from_chars(begin, s.data() + s.size(), value);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

int resolve(int column, int width) { return column < 0 ? width + column : column; }

}  // namespace

CsvSchema abalone_schema() {
    CsvSchema s;
    s.name = "abalone";
    s.target_column = 8;
    s.categorical_columns = {0};
    s.levels[0] = {"M", "F", "I"};
    s.expected_columns = 9;
    return s;
}

CsvSchema sarcos_schema() {
    CsvSchema s;
    s.name = "sarcos";
    s.target_column = 21;
    for (int i = 0; i < 21; ++i) s.feature_columns.push_back(i);
    s.expected_columns = 28;
    return s;
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
    auto records = split_records(text, schema.delimiter);
    if (records.empty()) throw DataError("csv: no rows");

    const int width = schema.expected_columns > 0 ? schema.expected_columns
                                                  : static_cast<int>(records.front().fields.size());
    const int target = resolve(schema.target_column, width);
    if (target < 0 || target >= width) throw ConfigError("csv: target column out of range");

    std::vector<int> feature_cols = schema.feature_columns;
    if (feature_cols.empty())
        for (int c = 0; c < width; ++c)
            if (c != target) feature_cols.push_back(c);
    for (auto& c : feature_cols) {
        c = resolve(c, width);
        if (c < 0 || c >= width || c == target) throw ConfigError("csv: bad feature column");
    }
    std::set<int> categorical;
    for (int c : schema.categorical_columns) categorical.insert(resolve(c, width));

    auto numeric_ok = [&](const Record& r) {
        double v = 0.0;
        for (int c : feature_cols)
            if (!categorical.count(c) && !parse_number(r.fields[static_cast<std::size_t>(c)], v)) return false;
        return parse_number(r.fields[static_cast<std::size_t>(target)], v);
    };

    std::vector<std::string> header;
    std::size_t first = 0;
    if (static_cast<int>(records.front().fields.size()) == width) {
        const bool has_header = schema.header == HeaderMode::Yes ||
                                (schema.header == HeaderMode::Auto && !numeric_ok(records.front()));
        if (has_header) {
            header = records.front().fields;
            first = 1;
        }
    } else if (schema.header == HeaderMode::Yes) {
        first = 1;
    }

    // category levels
    std::map<int, std::vector<std::string>> levels;
    for (int c : categorical) {
        auto it = schema.levels.find(c);
        if (it != schema.levels.end()) {
            levels[c] = it->second;
            continue;
        }
        auto& lv = levels[c];
        for (std::size_t r = first; r < records.size(); ++r) {
            if (static_cast<int>(records[r].fields.size()) != width) continue;
            const std::string v = trim(records[r].fields[static_cast<std::size_t>(c)]);
            if (std::find(lv.begin(), lv.end(), v) == lv.end()) lv.push_back(v);
        }
    }

    Dataset ds;
    ds.name = schema.name;
    for (int c : feature_cols) {
        const std::string base = c < static_cast<int>(header.size()) ? trim(header[static_cast<std::size_t>(c)])
                                                                     : "col" + std::to_string(c);
        if (categorical.count(c)) {
            for (const auto& lv : levels[c]) ds.feature_names.push_back(base + "=" + lv);
        } else {
            ds.feature_names.push_back(base);
        }
    }

    const Index rows = static_cast<Index>(records.size() - first);
    const auto dims = static_cast<Index>(ds.feature_names.size());
    ds.features.resize(rows, dims);
    ds.targets.resize(rows);

    for (std::size_t r = first; r < records.size(); ++r) {
        const Record& rec = records[r];
        const Index row = static_cast<Index>(r - first);
        const std::string where = "csv line " + std::to_string(rec.line);
        if (static_cast<int>(rec.fields.size()) != width)
            throw DataError(where + ": expected " + std::to_string(width) + " columns, found " +
                            std::to_string(rec.fields.size()));
        Index col = 0;
        for (int c : feature_cols) {
            const std::string& cell = rec.fields[static_cast<std::size_t>(c)];
            if (categorical.count(c)) {
                const auto& lv = levels[c];
                const auto it = std::find(lv.begin(), lv.end(), trim(cell));
                if (it == lv.end()) throw DataError(where + ": unknown category '" + trim(cell) + "'");
                for (std::size_t k = 0; k < lv.size(); ++k)
                    ds.features(row, col++) = (static_cast<std::size_t>(it - lv.begin()) == k) ? 1.0 : 0.0;
            } else {
                double v = 0.0;
                if (!parse_number(cell, v) || !std::isfinite(v))
                    throw DataError(where + ": column " + std::to_string(c) + " value '" + trim(cell) +
                                    "' is not a finite number");
                ds.features(row, col++) = v;
            }
        }
        double y = 0.0;
        const std::string& tcell = rec.fields[static_cast<std::size_t>(target)];
        if (!parse_number(tcell, y) || !std::isfinite(y))
            throw DataError(where + ": target '" + trim(tcell) + "' is not a finite number");
        ds.targets(row) = y;
    }
    if (ds.size() < 1) throw DataError("csv: no data rows");
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open dataset file " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_csv(buf.str(), schema);
}

Dataset Standardizer::apply(const Dataset& ds) const {
    Dataset out = ds;
    out.features = ((ds.features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    out.targets = ds.targets.array() - target_offset;
    return out;
}

Dataset Standardizer::inverse(const Dataset& ds) const {
    Dataset out = ds;
    out.features = ((ds.features.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose());
    out.targets = ds.targets.array() + target_offset;
    return out;
}

std::pair<Dataset, Standardizer> standardize(const Dataset& ds, Index fit_rows) {
    if (ds.size() == 0) throw DataError("standardize: empty dataset");
    fit_rows = std::clamp<Index>(fit_rows, 1, ds.size());
    const auto head = ds.features.topRows(fit_rows);
    Standardizer st;
    st.mean = head.colwise().mean().transpose();
    st.scale.resize(ds.dims());
    for (Index j = 0; j < ds.dims(); ++j) {
        const double var = (head.col(j).array() - st.mean(j)).square().sum() / static_cast<double>(fit_rows);
        st.scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    st.target_offset = ds.targets.head(fit_rows).mean();
    return {st.apply(ds), st};
}

void StreamPlan::validate() const {
    if (batch_size < 1) throw ConfigError("StreamPlan: batch size must be >= 1");
    if (max_samples < 0) throw ConfigError("StreamPlan: max_samples must be >= 0");
    if (max_samples > 0 && batch_size > max_samples) throw ConfigError("StreamPlan: batch size exceeds max_samples");
}

std::vector<Batch> make_stream(const Dataset& ds, const StreamPlan& plan) {
    plan.validate();
    const Index total = plan.max_samples > 0 ? std::min(plan.max_samples, ds.size()) : ds.size();
    std::vector<Batch> out;
    for (Index start = 0; start < total; start += plan.batch_size) {
        const Index len = std::min(plan.batch_size, total - start);
        out.push_back({ds.features.middleRows(start, len), ds.targets.segment(start, len)});
    }
    return out;
}

void write_synthetic_abalone(const std::filesystem::path& path, Index rows, std::uint64_t seed) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::discrete_distribution<int> sex_dist({0.366, 0.313, 0.321});
    const char* sexes[] = {"M", "F", "I"};

    os << std::fixed;
    for (Index i = 0; i < rows; ++i) {
        const int sex = sex_dist(gen);
        const double mu = sex == 2 ? 7.9 : (sex == 1 ? 11.1 : 10.7);
        const double rings = std::clamp(std::round(std::exp(std::log(mu) + 0.27 * z(gen))), 1.0, 29.0);

        double length = 0.66 * (1.0 - std::exp(-0.13 * (rings + 1.5))) + 0.06 * z(gen);
        if (sex == 2) length *= 0.9;
        length = std::clamp(length, 0.075, 0.815);
        const double diameter = std::clamp(0.8 * length + 0.012 * z(gen), 0.055, 0.65);
        const double height = std::clamp(0.35 * diameter * (1.0 + 0.1 * z(gen)), 0.01, 0.25);
        const double whole = 0.83 * std::pow(length / 0.524, 3.0) * std::exp(0.12 * z(gen));
        const double shucked = whole * 0.43 * std::exp(-0.02 * (rings - 10.0) + 0.08 * z(gen));
        const double viscera = whole * 0.22 * std::exp(0.1 * z(gen));
        const double shell = whole * 0.29 * std::exp(0.02 * (rings - 10.0) + 0.08 * z(gen));

        os << sexes[sex] << std::setprecision(3) << ',' << length << ',' << diameter << ',' << height
           << std::setprecision(4) << ',' << whole << ',' << shucked << ',' << viscera << ',' << shell << ','
           << static_cast<int>(rings) << '\n';
    }
}

void write_synthetic_sarcos(const std::filesystem::path& path, Index rows, std::uint64_t seed) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // each joint follows a sum of two sinusoids; samples are taken along the trajectory
    constexpr int joints = 7;
    double amp[joints][2], freq[joints][2], phase[joints][2], offset[joints];
    for (int j = 0; j < joints; ++j) {
        offset[j] = 0.5 * z(gen);
        for (int h = 0; h < 2; ++h) {
            amp[j][h] = 0.2 + 0.5 * u(gen);
            freq[j][h] = 0.5 + 2.5 * u(gen);
            phase[j][h] = 6.283185307179586 * u(gen);
        }
    }
    const double inertia[joints] = {20.0, 15.0, 8.0, 6.0, 1.5, 1.0, 0.4};

    os << std::setprecision(6);
    for (Index i = 0; i < rows; ++i) {
        const double t = 0.01 * static_cast<double>(i);
        double q[joints], qd[joints], qdd[joints];
        for (int j = 0; j < joints; ++j) {
            q[j] = offset[j];
            qd[j] = 0.0;
            qdd[j] = 0.0;
            for (int h = 0; h < 2; ++h) {
                const double w = freq[j][h], arg = w * t + phase[j][h];
                q[j] += amp[j][h] * std::sin(arg);
                qd[j] += amp[j][h] * w * std::cos(arg);
                qdd[j] -= amp[j][h] * w * w * std::sin(arg);
            }
        }
        double tau[joints];
        for (int j = 0; j < joints; ++j) {
            const int k = (j + 1) % joints;
            tau[j] = inertia[j] * qdd[j] + 0.5 * inertia[j] * std::cos(q[k]) * qdd[k] +
                     0.3 * inertia[j] * std::sin(q[k]) * qd[j] * qd[k] + 2.0 * inertia[j] * std::sin(q[j] + q[k]) +
                     0.8 * qd[j] + 0.5 * z(gen);
        }
        for (int j = 0; j < joints; ++j) os << q[j] << ',';
        for (int j = 0; j < joints; ++j) os << qd[j] << ',';
        for (int j = 0; j < joints; ++j) os << qdd[j] << ',';
        for (int j = 0; j < joints; ++j) os << tau[j] << (j + 1 < joints ? ',' : '\n');
    }
}

Dataset synthetic_smooth(Index rows, Index dims, std::uint64_t seed, double noise_sd) {
    if (dims < 1) throw ConfigError("synthetic_smooth: dims must be >= 1");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::normal_distribution<double> z(0.0, 1.0);
    Dataset ds;
    ds.name = "smooth";
    ds.features.resize(rows, dims);
    ds.targets.resize(rows);
    for (Index j = 0; j < dims; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < dims; ++j) ds.features(i, j) = u(gen);
        double y = std::sin(ds.features(i, 0));
        if (dims > 1) y += 0.5 * std::cos(2.0 * ds.features(i, 1));
        if (dims > 2) y += 0.1 * ds.features(i, 2);
        ds.targets(i) = y + noise_sd * z(gen);
    }
    return ds;
}

}  // namespace srgp::data
