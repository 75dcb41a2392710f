#include <srgp/bench.hpp>
#include <srgp/svg.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace srgp::bench {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return it->template get<T>();
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os << text;
}

data::CsvSchema schema_for(const DatasetConfig& d) {
    if (d.format == "abalone") return data::abalone_schema();
    if (d.format == "sarcos") return data::sarcos_schema();
    data::CsvSchema s;
    s.name = fs::path(d.path).stem().string();
    s.target_column = d.target_column;
    return s;
}

bool same_values(const StreamMetrics& a, const StreamMetrics& b) {
    if (a.batches.size() != b.batches.size()) return false;
    for (std::size_t i = 0; i < a.batches.size(); ++i) {
        const auto& x = a.batches[i];
        const auto& y = b.batches[i];
        const bool rmse_eq = (std::isnan(x.rmse) && std::isnan(y.rmse)) || x.rmse == y.rmse;
        if (!rmse_eq || x.n_so_far != y.n_so_far || x.retained_rank != y.retained_rank ||
            x.coefficients != y.coefficients)
            return false;
    }
    return true;
}

ExperimentResult run_once(const ExperimentConfig& c, const std::vector<Batch>& stream) {
    ExperimentResult out;
    out.config = c;
    if (stream.empty()) throw DataError("run: the stream has no batches");

    if (c.mode) {
        hyperopt::ModeOptions mo;
        mo.labeling = c.stream.labeling;
        mo.initial_coefficients = c.kernel.coefficients;
        mo.m = c.kernel.m;
        hyperopt::OptConfig opt = c.opt;
        opt.trace_path.clear();
        auto res = hyperopt::run_mode(*c.mode, c.engine, stream, c.kernel.noise_variance, c.sketch, opt, mo);
        out.metrics = std::move(res.metrics);
        out.final_coefficients = std::move(res.final_coefficients);
        out.optimizer_warnings = res.optimizer_warnings;
        out.trace = std::move(res.trace);
    } else {
        kernels::KernelSpec spec;
        if (c.kernel.family == "se") {
            spec = kernels::squared_exponential(c.kernel.lengthscale, c.kernel.signal_variance, c.kernel.noise_variance);
        } else {
            auto a = c.kernel.coefficients.empty() ? hyperopt::default_coefficients(stream.front().X, c.kernel.m)
                                                   : c.kernel.coefficients;
            spec = kernels::poly_distance(a, c.kernel.noise_variance);
            out.final_coefficients = a;
        }
        gp::StreamOptions so;
        so.labeling = c.stream.labeling;
        so.factor_oracle = c.factor_oracle;
        out.metrics = gp::stream_run(c.engine, stream, spec, c.sketch, so);
    }
    out.metrics.label = c.name;
    return out;
}

svg::Series series_of(const StreamMetrics& m, bool rmse) {
    svg::Series s;
    s.name = m.label;
    for (const auto& b : m.batches) {
        s.x.push_back(static_cast<double>(b.n_so_far));
        s.y.push_back(rmse ? b.rmse : b.seconds);
    }
    return s;
}

void write_plots(const std::vector<const StreamMetrics*>& all, const fs::path& dir) {
    std::vector<svg::Series> time, rmse;
    for (const auto* m : all) {
        time.push_back(series_of(*m, false));
        rmse.push_back(series_of(*m, true));
    }
    write_text(dir / "plots" / "time_per_batch.svg",
               svg::line_plot(time, {"Time per batch", "training points", "seconds", true}));
    write_text(dir / "plots" / "rmse_per_batch.svg",
               svg::line_plot(rmse, {"RMSE per batch", "training points", "RMSE", false}));
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Index default_max_samples(const std::string& format) {
    if (format == "abalone") return 4000;
    if (format == "sarcos") return 10000;
    return 0;
}

void ExperimentConfig::validate() const {
    static const std::set<std::string> formats{"abalone", "sarcos", "csv", "smooth"};
    if (!formats.count(dataset.format)) throw ConfigError("dataset.format must be abalone, sarcos, csv or smooth");
    if (dataset.format == "csv" && dataset.synthetic) throw ConfigError("dataset.synthetic needs abalone or sarcos");
    if (dataset.format != "smooth" && !dataset.synthetic && dataset.path.empty())
        throw ConfigError("dataset.path is required unless dataset.synthetic is set");
    if (dataset.rows < 1) throw ConfigError("dataset.rows must be >= 1");
    if (dataset.dims < 1) throw ConfigError("dataset.dims must be >= 1");
    stream.validate();
    if (kernel.family != "se" && kernel.family != "poly") throw ConfigError("kernel.family must be se or poly");
    if (!(kernel.noise_variance > 0.0)) throw ConfigError("kernel.noise_variance must be > 0");
    if (kernel.family == "se") {
        kernels::squared_exponential(kernel.lengthscale, kernel.signal_variance, kernel.noise_variance).validate();
        if (mode) throw ConfigError("hyperopt modes require kernel.family = poly");
    } else {
        if (kernel.m < 2) throw ConfigError("kernel.m must be >= 2");
        if (!kernel.coefficients.empty()) {
            if (static_cast<int>(kernel.coefficients.size()) != kernel.m)
                throw ConfigError("kernel.coefficients must have m entries");
            kernels::poly_distance(kernel.coefficients, kernel.noise_variance).validate();
        }
    }
    if (mode && mode->n_steps < 1) throw ConfigError("hyperopt.n_steps must be >= 1");
    if (mode && factor_oracle) throw ConfigError("oracle applies to kernel runs, not hyperopt modes");
    opt.validate();
    sketch.validate();
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (name.empty()) throw ConfigError("name must not be empty");
}

ExperimentConfig parse_config(const Json& j) {
    try {
        check_keys(j, {"schema_version", "name", "seed", "dataset", "stream", "engine", "kernel", "hyperopt", "sketch",
                       "oracle", "output", "repeats"},
                   "config");
        const int version = get_or(j, "schema_version", kConfigSchemaVersion);
        if (version != kConfigSchemaVersion)
            throw ConfigError("config: schema_version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kConfigSchemaVersion) + ")");
        ExperimentConfig c;
        c.name = get_or<std::string>(j, "name", c.name);
        c.seed = get_or<std::uint64_t>(j, "seed", 0);
        c.factor_oracle = get_or(j, "oracle", false);
        c.output_dir = get_or<std::string>(j, "output", c.output_dir);
        c.repeats = get_or(j, "repeats", 1);
        c.engine = gp::parse_engine(get_or<std::string>(j, "engine", "SRMF"));

        const Json d = j.value("dataset", Json::object());
        check_keys(d, {"format", "path", "synthetic", "rows", "seed", "dims", "standardize", "target_column"},
                   "dataset");
        c.dataset.format = get_or<std::string>(d, "format", c.dataset.format);
        c.dataset.path = get_or<std::string>(d, "path", "");
        c.dataset.synthetic = get_or(d, "synthetic", false);
        c.dataset.rows = get_or<Index>(d, "rows", c.dataset.format == "sarcos" ? 10000 : c.dataset.rows);
        c.dataset.seed = get_or<std::uint64_t>(d, "seed", c.seed);
        c.dataset.dims = get_or<Index>(d, "dims", c.dataset.dims);
        c.dataset.standardize = get_or(d, "standardize", true);
        c.dataset.target_column = get_or(d, "target_column", -1);

        const Json s = j.value("stream", Json::object());
        check_keys(s, {"batch_size", "max_samples", "labeling"}, "stream");
        c.stream.batch_size = get_or<Index>(s, "batch_size", 100);
        c.stream.max_samples = get_or<Index>(s, "max_samples", default_max_samples(c.dataset.format));
        c.stream.labeling = parse_labeling(get_or<std::string>(s, "labeling", "self"));

        const Json k = j.value("kernel", Json::object());
        check_keys(k, {"family", "lengthscale", "signal_variance", "coefficients", "m", "noise_variance"}, "kernel");
        c.kernel.family = get_or<std::string>(k, "family", c.kernel.family);
        c.kernel.lengthscale = get_or(k, "lengthscale", c.kernel.lengthscale);
        c.kernel.signal_variance = get_or(k, "signal_variance", c.kernel.signal_variance);
        c.kernel.noise_variance = get_or(k, "noise_variance", c.kernel.noise_variance);
        c.kernel.m = get_or(k, "m", c.kernel.m);
        if (k.contains("coefficients") && !(k["coefficients"].is_string() && k["coefficients"] == "auto") &&
            !k["coefficients"].is_null())
            c.kernel.coefficients = k["coefficients"].get<std::vector<double>>();
        if (!c.kernel.coefficients.empty() && !k.contains("m")) c.kernel.m = static_cast<int>(c.kernel.coefficients.size());

        const Json h = j.value("hyperopt", Json::object());
        check_keys(h, {"mode", "n_steps", "max_iters", "tolerance", "initial_step", "holdout_fraction", "seed", "trace"},
                   "hyperopt");
        const std::string mode = get_or<std::string>(h, "mode", "off");
        if (mode != "off") {
            hyperopt::Mode m;
            m.kind = hyperopt::parse_mode(mode);
            m.n_steps = get_or(h, "n_steps", m.n_steps);
            c.mode = m;
        }
        c.opt.max_iters = get_or(h, "max_iters", c.opt.max_iters);
        c.opt.objective_tolerance = get_or(h, "tolerance", c.opt.objective_tolerance);
        c.opt.initial_step = get_or(h, "initial_step", c.opt.initial_step);
        c.opt.holdout_fraction = get_or(h, "holdout_fraction", c.opt.holdout_fraction);
        c.opt.rng_seed = get_or<std::uint64_t>(h, "seed", c.seed);
        c.write_trace = get_or(h, "trace", false);

        const Json sk = j.value("sketch", Json::object());
        check_keys(sk, {"k", "p", "seed", "truncate"}, "sketch");
        c.sketch.k = get_or(sk, "k", c.sketch.k);
        c.sketch.p = get_or(sk, "p", c.sketch.p);
        c.sketch.seed = get_or<std::uint64_t>(sk, "seed", c.seed);
        c.sketch.truncate_to_k = get_or(sk, "truncate", false);

        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const Error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(e.what());
    }
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["dataset"] = {{"format", c.dataset.format},   {"path", c.dataset.path}, {"synthetic", c.dataset.synthetic},
                    {"rows", c.dataset.rows},       {"seed", c.dataset.seed}, {"dims", c.dataset.dims},
                    {"standardize", c.dataset.standardize}, {"target_column", c.dataset.target_column}};
    j["stream"] = {{"batch_size", c.stream.batch_size},
                   {"max_samples", c.stream.max_samples},
                   {"labeling", to_string(c.stream.labeling)}};
    j["engine"] = gp::to_string(c.engine);
    j["kernel"] = {{"family", c.kernel.family},
                   {"lengthscale", c.kernel.lengthscale},
                   {"signal_variance", c.kernel.signal_variance},
                   {"m", c.kernel.m},
                   {"noise_variance", c.kernel.noise_variance}};
    j["kernel"]["coefficients"] = c.kernel.coefficients.empty() ? Json("auto") : Json(c.kernel.coefficients);
    j["hyperopt"] = {{"mode", c.mode ? hyperopt::to_string(c.mode->kind) : "off"},
                     {"n_steps", c.mode ? c.mode->n_steps : hyperopt::Mode{}.n_steps},
                     {"max_iters", c.opt.max_iters},
                     {"tolerance", c.opt.objective_tolerance},
                     {"initial_step", c.opt.initial_step},
                     {"holdout_fraction", c.opt.holdout_fraction},
                     {"seed", c.opt.rng_seed},
                     {"trace", c.write_trace}};
    j["sketch"] = {{"k", c.sketch.k}, {"p", c.sketch.p}, {"seed", c.sketch.seed}, {"truncate", c.sketch.truncate_to_k}};
    j["oracle"] = c.factor_oracle;
    j["output"] = c.output_dir;
    j["repeats"] = c.repeats;
    return j;
}

Json load_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    try {
        return Json::parse(is, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    Json value;
    try {
        value = Json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw;
    }

    Json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override '" + assignment + "' descends into a non-object");
            *node = Json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::vector<Batch> load_stream(const ExperimentConfig& c) {
    const auto& d = c.dataset;
    data::Dataset ds;
    if (d.format == "smooth") {
        ds = data::synthetic_smooth(d.rows, d.dims, d.seed);
    } else {
        fs::path path = d.path;
        if (d.synthetic) {
            path = fs::path(c.output_dir) / "data" / (d.format + "_surrogate.csv");
            fs::create_directories(path.parent_path());
            if (d.format == "abalone")
                data::write_synthetic_abalone(path, d.rows, d.seed);
            else
                data::write_synthetic_sarcos(path, d.rows, d.seed);
        }
        ds = data::load_csv(path, schema_for(d));
    }
    if (d.standardize) ds = data::standardize(ds, std::min(c.stream.batch_size, ds.size())).first;
    return data::make_stream(ds, c.stream);
}

ExperimentResult run_experiment(const ExperimentConfig& config) { return run_experiment(config, load_stream(config)); }

ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<Batch>& stream) {
    config.validate();
    ExperimentResult first = run_once(config, stream);
    if (config.repeats == 1) return first;

    std::vector<std::vector<double>> times(first.metrics.batches.size());
    for (std::size_t b = 0; b < times.size(); ++b) times[b].push_back(first.metrics.batches[b].seconds);
    for (int r = 1; r < config.repeats; ++r) {
        const ExperimentResult again = run_once(config, stream);
        if (!same_values(first.metrics, again.metrics))
            throw NumericalError("run: repeat " + std::to_string(r) + " produced different metrics");
        for (std::size_t b = 0; b < times.size(); ++b) times[b].push_back(again.metrics.batches[b].seconds);
    }
    for (std::size_t b = 0; b < times.size(); ++b) {
        auto& v = times[b];
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        first.metrics.batches[b].seconds = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }
    return first;
}

std::string metrics_csv(const StreamMetrics& m) {
    std::ostringstream os;
    os << "batch,n_so_far,rmse,retained_rank,factor_error,clamped_variances,coefficients,seconds\n";
    for (const auto& b : m.batches) {
        os << b.index << ',' << b.n_so_far << ',' << g17(b.rmse) << ',' << b.retained_rank << ','
           << g17(b.factor_error) << ',' << b.clamped_variances << ',';
        for (std::size_t i = 0; i < b.coefficients.size(); ++i) os << (i ? ";" : "") << g17(b.coefficients[i]);
        os << ',' << g17(b.seconds) << '\n';
    }
    return os.str();
}

double fit_exponent(const StreamMetrics& m, Index from_batch) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (const auto& b : m.batches) {
        if (b.index < from_batch || b.seconds <= 0.0 || b.n_so_far <= 0) continue;
        const double x = std::log(static_cast<double>(b.n_so_far));
        const double y = std::log(b.seconds);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double den = count * sxx - sx * sx;
    if (count < 2 || den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (count * sxy - sx * sy) / den;
}

Json summary_json(const ExperimentResult& r) {
    const auto& m = r.metrics;
    Index clamped = 0;
    for (const auto& b : m.batches) clamped += b.clamped_variances;
    Json j;
    j["name"] = r.config.name;
    j["engine"] = gp::to_string(r.config.engine);
    j["mode"] = r.config.mode ? hyperopt::to_string(r.config.mode->kind) : "off";
    j["batches"] = m.batches.size();
    j["n_final"] = m.batches.empty() ? 0 : m.batches.back().n_so_far;
    j["mean_rmse"] = finite_or_null(m.mean_rmse());
    j["mean_seconds"] = m.mean_seconds();
    j["total_seconds"] = m.total_seconds();
    j["time_exponent"] = finite_or_null(fit_exponent(m, static_cast<Index>(m.batches.size() / 2)));
    j["clamped_variances"] = clamped;
    j["final_coefficients"] = r.final_coefficients;
    j["optimizer_warnings"] = r.optimizer_warnings;
    j["config"] = to_json(r.config);
    return j;
}

void write_outputs(const ExperimentResult& r, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "metrics.csv", metrics_csv(r.metrics));
    write_text(dir / "summary.json", summary_json(r).dump(2) + "\n");
    write_plots({&r.metrics}, dir);
    if (r.config.write_trace) hyperopt::write_trace((dir / "trace.csv").string(), r.trace);
}

std::vector<ExperimentConfig> expand_suite(const Json& suite) {
    try {
        check_keys(suite, {"schema_version", "base", "experiments", "output"}, "suite");
        const Json base = suite.value("base", Json::object());
        if (!suite.contains("experiments") || !suite["experiments"].is_array() || suite["experiments"].empty())
            throw ConfigError("suite: experiments must be a non-empty array");
        std::vector<ExperimentConfig> out;
        std::set<std::string> names;
        for (const auto& patch : suite["experiments"]) {
            Json doc = base;
            doc.merge_patch(patch);
            if (suite.contains("output") && !patch.contains("output"))
                doc["output"] = (fs::path(suite["output"].get<std::string>()) / doc.value("name", "experiment")).string();
            ExperimentConfig c = parse_config(doc);
            if (!names.insert(c.name).second) throw ConfigError("suite: duplicate experiment name '" + c.name + "'");
            out.push_back(std::move(c));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("suite: ") + e.what());
    }
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs) {
    SuiteResult out;
    for (const auto& c : configs) {
        ExperimentResult r = run_experiment(c);
        SuiteRow row;
        row.name = c.name;
        row.engine = gp::to_string(c.engine);
        row.mode = c.mode ? hyperopt::to_string(c.mode->kind) : "off";
        row.batches = static_cast<Index>(r.metrics.batches.size());
        row.mean_rmse = r.metrics.mean_rmse();
        row.mean_seconds = r.metrics.mean_seconds();
        row.total_seconds = r.metrics.total_seconds();
        row.time_exponent = fit_exponent(r.metrics, row.batches / 2);
        out.rows.push_back(row);
        out.runs.push_back(std::move(r));
    }
    return out;
}

void write_suite(const SuiteResult& s, const fs::path& dir) {
    fs::create_directories(dir);
    std::ostringstream csv;
    csv << "name,engine,mode,batches,mean_rmse,mean_seconds,total_seconds,time_exponent\n";
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        csv << r.name << ',' << r.engine << ',' << r.mode << ',' << r.batches << ',' << g17(r.mean_rmse) << ','
            << g17(r.mean_seconds) << ',' << g17(r.total_seconds) << ',' << g17(r.time_exponent) << '\n';
        rows.push_back({{"name", r.name},
                        {"engine", r.engine},
                        {"mode", r.mode},
                        {"batches", r.batches},
                        {"mean_rmse", finite_or_null(r.mean_rmse)},
                        {"mean_seconds", r.mean_seconds},
                        {"total_seconds", r.total_seconds},
                        {"time_exponent", finite_or_null(r.time_exponent)}});
    }
    write_text(dir / "comparison.csv", csv.str());
    write_text(dir / "comparison.json", rows.dump(2) + "\n");
    std::vector<const StreamMetrics*> all;
    for (const auto& r : s.runs) {
        write_outputs(r, dir / r.config.name);
        all.push_back(&r.metrics);
    }
    write_plots(all, dir);
}

BoundsReport verify_bounds(const BoundsConfig& c) {
    if (c.seeds < 1 || c.batches < 1 || c.batch_size < 1) throw ConfigError("verify-bounds: counts must be >= 1");
    c.sketch.validate();
    const auto spec = kernels::squared_exponential(c.lengthscale, c.signal_variance, 1.0);
    const Index n_total = c.batch_size * c.batches;
    if (n_total > 2000) throw ConfigError("verify-bounds: the dense oracle is limited to n <= 2000");

    BoundsReport report;
    for (int r = 0; r < c.seeds; ++r) {
        const std::uint64_t seed = c.first_seed + static_cast<std::uint64_t>(r);
        const Matrix X = data::synthetic_smooth(n_total, c.dims, seed).features;
        rla::SketchParams params = c.sketch;
        params.seed = seed;

        rla::SymEigFactor factor;
        double bound = 0.0;
        bool violated = false;
        for (int t = 0; t < c.batches; ++t) {
            const Index n = c.batch_size * (t + 1);
            const Matrix K = spec.gram(X.topRows(n));
            if (t == 0) {
                factor = rla::approx_eig([&K](const Matrix& W) -> Matrix { return K * W; }, n, params);
            } else {
                const Index prev = n - c.batch_size;
                factor = rla::seq_update(factor, K.topRightCorner(prev, c.batch_size),
                                         K.bottomRightCorner(c.batch_size, c.batch_size), params);
            }
            bound += 2.0 * rla::sketch_error_term(K, params);
            const double err = rla::sym_spectral_norm(K - factor.reconstruct());
            const double ratio = bound > 0.0 ? err / bound : (err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            report.max_ratio = std::max(report.max_ratio, ratio);
            if (err > bound) violated = true;
            report.rows.push_back({seed, t, n, err, bound});
        }
        ++report.runs;
        if (violated) ++report.violating_runs;
    }
    return report;
}

void write_bounds(const BoundsReport& report, const fs::path& dir) {
    std::ostringstream csv;
    csv << "seed,batch,n,error,bound\n";
    for (const auto& r : report.rows)
        csv << r.seed << ',' << r.batch << ',' << r.n << ',' << g17(r.error) << ',' << g17(r.bound) << '\n';
    write_text(dir / "bounds.csv", csv.str());
    Json j{{"runs", report.runs},
           {"violating_runs", report.violating_runs},
           {"pass_fraction", report.pass_fraction()},
           {"max_ratio", report.max_ratio}};
    write_text(dir / "bounds_summary.json", j.dump(2) + "\n");
}

}  // namespace srgp::bench
