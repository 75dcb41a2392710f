#include "test_util.hpp"

#include <srgp/data.hpp>

#include <filesystem>
#include <fstream>
#include <string>

using namespace srgp;
using namespace srgp::data;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string error_of(const std::string& text, const CsvSchema& schema) {
    try {
        parse_csv(text, schema);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("three-row numeric csv") {
    const auto ds = parse_csv("1,2,3\n4,5,6\n7,8,9\n", CsvSchema{});
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.dims() == 2);
    CHECK(ds.features(0, 0) == 1.0);
    CHECK(ds.features(2, 1) == 8.0);
    CHECK(ds.targets(1) == 6.0);
}

TEST_CASE("abalone row: one-hot sex, seven measurements, rings") {
    const auto ds = parse_csv("M,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,15\n", abalone_schema());
    REQUIRE(ds.size() == 1);
    REQUIRE(ds.dims() == 10);
    CHECK(ds.features(0, 0) == 1.0);
    CHECK(ds.features(0, 1) == 0.0);
    CHECK(ds.features(0, 2) == 0.0);
    CHECK(ds.features(0, 3) == 0.455);
    CHECK(ds.features(0, 9) == 0.15);
    CHECK(ds.targets(0) == 15.0);

    const auto infant = parse_csv("I,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,7\n", abalone_schema());
    CHECK(infant.features(0, 2) == 1.0);
    CHECK(error_of("X,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,7\n", abalone_schema()).find("category") !=
          std::string::npos);
}

TEST_CASE("malformed rows name the offending line") {
    const std::string nan_msg = error_of("1,2,3\n4,nan,6\n", CsvSchema{});
    CHECK(nan_msg.find("line 2") != std::string::npos);
    const std::string text_msg = error_of("1,2,3\n4,5,6\n7,abc,9\n", CsvSchema{});
    CHECK(text_msg.find("line 3") != std::string::npos);
    const std::string width_msg = error_of("1,2,3\n4,5\n", CsvSchema{});
    CHECK(width_msg.find("line 2") != std::string::npos);
    CHECK(width_msg.find("columns") != std::string::npos);
    CHECK(error_of("1,2,inf\n", CsvSchema{}).find("target") != std::string::npos);
    CHECK_THROWS_AS(parse_csv("", CsvSchema{}), DataError);
    CHECK_THROWS_AS(parse_csv("M,1,2,3\n", abalone_schema()), DataError);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_csv("/nonexistent/dir/abalone.csv", abalone_schema()), DataError);
}

TEST_CASE("quoting, delimiters and headers") {
    const auto quoted = parse_csv("\"1.5\",\"2\",3\n4,\"5\",\"6\"\n", CsvSchema{});
    CHECK(quoted.features(0, 0) == 1.5);
    CHECK(quoted.targets(1) == 6.0);

    CsvSchema cat;
    cat.categorical_columns = {0};
    const auto names = parse_csv("\"a,b\",1,2\n\"say \"\"hi\"\"\",3,4\n", cat);
    REQUIRE(names.dims() == 3);
    CHECK(names.features(0, 0) == 1.0);
    CHECK(names.features(1, 1) == 1.0);
    CHECK(names.feature_names[1] == "col0=say \"hi\"");
    CHECK_THROWS_AS(parse_csv("\"open,1,2\n", CsvSchema{}), DataError);

    CsvSchema semi;
    semi.delimiter = ';';
    CHECK(parse_csv("1;2;3\n", semi).targets(0) == 3.0);

    const auto headed = parse_csv("x,y,target\n1,2,3\n", CsvSchema{});
    CHECK(headed.size() == 1);
    CHECK(headed.feature_names[0] == "x");
    CsvSchema no_header;
    no_header.header = HeaderMode::No;
    CHECK_THROWS_AS(parse_csv("x,y,target\n1,2,3\n", no_header), DataError);
    CsvSchema forced;
    forced.header = HeaderMode::Yes;
    CHECK(parse_csv("1,2,3\n4,5,6\n", forced).size() == 1);

    CHECK(parse_csv("1,2,3\r\n4,5,6\r\n", CsvSchema{}).size() == 2);
}

TEST_CASE("explicit target and feature columns") {
    CsvSchema s;
    s.target_column = 0;
    s.feature_columns = {2};
    const auto ds = parse_csv("9,1,2\n8,3,4\n", s);
    REQUIRE(ds.dims() == 1);
    CHECK(ds.targets(1) == 8.0);
    CHECK(ds.features(1, 0) == 4.0);
    s.target_column = 5;
    CHECK_THROWS_AS(parse_csv("9,1,2\n", s), ConfigError);
}

TEST_CASE("standardize fits on the prefix and round-trips") {
    Dataset ds;
    ds.features = test::random_matrix(50, 4, 1) * 3.0;
    ds.features.col(2).setConstant(7.0);
    ds.targets = test::random_matrix(50, 1, 2).col(0).array() + 10.0;
    const auto [z, st] = standardize(ds, 20);
    const auto head = z.features.topRows(20);
    for (Index j = 0; j < 4; ++j) {
        if (j == 2) continue;
        CHECK(std::abs(head.col(j).mean()) <= 1e-12);
        const double var = (head.col(j).array() - head.col(j).mean()).square().mean();
        CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(st.scale(2) == 1.0);
    CHECK(std::abs(z.targets.head(20).mean()) <= 1e-12);
    // statistics depend only on the first 20 rows
    Dataset tail_changed = ds;
    tail_changed.features.bottomRows(30).setConstant(1e6);
    const auto [z2, st2] = standardize(tail_changed, 20);
    CHECK(test::bit_equal(st.mean, st2.mean));
    CHECK(test::bit_equal(st.scale, st2.scale));

    const auto back = st.inverse(z);
    CHECK((back.features - ds.features).cwiseAbs().maxCoeff() <= 1e-12 * ds.features.cwiseAbs().maxCoeff());
    CHECK((back.targets - ds.targets).cwiseAbs().maxCoeff() <= 1e-12 * ds.targets.cwiseAbs().maxCoeff());
}

TEST_CASE("streams: batch count, sizes, order and validation") {
    Dataset ds;
    ds.features = test::random_matrix(23, 2, 3);
    ds.targets = test::random_matrix(23, 1, 4).col(0);
    StreamPlan plan;
    plan.batch_size = 5;
    const auto all = make_stream(ds, plan);
    REQUIRE(all.size() == 5);
    CHECK(all.back().size() == 3);
    CHECK(test::bit_equal(all[1].X, ds.features.middleRows(5, 5)));
    CHECK(test::bit_equal(all[4].y, ds.targets.tail(3)));

    plan.max_samples = 12;
    const auto capped = make_stream(ds, plan);
    REQUIRE(capped.size() == 3);
    CHECK(capped.back().size() == 2);

    const auto again = make_stream(ds, plan);
    for (std::size_t i = 0; i < capped.size(); ++i) CHECK(test::bit_equal(again[i].X, capped[i].X));

    plan.max_samples = 100;
    CHECK(make_stream(ds, plan).size() == 5);

    StreamPlan bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.batch_size = 10;
    bad.max_samples = 5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.max_samples = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("surrogate files parse with the real schemas and are deterministic") {
    const TempDir dir("srgp_test_data");
    write_synthetic_abalone(dir.path / "a.csv", 120, 5);
    write_synthetic_abalone(dir.path / "b.csv", 120, 5);
    const auto a = load_csv(dir.path / "a.csv", abalone_schema());
    const auto b = load_csv(dir.path / "b.csv", abalone_schema());
    REQUIRE(a.size() == 120);
    CHECK(a.dims() == 10);
    CHECK(test::bit_equal(a.features, b.features));
    for (Index i = 0; i < a.size(); ++i) CHECK(a.features.row(i).head(3).sum() == 1.0);
    CHECK(a.targets.minCoeff() >= 1.0);

    write_synthetic_sarcos(dir.path / "s.csv", 80, 6);
    const auto s = load_csv(dir.path / "s.csv", sarcos_schema());
    CHECK(s.size() == 80);
    CHECK(s.dims() == 21);
}

TEST_CASE("smooth synthetic data") {
    const auto ds = synthetic_smooth(200, 3, 7, 0.0);
    CHECK(ds.features.cwiseAbs().maxCoeff() <= 2.0);
    for (Index i = 0; i < ds.size(); ++i) {
        const auto x = ds.features.row(i);
        CHECK(ds.targets(i) == doctest::Approx(std::sin(x(0)) + 0.5 * std::cos(2 * x(1)) + 0.1 * x(2)).epsilon(1e-14));
    }
    CHECK(test::bit_equal(synthetic_smooth(50, 4, 8).features, synthetic_smooth(50, 4, 8).features));
    CHECK_THROWS_AS(synthetic_smooth(10, 0, 1), ConfigError);
}

TEST_CASE("committed fixtures load with the dataset schemas") {
    const std::filesystem::path dir = std::filesystem::path(SRGP_SOURCE_DIR) / "data" / "fixtures";
    const auto abalone = load_csv(dir / "abalone_200.csv", abalone_schema());
    CHECK(abalone.size() == 200);
    CHECK(abalone.dims() == 10);
    const auto sarcos = load_csv(dir / "sarcos_200.csv", sarcos_schema());
    CHECK(sarcos.size() == 200);
    CHECK(sarcos.dims() == 21);
}
