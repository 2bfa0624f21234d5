#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace simdiv;
using namespace testsupport;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("csv parser handles rfc-4180 quoting", "[io]") {
    std::istringstream in(
        "a,\"b,c\",\"say \"\"hi\"\"\"\r\n"
        "\"multi\nline\",2,3\n"
        "x,y,z");
    auto records = io::read_csv(in);
    REQUIRE(records.size() == 3);
    CHECK(records[0][0] == "a");
    CHECK(records[0][1] == "b,c");
    CHECK(records[0][2] == "say \"hi\"");
    CHECK(records[1][0] == "multi\nline");
    CHECK(records[2][2] == "z");

    std::istringstream unterminated("\"open");
    CHECK_THROWS_AS(io::read_csv(unterminated), Error);
}

TEST_CASE("matrix csv io round-trips at full precision", "[io]") {
    SECTION("header rows are auto-skipped") {
        std::istringstream in("c0,c1\n1.0,2.0\n3.0,4.0\n");
        Matrix m = io::read_matrix_csv(in);
        REQUIRE(m.rows() == 2);
        CHECK(m(1, 0) == 3.0);
    }
    SECTION("ragged and non-numeric rows are rejected") {
        std::istringstream ragged("1,2\n3\n");
        CHECK_THROWS_AS(io::read_matrix_csv(ragged), Error);
        std::istringstream alpha("1,2\n3,oops\n");
        CHECK_THROWS_WITH(io::read_matrix_csv(alpha),
                          Catch::Matchers::ContainsSubstring("non-numeric"));
        std::istringstream empty("");
        CHECK_THROWS_AS(io::read_matrix_csv(empty), Error);
    }
    SECTION("write then read is bit exact") {
        Rng rng(501);
        Matrix m(4, 3);
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e3;
        std::ostringstream out;
        io::write_matrix_csv(out, m);
        std::istringstream in(out.str());
        Matrix back = io::read_matrix_csv(in);
        REQUIRE(back.rows() == m.rows());
        REQUIRE(back.cols() == m.cols());
        for (Index i = 0; i < m.size(); ++i) {
            CHECK(back.data()[i] == m.data()[i]);
        }
    }
}

TEST_CASE("order parsing", "[io]") {
    CHECK(io::parse_order("2.5") == 2.5);
    CHECK(io::parse_order(" inf ") == order::infinity);
    CHECK(io::parse_order("-inf") == -order::infinity);
    CHECK(io::parse_order("Infinity") == order::infinity);
    CHECK_THROWS_AS(io::parse_order("nan"), Error);
    CHECK_THROWS_AS(io::parse_order("q"), Error);

    auto orders = io::parse_order_list("0,1,2,inf");
    REQUIRE(orders.size() == 4);
    CHECK(orders[3] == order::infinity);
    CHECK_THROWS_AS(io::parse_order_list(""), Error);

    CHECK(io::format_order(order::infinity) == "inf");
    CHECK(io::format_order(-order::infinity) == "-inf");
    CHECK(io::format_order(0.5) == "0.5");
}

TEST_CASE("feature loading drops identifier and non-numeric columns", "[io]") {
    SECTION("clean numeric csv keeps everything") {
        std::istringstream in("f0,f1\n1,2\n3,4\n5,6\n");
        auto report = io::load_features(in);
        CHECK(report.features.rows() == 3);
        CHECK(report.features.cols() == 2);
        CHECK(report.dropped_columns.empty());
        CHECK(report.kept_columns == std::vector<std::string>{"f0", "f1"});
    }
    SECTION("id and string columns are dropped with reasons") {
        std::istringstream in(
            "ID,height,species,weight\n"
            "a1,1.5,cat,4.0\n"
            "a2,1.7,dog,8.5\n");
        auto report = io::load_features(in);
        REQUIRE(report.dropped_columns.size() == 2);
        CHECK(report.dropped_columns[0].first == "ID");
        CHECK(report.dropped_columns[0].second == "identifier column");
        CHECK(report.dropped_columns[1].first == "species");
        CHECK_THAT(report.dropped_columns[1].second,
                   Catch::Matchers::ContainsSubstring("non-numeric"));
        CHECK(report.features.cols() == 2);
        CHECK(report.features(1, 0) == 1.7);
    }
    SECTION("nothing numeric left is an error") {
        std::istringstream in("id,name\n1,a\n2,b\n");
        CHECK_THROWS_WITH(io::load_features(in),
                          Catch::Matchers::ContainsSubstring("no numeric"));
    }
    SECTION("subsampling is deterministic in the seed") {
        std::ostringstream data;
        data << "x\n";
        for (int i = 0; i < 100; ++i) data << i << "\n";
        io::FeatureCsvOptions options;
        options.subsample = 10;
        options.seed = 77;
        std::istringstream in1(data.str()), in2(data.str()), in3(data.str());
        auto a = io::load_features(in1, options);
        auto b = io::load_features(in2, options);
        REQUIRE(a.features.rows() == 10);
        CHECK(a.features == b.features);
        CHECK(a.rows_before_subsample == 100);
        options.seed = 78;
        auto c = io::load_features(in3, options);
        CHECK(a.features != c.features);
        // rows keep their file order within the sample
        for (Index i = 1; i < a.features.rows(); ++i) {
            CHECK(a.features(i, 0) > a.features(i - 1, 0));
        }
    }
    SECTION("subsample larger than the data keeps all rows") {
        std::istringstream in("x\n1\n2\n");
        io::FeatureCsvOptions options;
        options.subsample = 10;
        auto report = io::load_features(in, options);
        CHECK(report.features.rows() == 2);
    }
}

TEST_CASE("search record serialization", "[io]") {
    SearchGrid grid;
    grid.orders = {1.0, order::infinity};
    grid.sizes = {3};
    grid.scales = {1.0};
    grid.replicates = 1;
    SearchSettings settings;
    settings.seed = 3;
    auto records = counterexample_search(grid, settings);
    REQUIRE(records.size() == 4);

    SECTION("json lines carry the grid point, seed, gap, status, and Z") {
        auto j = io::search_record_json(records[0]);
        CHECK(j["q"] == 1.0);
        CHECK(j["n"] == 3);
        CHECK(j["seed"] == records[0].seed);
        CHECK(j["status"] == "converged");
        CHECK(j["Z"].size() == 9);
        auto jinf = io::search_record_json(records[2]);
        CHECK(jinf["q"] == "inf");
    }
    SECTION("summary csv has one line per grid point") {
        std::ostringstream out;
        io::write_search_summary_csv(out, records);
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        CHECK(line == "q,n,r,scale,min_gap,candidates,failures");
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 4);  // two orders x two ranks
    }
}

TEST_CASE("sweep serialization", "[io]") {
    auto d = [] {
        Matrix m(2, 2);
        m << 0.0, 1.0, 1.0, 0.0;
        return DistanceMatrix::adopt(m);
    }();
    auto result = sweep_half_distance({d}, {0.5, 1.0}, {1.0});

    std::ostringstream cells;
    io::write_sweep_cells_csv(cells, result);
    CHECK(cells.str().rfind("dataset_id,k,q,lcr,vs,status\n", 0) == 0);

    std::ostringstream stats;
    io::write_sweep_stats_csv(stats, result);
    CHECK(stats.str().rfind("k,q,pearson,r2,cov,flag\n", 0) == 0);
}

TEST_CASE("findings persistence appends json lines", "[io]") {
    const std::string path = temp_path("simdiv_findings_test.jsonl");
    std::remove(path.c_str());

    Matrix z(2, 2);
    z << 1.0, 0.5, 0.5, 1.0;
    GapReport report = vs_lcr_gap(SimilarityMatrix::adopt(z), 1.0);
    io::append_finding(path, io::gap_finding("unit-test", report, z));
    io::append_finding(path, io::gap_finding("unit-test", report, z));

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j["kind"] == "unit-test");
        CHECK(j["n"] == 2);
        CHECK(j["Z"].size() == 4);
        ++count;
    }
    CHECK(count == 2);
    std::remove(path.c_str());
}
