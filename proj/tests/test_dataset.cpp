#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rcbn/dataset.hpp"
#include "support.hpp"

using namespace rcbn;

namespace {

RawTable parse(std::string_view csv, std::vector<std::string> labels = {}) {
    LoadOptions o;
    o.label_names = std::move(labels);
    return table_from_csv_text(csv, o);
}

RawTable numeric_column(const std::vector<double>& values) {
    RawTable t;
    RawColumn c;
    c.name = "x";
    c.type = ColumnType::Numeric;
    for (double v : values) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        c.cells.push_back(os.str());
    }
    t.n_rows = values.size();
    t.columns.push_back(c);
    return t;
}

}  // namespace

TEST_CASE("load a small CSV with a label") {
    const auto t = parse("a,b,defect\n1,x,0\n2,y,1\n3,x,0\n4,z,1\n", {"defect"});
    CHECK(t.n_rows == 4);
    CHECK(t.column_names() == std::vector<std::string>{"a", "b", "defect"});
    CHECK(t.column("defect").is_label);
    CHECK(t.column("a").type == ColumnType::Numeric);
    CHECK(t.column("b").type == ColumnType::Text);
}

TEST_CASE("load errors") {
    CHECK_THROWS_WITH_AS(parse("a,b\n"), doctest::Contains("empty file"), UsageError);
    CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("empty file"), UsageError);
    CHECK_THROWS_WITH_AS(parse("a,b\n1,2\n", {"missing_col"}), doctest::Contains("unknown label name"),
                         UsageError);
    CHECK_THROWS_AS(parse("a,b\n1,2,3\n"), UsageError);
    CHECK_THROWS_AS(parse("a,a\n1,2\n"), UsageError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {}), UsageError);
}

TEST_CASE("RFC-4180 quoting round-trips") {
    const std::string csv = "name,note\r\n\"a,b\",\"say \"\"hi\"\"\"\r\nc,\"multi\nline\"\r\n";
    const auto rows = parse_csv(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][0] == "a,b");
    CHECK(rows[1][1] == "say \"hi\"");
    CHECK(rows[2][1] == "multi\nline");
    const auto t = parse(csv);
    CHECK(parse_csv(format_csv(t)) == rows);
}

TEST_CASE("quartile binning of 1..8") {
    const auto ds = discretize(numeric_column({1, 2, 3, 4, 5, 6, 7, 8}), 4);
    const auto codes = ds.column(0);
    CHECK(std::vector<std::uint32_t>(codes.begin(), codes.end()) ==
          std::vector<std::uint32_t>{0, 0, 1, 1, 2, 2, 3, 3});
    const auto& edges = *ds.variable(0).bin_edges;
    REQUIRE(edges.size() == 3);
    CHECK(edges[0] == doctest::Approx(2.75));
    CHECK(edges[1] == doctest::Approx(4.5));
    CHECK(edges[2] == doctest::Approx(6.25));
    CHECK(ds.cardinality(0) == 4);
}

TEST_CASE("type-7 quantile oracle") {
    // h = (n-1)p, interpolate between order statistics floor(h) and floor(h)+1
    const std::vector<double> v{1.0, 3.0, 4.0, 10.0};
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 1.0) == 10.0);
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(3.5));
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.0 + 0.75 * 2.0));
}

TEST_CASE("constant column collapses to one state") {
    const auto ds = discretize(numeric_column({5, 5, 5, 5}), 4);
    CHECK(ds.cardinality(0) == 1);
    for (auto c : ds.column(0)) {
        CHECK(c == 0);
    }
}

TEST_CASE("binary numeric column keeps both states whatever the balance") {
    const auto ds = discretize(numeric_column({1, 1, 1, 1, 1, 1, 1, 1, 1, 0}), 4);
    CHECK(ds.cardinality(0) == 2);
    CHECK(ds.column(0)[9] == 0);
    CHECK(ds.column(0)[0] == 1);
}

TEST_CASE("text column uses first-appearance ordinals") {
    const auto ds = discretize(parse("c\na\nb\na\n"), 4);
    const auto codes = ds.column(0);
    CHECK(std::vector<std::uint32_t>(codes.begin(), codes.end()) == std::vector<std::uint32_t>{0, 1, 0});
    CHECK(ds.cardinality(0) == 2);
    CHECK(ds.variable(0).categories == std::vector<std::string>{"a", "b"});
}

TEST_CASE("boolean columns map false to 0 and true to 1") {
    LoadOptions o;
    o.boolean_columns = {"flag"};
    const auto ds = discretize(table_from_csv_text("flag\ntrue\nfalse\n1\n0\n", o), 4);
    const auto codes = ds.column(0);
    CHECK(std::vector<std::uint32_t>(codes.begin(), codes.end()) == std::vector<std::uint32_t>{1, 0, 1, 0});
    CHECK(ds.cardinality(0) == 2);
}

TEST_CASE("missing feature cells get a trailing category; missing labels drop the row") {
    const auto ds = discretize(parse("x,t,y\n1,a,0\n,b,1\n3,,0\n4,a,\n", {"y"}), 4);
    CHECK(ds.n_rows() == 3);
    const auto& x = ds.variable(ds.id_of("x"));
    CHECK(x.has_missing);
    CHECK(ds.column(ds.id_of("x"))[1] == static_cast<std::uint32_t>(x.cardinality - 1));
    const auto& t = ds.variable(ds.id_of("t"));
    CHECK(t.has_missing);
    CHECK(ds.column(ds.id_of("t"))[2] == static_cast<std::uint32_t>(t.cardinality - 1));
    CHECK(ds.variable(ds.id_of("y")).kind == VariableKind::Label);
}

TEST_CASE("ignored columns are dropped") {
    LoadOptions o;
    o.ignore_columns = {"b"};
    const auto t = table_from_csv_text("a,b\n1,2\n", o);
    CHECK(t.column_names() == std::vector<std::string>{"a"});
}

TEST_CASE("numeric encoding properties on random columns") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 20 + static_cast<std::size_t>(rng.below(200));
        const int bins = 2 + static_cast<int>(rng.below(6));
        std::vector<double> values;
        const bool ties = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(ties ? static_cast<double>(rng.below(12)) : rng.uniform() * 100.0);
        }
        const auto table = numeric_column(values);
        const auto ds = discretize(table, bins);
        const auto codes = ds.column(0);
        const auto& edges = *ds.variable(0).bin_edges;
        CHECK(std::is_sorted(edges.begin(), edges.end()));
        CHECK(std::adjacent_find(edges.begin(), edges.end()) == edges.end());
        CHECK(ds.cardinality(0) == static_cast<std::uint32_t>(edges.size() + 1));
        std::vector<std::size_t> occupancy(ds.cardinality(0), 0);
        for (std::size_t i = 0; i < n; ++i) {
            // order preserving
            for (std::size_t j = 0; j < n; ++j) {
                if (values[i] <= values[j]) {
                    CHECK(codes[i] <= codes[j]);
                }
            }
            // round trip: bin k holds (edge[k-1], edge[k]]
            const auto k = codes[i];
            if (k > 0) {
                CHECK(values[i] > edges[k - 1]);
            }
            if (k < edges.size()) {
                CHECK(values[i] <= edges[k]);
            }
            ++occupancy[k];
        }
        for (auto c : occupancy) {
            CHECK(c > 0);
        }
        if (!ties && n >= static_cast<std::size_t>(bins)) {
            const double ideal = static_cast<double>(n) / bins;
            const double slack = std::ceil(static_cast<double>(n) / bins);
            for (auto c : occupancy) {
                CHECK(std::abs(static_cast<double>(c) - ideal) <= slack);
            }
        }
        CHECK(discretize(table, bins) == ds);
    }
}

TEST_CASE("encode_with_schema reuses the training mapping") {
    const auto train_table = parse("x,c,y\n1,a,0\n2,b,1\n3,a,0\n4,b,1\n", {"y"});
    const auto train = discretize(train_table, 2);
    const auto test = encode_with_schema(parse("y,c,x\n1,b,10\n0,z,0\n", {"y"}), train.variables());
    CHECK(test.n_vars() == train.n_vars());
    CHECK(test.column(test.id_of("x"))[0] == train.cardinality(0) - 1);
    CHECK(test.column(test.id_of("x"))[1] == 0);
    CHECK(test.column(test.id_of("c"))[0] == 1);
    CHECK(test.column(test.id_of("c"))[1] == kUnobserved);
    CHECK_THROWS_AS(encode_with_schema(parse("x,y\n1,0\n", {"y"}), train.variables()), UsageError);
    CHECK_THROWS_AS(encode_with_schema(parse("x,c,y\n1,a,maybe\n", {"y"}), train.variables()), UsageError);
}

TEST_CASE("dataset and schema JSON round-trip") {
    const auto ds = discretize(parse("x,c,y\n1.5,a,0\n2,b,1\n,a,0\n4,b,1\n", {"y"}), 4);
    const auto j = dataset_to_json(ds);
    CHECK(j.contains("variables"));
    CHECK(j.contains("data"));
    CHECK(j["n_rows"] == 4);
    CHECK(dataset_from_json(j) == ds);
    CHECK(schema_from_json(schema_to_json(ds.variables())) == ds.variables());
    CHECK(schema_hash(ds.variables()) == schema_hash(schema_from_json(schema_to_json(ds.variables()))));
}

TEST_CASE("stratified split preserves per-stratum proportions") {
    std::string csv = "x,y\n";
    for (int i = 0; i < 100; ++i) {
        csv += std::to_string(i) + "," + (i < 10 ? "1" : "0") + "\n";
    }
    const auto t = parse(csv);
    const auto [train, test] = stratified_split(t, {"y"}, 0.2, 5);
    CHECK(train.n_rows == 80);
    CHECK(test.n_rows == 20);
    const auto& ty = test.column("y").cells;
    CHECK(std::count(ty.begin(), ty.end(), "1") == 2);
    const auto [train2, test2] = stratified_split(t, {"y"}, 0.2, 5);
    CHECK(format_csv(test2) == format_csv(test));
    CHECK_THROWS_AS(stratified_split(t, {"y"}, 1.5, 5), UsageError);
}

TEST_CASE("select_rows and label ids") {
    auto ds = testing::make_dataset({{0, 1, 0}, {1, 1, 0}});
    ds.set_kind(1, VariableKind::Label);
    CHECK(ds.label_ids() == std::vector<VarId>{1});
    const std::vector<std::size_t> rows{2, 0};
    const auto sub = ds.select_rows(rows);
    CHECK(sub.n_rows() == 2);
    CHECK(sub.column(1)[0] == 0);
    CHECK(sub.column(1)[1] == 1);
}
