#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "qhpi/data.hpp"
#include "support.hpp"

using namespace qhpi;

namespace {

DatasetManifest manifest(std::string label = "class", std::string positive = "1", std::vector<std::string> cats = {}) {
    DatasetManifest m;
    m.name = "toy";
    m.label_column = std::move(label);
    m.positive_label = std::move(positive);
    m.categorical_columns = std::move(cats);
    return m;
}

RawTable table(std::vector<std::string> cols, std::vector<std::vector<std::string>> rows) {
    RawTable t;
    t.columns = std::move(cols);
    t.nominal.assign(t.columns.size(), false);
    t.rows = std::move(rows);
    return t;
}

std::vector<int> labels_with(std::size_t ones, std::size_t zeros) {
    std::vector<int> v(ones, 1);
    v.insert(v.end(), zeros, 0);
    return v;
}

}  // namespace

TEST(Csv, QuotingAndLineEndings) {
    const auto rows = csv::parse("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",3\n4,,6");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1], (csv::Row{"x, y", "say \"hi\"", "3"}));
    EXPECT_EQ(rows[2], (csv::Row{"4", "", "6"}));
}

TEST(Csv, FormatRoundTrip) {
    const csv::Row row{"plain", "with,comma", "with \"quote\"", "", "line\nbreak"};
    const auto parsed = csv::parse(csv::format_row(row));
    ASSERT_EQ(parsed.size(), 1u);
    EXPECT_EQ(parsed[0], row);
}

TEST(Arff, NominalAttributesAndComments) {
    const std::string text =
        "% comment\n@RELATION toy\n@ATTRIBUTE x NUMERIC\n@attribute 'colour name' {red, 'dark blue'}\n"
        "@attribute class {0,1}\n\n@DATA\n1.5,red,0\n% skipped\n2,'dark blue',1\n?,red,1\n";
    const auto t = parse_arff(text);
    EXPECT_EQ(t.columns, (std::vector<std::string>{"x", "colour name", "class"}));
    EXPECT_EQ(t.nominal, (std::vector<bool>{false, true, true}));
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.rows[1][1], "dark blue");
    EXPECT_TRUE(is_missing(t.rows[2][0]));
}

TEST(Arff, Malformed) {
    EXPECT_THROW(parse_arff("@relation r\n@attribute x numeric\n"), ParseError);
    EXPECT_THROW(parse_arff("@relation r\n@attribute x numeric\n@data\n1,2\n"), ParseError);
}

TEST(LoadDataset, Errors) {
    support::TempDir dir;
    support::write_text(dir / "empty.csv", "");
    EXPECT_THROW(load_dataset((dir / "empty.csv").string(), manifest()), ParseError);
    support::write_text(dir / "multi.csv", "x,class\n1,0\n2,1\n3,2\n");
    EXPECT_THROW(load_dataset((dir / "multi.csv").string(), manifest()), ValidationError);
    support::write_text(dir / "ok.csv", "x,class\n1,0\n2,1\n");
    EXPECT_THROW(load_dataset((dir / "ok.csv").string(), manifest("target")), ParseError);
    EXPECT_THROW(load_dataset((dir / "ok.csv").string(), manifest("class", "1", {"nope"})), ParseError);
    EXPECT_THROW(load_dataset((dir / "ok.csv").string(), manifest("class", "yes")), ValidationError);
    EXPECT_THROW(load_dataset((dir / "missing.csv").string(), manifest()), std::exception);
}

TEST(LoadDataset, CsvAndArffAgree) {
    support::TempDir dir;
    support::write_text(dir / "t.csv", "x,c,class\n1,a,p\n2,b,n\n3,a,p\n4,b,n\n");
    support::write_text(dir / "t.arff",
                        "@relation t\n@attribute x numeric\n@attribute c {a,b}\n@attribute class {p,n}\n@data\n"
                        "1,a,p\n2,b,n\n3,a,p\n4,b,n\n");
    const auto m = manifest("class", "p", {"c"});
    const auto a = preprocess(load_dataset((dir / "t.csv").string(), m), m);
    const auto b = preprocess(load_dataset((dir / "t.arff").string(), m), m);
    EXPECT_EQ(a.feature_names, b.feature_names);
    EXPECT_EQ(a.samples.features, b.samples.features);
    EXPECT_EQ(a.samples.labels, b.samples.labels);
    EXPECT_EQ(a.samples.labels, (std::vector<int>{1, 0, 1, 0}));
}

TEST(Manifest, Formats) {
    support::TempDir dir;
    const std::string entry =
        R"({"name":"d","path":"d.csv","label_column":"class","positive_label":1,"categorical_columns":["c"],"openml_task_id":10093})";
    support::write_text(dir / "one.json", entry);
    support::write_text(dir / "list.json", "[" + entry + "," + entry + "]");
    support::write_text(dir / "wrapped.json", R"({"datasets":[)" + entry + "]}");
    support::write_text(dir / "bad.json", R"({"name":"d"})");
    const auto one = load_manifest((dir / "one.json").string());
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].positive_label, "1");
    EXPECT_EQ(one[0].openml_task_id, 10093);
    EXPECT_EQ(std::filesystem::path(one[0].path), dir / "d.csv");
    EXPECT_EQ(load_manifest((dir / "list.json").string()).size(), 2u);
    EXPECT_EQ(load_manifest((dir / "wrapped.json").string()).size(), 1u);
    EXPECT_THROW(load_manifest((dir / "bad.json").string()), ParseError);
}

TEST(Preprocess, OneHotConstantAndMissing) {
    auto raw = table({"num", "cat", "const", "class"},
                     {{"1", "a", "5", "1"}, {"2", "b", "5", "0"}, {"3", "a", "5", "1"}, {"?", "b", "5", "0"}});
    raw.nominal[1] = true;
    const auto d = preprocess(raw, manifest());
    EXPECT_EQ(d.feature_names, (std::vector<std::string>{"num", "cat=a", "cat=b"}));
    EXPECT_EQ(d.size(), 3u);
    EXPECT_EQ(d.samples.features, (std::vector<double>{1, 1, 0, 2, 0, 1, 3, 1, 0}));
    EXPECT_EQ(d.samples.labels, (std::vector<int>{1, 0, 1}));
}

TEST(Preprocess, Errors) {
    EXPECT_THROW(preprocess(table({"x", "class"}, {{"5", "1"}, {"5", "0"}}), manifest()), ValidationError);
    std::vector<std::string> cols;
    std::vector<std::string> r1, r2;
    for (int i = 0; i < 21; ++i) {
        cols.push_back("f" + std::to_string(i));
        r1.push_back("0");
        r2.push_back("1");
    }
    cols.push_back("class");
    r1.push_back("0");
    r2.push_back("1");
    EXPECT_THROW(preprocess(table(cols, {r1, r2}), manifest()), ValidationError);
    EXPECT_THROW(preprocess(table({"x", "class"}, {{"abc", "1"}, {"2", "0"}}), manifest()), ParseError);
}

TEST(Standardizer, PopulationScaling) {
    Samples s;
    s.num_features = 1;
    for (double v : {1.0, 2.0, 3.0}) s.push_back(std::vector<double>{v}, 0);
    const std::vector<std::size_t> rows{0, 1, 2};
    const auto out = Standardizer::fit(s, rows).apply(s, rows);
    EXPECT_NEAR(out.features[0], -1.2247, 1e-4);
    EXPECT_NEAR(out.features[1], 0.0, 1e-15);
    EXPECT_NEAR(out.features[2], 1.2247, 1e-4);
    EXPECT_NEAR(out.features[2], std::sqrt(1.5), 1e-15);
}

TEST(Folds, EvenSizesAndPartition) {
    const auto labels = labels_with(37, 63);
    const auto folds = make_folds(labels, 10, 1);
    ASSERT_EQ(folds.size(), 10u);
    std::vector<int> seen(labels.size(), 0);
    for (const auto& f : folds) {
        EXPECT_EQ(f.test.size(), 10u);
        EXPECT_EQ(f.train.size() + f.test.size(), labels.size());
        for (auto i : f.test) ++seen[i];
        std::set<std::size_t> tr(f.train.begin(), f.train.end());
        for (auto i : f.test) EXPECT_FALSE(tr.contains(i));
    }
    for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Folds, Stratification) {
    const auto balanced = make_folds(labels_with(50, 50), 10, 3);
    for (const auto& f : balanced) {
        const auto ones = std::count_if(f.test.begin(), f.test.end(), [](std::size_t i) { return i < 50; });
        EXPECT_EQ(ones, 5);
    }
    const auto labels = labels_with(23, 81);
    for (const auto& f : make_folds(labels, 10, 4)) {
        const double ones = static_cast<double>(std::count_if(f.test.begin(), f.test.end(), [&](auto i) { return labels[i] == 1; }));
        EXPECT_LE(std::abs(ones - 23.0 / 104.0 * static_cast<double>(f.test.size())), 1.0 + 1e-9);
    }
}

TEST(Folds, DeterminismAndErrors) {
    const auto labels = labels_with(40, 60);
    const auto a = make_folds(labels, 10, 9), b = make_folds(labels, 10, 9), c = make_folds(labels, 10, 10);
    for (std::size_t f = 0; f < 10; ++f) EXPECT_EQ(a[f].test, b[f].test);
    bool differs = false;
    for (std::size_t f = 0; f < 10; ++f) differs = differs || a[f].test != c[f].test;
    EXPECT_TRUE(differs);
    EXPECT_THROW(make_folds(labels_with(9, 50), 10, 1), ValidationError);
}

TEST(Folds, NoLeakScaling) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(3.0, 2.0);
    Dataset d;
    d.samples.num_features = 3;
    for (int i = 0; i < 120; ++i) d.samples.push_back(std::vector<double>{g(rng), g(rng) * 10, g(rng) - 50}, i % 3 == 0);
    for (const auto& f : make_folds(d, 10, 2)) {
        const auto [train, test] = fold_samples(d, f);
        for (std::size_t c = 0; c < 3; ++c) {
            double mean = 0, var = 0, raw_mean = 0, raw_var = 0;
            for (auto i : f.train) raw_mean += d.samples.row(i)[c] / static_cast<double>(f.train.size());
            for (auto i : f.train) raw_var += std::pow(d.samples.row(i)[c] - raw_mean, 2) / static_cast<double>(f.train.size());
            for (std::size_t i = 0; i < train.size(); ++i) mean += train.row(i)[c] / static_cast<double>(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) var += std::pow(train.row(i)[c] - mean, 2) / static_cast<double>(train.size());
            EXPECT_LE(std::abs(mean), 1e-9);
            EXPECT_NEAR(var, 1.0, 1e-9);
            for (std::size_t k = 0; k < test.size(); ++k)
                EXPECT_NEAR(test.row(k)[c], (d.samples.row(f.test[k])[c] - raw_mean) / std::sqrt(raw_var), 1e-9);
        }
    }
}

TEST(BundledData, TableTwoShapes) {
    const std::filesystem::path manifest_path = std::filesystem::path(QHPI_SOURCE_DIR) / "data" / "manifest.json";
    bool any = false;
    for (const auto& m : load_manifest(manifest_path.string())) {
        if (!std::filesystem::exists(m.path)) continue;
        any = true;
        const auto d = preprocess(load_dataset(m), m);
        if (m.name == "banknote-authentication") {
            EXPECT_EQ(d.num_features(), 4u);
            EXPECT_EQ(d.size(), 1372u);
        }
        if (m.name == "breast-w") {
            // 699 instances, 16 of them with a missing value
            EXPECT_EQ(d.num_features(), 9u);
            EXPECT_EQ(d.size(), 683u);
        }
        if (m.name == "diabetes") {
            EXPECT_EQ(d.num_features(), 8u);
            EXPECT_EQ(d.size(), 768u);
        }
        if (m.name == "phoneme") {
            EXPECT_EQ(d.num_features(), 5u);
            EXPECT_EQ(d.size(), 5404u);
        }
    }
    if (!any) GTEST_SKIP() << "no dataset snapshot present under data/";
}
