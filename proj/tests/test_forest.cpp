#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qhpi/forest.hpp"

using namespace qhpi;

namespace {

using Rows = std::vector<std::vector<double>>;

std::vector<double> encoded_sample(std::mt19937_64& rng) {
    const auto f = to_feature_vector(sample(rng));
    return {f.begin(), f.end()};
}

// Small mixed space: categorical 3, categorical 2, integer 1..4.
SpaceDomains small_space() {
    return {DimDomain::categorical(3), DimDomain::categorical(2), DimDomain::integer(1, 4)};
}

std::vector<std::vector<double>> small_grid() {
    std::vector<std::vector<double>> g;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 1; c <= 4; ++c) g.push_back({double(a), double(b), double(c)});
    return g;
}

}  // namespace

TEST(Domains, Measures) {
    const auto d = surrogate_domains();
    ASSERT_EQ(d.size(), kNumHyperparameters);
    EXPECT_EQ(d[kLearningRate].kind, DimKind::continuous);
    EXPECT_NEAR(d[kLearningRate].lo, -4.0, 1e-15);
    EXPECT_EQ(d[kDepth].kind, DimKind::integer);
    EXPECT_EQ(d[kMapType].categories, 3u);
    EXPECT_DOUBLE_EQ(d[kDepth].measure(3.5, 6.5), 0.3);
    EXPECT_DOUBLE_EQ(d[kDepth].measure(-1e300, 1e300), 1.0);
    EXPECT_DOUBLE_EQ(d[kMapType].measure(0b101u), 2.0 / 3.0);
    const auto c = DimDomain::continuous(0, 4);
    EXPECT_DOUBLE_EQ(c.measure(1, 2), 0.25);
    EXPECT_DOUBLE_EQ(c.measure(-5, 1), 0.25);
}

TEST(FitTree, ConstantTargetSingleLeaf) {
    std::mt19937_64 rng(1);
    Rows x;
    for (int i = 0; i < 40; ++i) x.push_back(encoded_sample(rng));
    const std::vector<double> y(x.size(), 0.7);
    const auto t = fit_tree(x, y, surrogate_domains(), rng);
    ASSERT_EQ(t.leaves.size(), 1u);
    EXPECT_DOUBLE_EQ(t.leaves[0].value, 0.7);
    Forest f{surrogate_domains(), {t, t, t}};
    EXPECT_DOUBLE_EQ(f.predict(sample(rng)), 0.7);
}

TEST(FitTree, RootSplitsOnInformativeDimension) {
    std::mt19937_64 rng(2);
    const auto domains = surrogate_domains();
    for (std::size_t d = 0; d < kNumHyperparameters; ++d) {
        Rows x;
        std::vector<double> y;
        for (int i = 0; i < 200; ++i) {
            x.push_back(encoded_sample(rng));
            const auto& dom = domains[d];
            const double mid = dom.is_categorical() ? 0.5 : 0.5 * (dom.lo + dom.hi);
            y.push_back(x.back()[d] <= mid ? 0.2 : 0.9);
        }
        TreeOptions opt;
        opt.max_features_fraction = 1.0;
        const auto t = fit_tree(x, y, surrogate_domains(), rng, opt);
        EXPECT_EQ(t.nodes[0].dim, static_cast<int>(d)) << "dimension " << d;
        EXPECT_EQ(t.leaves.size(), 2u);
    }
}

TEST(FitTree, LeafValuesAreBootstrapMeans) {
    std::mt19937_64 rng(3);
    Rows x;
    std::vector<double> y;
    std::normal_distribution<double> noise(0, 0.05);
    for (int i = 0; i < 150; ++i) {
        x.push_back(encoded_sample(rng));
        y.push_back(0.1 * x.back()[kLearningRate] + 0.03 * x.back()[kDepth] + noise(rng));
    }
    const auto domains = surrogate_domains();
    std::mt19937_64 fit_rng(11), replay(11);
    const auto t = fit_tree(x, y, domains, fit_rng);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    std::vector<double> sum(t.leaves.size(), 0.0);
    std::vector<std::size_t> cnt(t.leaves.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto r = pick(replay);
        const auto l = t.leaf_index(x[r], domains);
        sum[l] += y[r];
        ++cnt[l];
    }
    for (std::size_t l = 0; l < t.leaves.size(); ++l) {
        ASSERT_EQ(cnt[l], t.leaves[l].count);
        EXPECT_NEAR(t.leaves[l].value, sum[l] / static_cast<double>(cnt[l]), 1e-12);
    }
}

TEST(FitTree, Errors) {
    std::mt19937_64 rng(4);
    Rows x(9, std::vector<double>(kNumHyperparameters, 0.0));
    for (auto& r : x) r = encoded_sample(rng);
    std::vector<double> y(9, 0.5);
    EXPECT_THROW(fit_tree(x, y, surrogate_domains(), rng), ValidationError);
    x.push_back(encoded_sample(rng));
    y.push_back(std::nan(""));
    EXPECT_THROW(fit_tree(x, y, surrogate_domains(), rng), ValidationError);
    y.back() = 0.5;
    x.back()[kDepth] = 11;
    EXPECT_THROW(fit_tree(x, y, surrogate_domains(), rng), ValidationError);
}

class FittedForest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> noise(0, 0.02);
        for (int i = 0; i < 300; ++i) {
            const auto c = sample(rng);
            const auto f = to_feature_vector(c);
            x_.emplace_back(f.begin(), f.end());
            y_.push_back(sigmoid(f[kLearningRate] + 2) * 0.5 + 0.04 * f[kDepth] + (c.map_type == MapType::full ? 0.1 : 0) +
                         noise(rng));
        }
        forest_ = fit_forest(x_, y_, surrogate_domains(), 77);
    }
    static inline Rows x_;
    static inline std::vector<double> y_;
    static inline Forest forest_;
};

TEST_F(FittedForest, PartitionProperty) {
    ASSERT_EQ(forest_.trees.size(), 128u);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 1000; ++i) {
        const auto p = encoded_sample(rng);
        for (const auto& t : forest_.trees) {
            int hits = 0;
            std::size_t which = 0;
            for (std::size_t l = 0; l < t.leaves.size(); ++l) {
                bool inside = true;
                for (std::size_t d = 0; d < p.size() && inside; ++d)
                    inside = t.leaves[l].box[d].contains(forest_.domains[d], p[d]);
                if (inside) {
                    ++hits;
                    which = l;
                }
            }
            ASSERT_EQ(hits, 1);
            EXPECT_EQ(which, t.leaf_index(p, forest_.domains));
        }
    }
}

TEST_F(FittedForest, PredictionBounds) {
    const auto [lo, hi] = std::minmax_element(y_.begin(), y_.end());
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const double p = forest_(sample(rng));
        EXPECT_GE(p, *lo);
        EXPECT_LE(p, *hi);
    }
}

TEST_F(FittedForest, ReproducibleAndJobsIndependent) {
    ForestOptions opt;
    opt.jobs = 3;
    const auto again = fit_forest(x_, y_, surrogate_domains(), 77);
    const auto threaded = fit_forest(x_, y_, surrogate_domains(), 77, opt);
    const auto other = fit_forest(x_, y_, surrogate_domains(), 78);
    EXPECT_EQ(to_json(again), to_json(forest_));
    EXPECT_EQ(to_json(threaded), to_json(forest_));
    EXPECT_NE(to_json(other), to_json(forest_));
}

TEST_F(FittedForest, JsonRoundTrip) {
    const auto back = forest_from_json(nlohmann::json::parse(to_json(forest_).dump()));
    EXPECT_EQ(to_json(back), to_json(forest_));
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        const auto c = sample(rng);
        EXPECT_EQ(back(c), forest_(c));
    }
    auto bad = to_json(forest_);
    bad["version"] = 99;
    EXPECT_THROW(forest_from_json(bad), ParseError);
}

TEST(ForestFit, InvariantToUnsplitDimensions) {
    // y depends on depth only and every dimension is a candidate, so every split is on depth
    Rows x;
    std::vector<double> y;
    std::mt19937_64 rng(9);
    for (int i = 0; i < 60; ++i) {
        x.push_back(encoded_sample(rng));
        y.push_back(x.back()[kDepth] > 5 ? 1.0 : 0.0);
    }
    ForestOptions opt;
    opt.num_trees = 32;
    opt.tree.max_features_fraction = 1.0;
    const auto forest = fit_forest(x, y, surrogate_domains(), 3, opt);
    for (const auto& t : forest.trees) {
        const auto used = t.split_dims(kNumHyperparameters);
        for (std::size_t d = 0; d < kNumHyperparameters; ++d) EXPECT_EQ(used[d], d == kDepth && t.leaves.size() > 1);
    }
    for (int i = 0; i < 200; ++i) {
        const auto c = sample(rng);
        auto d = sample(rng);
        d.depth = c.depth;
        EXPECT_EQ(forest(c), forest(d));
    }
}

TEST(ForestFit, NoiselessDepthTarget) {
    std::mt19937_64 rng(12);
    Rows x;
    std::vector<double> y;
    for (int rep = 0; rep < 30; ++rep)
        for (int depth = 1; depth <= 10; ++depth) {
            auto c = sample(rng);
            c.depth = depth;
            const auto f = to_feature_vector(c);
            x.emplace_back(f.begin(), f.end());
            y.push_back(depth * depth / 100.0);
        }
    const auto forest = fit_forest(x, y, surrogate_domains(), 5);
    double forest_err = 0, bound = 0;
    for (const auto& t : forest.trees) {
        double tree_err = 0;
        for (std::size_t i = 0; i < x.size(); ++i) tree_err = std::max(tree_err, std::abs(t.predict(x[i], forest.domains) - y[i]));
        bound += tree_err / static_cast<double>(forest.trees.size());
    }
    for (std::size_t i = 0; i < x.size(); ++i) forest_err = std::max(forest_err, std::abs(forest.predict(x[i]) - y[i]));
    EXPECT_LE(forest_err, bound + 1e-12);
}

TEST(ForestFit, ConsistencyOnExhaustiveGrid) {
    Rows x;
    std::vector<double> y;
    for (int rep = 0; rep < 5; ++rep)
        for (const auto& p : small_grid()) {
            x.push_back(p);
            y.push_back(0.3 * p[0] - 0.2 * p[1] + std::sin(p[2]) + (p[0] == 2 && p[1] == 1 ? 0.5 : 0.0));
        }
    ForestOptions opt;
    opt.num_trees = 16;
    opt.tree.bootstrap = false;
    const auto forest = fit_forest(x, y, small_space(), 1, opt);
    std::vector<double> pred;
    for (const auto& p : x) pred.push_back(forest.predict(p));
    EXPECT_GE(regression_metrics(y, pred).r2, 0.99);
}

TEST(Metrics, Examples) {
    const std::vector<double> t{0.1, 0.4, 0.2, 0.9, 0.5};
    const auto perfect = regression_metrics(t, t);
    EXPECT_DOUBLE_EQ(perfect.r2, 1.0);
    EXPECT_DOUBLE_EQ(perfect.rmse, 0.0);
    EXPECT_DOUBLE_EQ(perfect.spearman_cc, 1.0);
    EXPECT_TRUE(perfect.passed);

    const std::vector<double> reversed{5, 3, 4, 1, 2};  // ranks of t reversed
    EXPECT_DOUBLE_EQ(regression_metrics(t, reversed).spearman_cc, -1.0);

    const std::vector<double> flat(5, 0.3);
    const auto zv = regression_metrics(flat, t);
    EXPECT_TRUE(zv.zero_variance);
    EXPECT_FALSE(zv.passed);
    EXPECT_THROW(regression_metrics(t, std::vector<double>{1}), ValidationError);
}

TEST(Metrics, WeakSurrogateFailsGate) {
    // shrink predictions towards the mean so that R2 = 1 - (1 - a)^2 = 0.1939
    std::vector<double> t, p;
    for (int i = 0; i < 100; ++i) t.push_back(std::sin(i * 0.37));
    const double mean = std::accumulate(t.begin(), t.end(), 0.0) / 100;
    const double a = 1 - std::sqrt(1 - 0.1939);
    for (double v : t) p.push_back(mean + a * (v - mean));
    const auto q = regression_metrics(t, p);
    EXPECT_NEAR(q.r2, 0.1939, 1e-12);
    EXPECT_FALSE(q.passed);
    EXPECT_LT(q.r2, kQualityThreshold);
}

TEST(Metrics, RanksWithTies) {
    EXPECT_EQ(average_ranks(std::vector<double>{3, 1, 3, 2}), (std::vector<double>{3.5, 1, 3.5, 2}));
    EXPECT_TRUE(std::isnan(pearson(std::vector<double>{1, 1}, std::vector<double>{1, 2})));
}

TEST(Quality, CrossValidation) {
    std::mt19937_64 rng(13);
    Rows x;
    std::vector<double> y, noise_y;
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 120; ++i) {
        x.push_back(encoded_sample(rng));
        y.push_back(x.back()[kLearningRate] * 0.2 + x.back()[kDepth] * 0.05);
        noise_y.push_back(g(rng));
    }
    ForestOptions opt;
    opt.num_trees = 32;
    const auto good = assess_quality(x, y, surrogate_domains(), 5, 1, opt);
    EXPECT_TRUE(good.passed);
    EXPECT_EQ(good.rows_used, 120u);
    const auto bad = assess_quality(x, noise_y, surrogate_domains(), 5, 1, opt);
    EXPECT_FALSE(bad.passed);
    const Rows few(x.begin(), x.begin() + 49);
    EXPECT_THROW(assess_quality(few, std::vector<double>(y.begin(), y.begin() + 49), surrogate_domains(), 5, 1, opt),
                 ValidationError);
}

TEST(Quality, RunTableExcludesFailures) {
    std::mt19937_64 rng(14);
    RunTable table;
    for (std::size_t i = 0; i < 70; ++i) {
        const auto c = sample(rng);
        if (i % 10 == 3)
            table.rows.push_back({i, i, c, std::nullopt, RunStatus::failed});
        else
            table.rows.push_back({i, i, c, std::log10(c.learning_rate), RunStatus::ok});
    }
    ForestOptions opt;
    opt.num_trees = 16;
    const auto q = assess_quality(table, 5, 2, opt);
    EXPECT_EQ(q.rows_used, 63u);
    EXPECT_EQ(q.rows_excluded, 7u);
}
