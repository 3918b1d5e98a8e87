#pragma once

// Random-forest regression surrogate. Every leaf keeps the axis-aligned box
// carved out by its root path, so marginals over the configuration space can
// be integrated exactly (see fanova.hpp).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qhpi/config_space.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/util.hpp"

namespace qhpi {

enum class DimKind { continuous, integer, categorical };

/// Domain of one surrogate input dimension, in encoded units.
struct DimDomain {
    DimKind kind = DimKind::continuous;
    double lo = 0, hi = 1;         // numeric kinds, inclusive
    std::size_t categories = 0;    // categorical kind

    static DimDomain continuous(double lo, double hi) { return {DimKind::continuous, lo, hi, 0}; }
    static DimDomain integer(long lo, long hi) {
        return {DimKind::integer, static_cast<double>(lo), static_cast<double>(hi), 0};
    }
    static DimDomain categorical(std::size_t k) { return {DimKind::categorical, 0, 0, k}; }

    bool is_categorical() const noexcept { return kind == DimKind::categorical; }

    std::uint32_t full_mask() const noexcept { return categories >= 32 ? ~0u : (1u << categories) - 1u; }

    bool contains(double v) const {
        switch (kind) {
            case DimKind::continuous: return v >= lo && v <= hi;
            case DimKind::integer: return v >= lo && v <= hi && v == std::round(v);
            case DimKind::categorical: return v >= 0 && v < static_cast<double>(categories) && v == std::round(v);
        }
        return false;
    }

    /// Uniform-measure fraction of the domain inside (a, b].
    double measure(double a, double b) const {
        switch (kind) {
            case DimKind::continuous: {
                const double l = std::max(a, lo), h = std::min(b, hi);
                return h > l ? (h - l) / (hi - lo) : 0.0;
            }
            case DimKind::integer: {
                // integers k in [lo, hi] with a < k <= b
                const double first = std::max(lo, std::floor(a) + 1.0);
                const double last = std::min(hi, std::floor(b));
                return last >= first ? (last - first + 1.0) / (hi - lo + 1.0) : 0.0;
            }
            case DimKind::categorical: break;
        }
        return 0.0;
    }

    double measure(std::uint32_t mask) const {
        return static_cast<double>(std::popcount(mask & full_mask())) / static_cast<double>(categories);
    }
};

using SpaceDomains = std::vector<DimDomain>;

/// Surrogate domains of the ten-hyperparameter space (log10 learning rate).
inline SpaceDomains surrogate_domains(const ConfigSpace& space = default_space()) {
    SpaceDomains d;
    for (const auto& def : space.defs()) {
        switch (def.kind) {
            case HpKind::continuous_log: d.push_back(DimDomain::continuous(def.encoded_low(), def.encoded_high())); break;
            case HpKind::integer_range:
                d.push_back(DimDomain::integer(static_cast<long>(def.low), static_cast<long>(def.high)));
                break;
            case HpKind::categorical: d.push_back(DimDomain::categorical(def.num_categories())); break;
        }
    }
    return d;
}

/// Constraint of a box in one dimension: interval (lo, hi] or a category mask.
struct BoxSide {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    std::uint32_t mask = ~0u;

    bool contains(const DimDomain& d, double v) const {
        if (d.is_categorical()) return (mask >> static_cast<unsigned>(std::lround(v))) & 1u;
        return v > lo && v <= hi;
    }
    double weight(const DimDomain& d) const { return d.is_categorical() ? d.measure(mask) : d.measure(lo, hi); }
};

using Box = std::vector<BoxSide>;

struct Leaf {
    double value = 0.0;
    std::size_t count = 0;
    Box box;
};

struct TreeNode {
    int dim = -1;  // -1 for leaves
    double threshold = 0.0;        // numeric: x <= threshold goes left
    std::uint32_t left_mask = 0;   // categorical: categories going left
    int left = -1, right = -1;
    int leaf = -1;                 // index into leaves for leaf nodes
};

struct TreeOptions {
    double max_features_fraction = 0.7;  // candidate dimensions per split, ceil(fraction * D)
    std::size_t min_samples_split = 5;   // nodes with fewer rows become leaves
    bool bootstrap = true;
};

class RegressionTree {
public:
    std::vector<TreeNode> nodes;
    std::vector<Leaf> leaves;

    std::size_t leaf_index(std::span<const double> x, const SpaceDomains& domains) const {
        int i = 0;
        while (nodes[i].dim >= 0) {
            const auto& nd = nodes[i];
            const double v = x[nd.dim];
            bool go_left;
            if (domains[nd.dim].is_categorical())
                go_left = (nd.left_mask >> static_cast<unsigned>(std::lround(v))) & 1u;
            else
                go_left = v <= nd.threshold;
            i = go_left ? nd.left : nd.right;
        }
        return static_cast<std::size_t>(nodes[i].leaf);
    }

    double predict(std::span<const double> x, const SpaceDomains& domains) const {
        return leaves[leaf_index(x, domains)].value;
    }

    /// Dimensions used by at least one split.
    std::vector<bool> split_dims(std::size_t num_dims) const {
        std::vector<bool> used(num_dims, false);
        for (const auto& nd : nodes)
            if (nd.dim >= 0) used[nd.dim] = true;
        return used;
    }
};

namespace detail {

struct SplitCandidate {
    int dim = -1;
    double sse = std::numeric_limits<double>::infinity();
    double threshold = 0.0;
    std::uint32_t left_mask = 0;
};

inline double sse_of(double n, double s, double q) { return n > 0 ? std::max(0.0, q - s * s / n) : 0.0; }

class TreeBuilder {
public:
    TreeBuilder(std::span<const std::vector<double>> x, std::span<const double> y, const SpaceDomains& d,
                const TreeOptions& opt, std::mt19937_64& rng)
        : x_(x), y_(y), dom_(d), opt_(opt), rng_(rng) {}

    RegressionTree build(std::vector<std::size_t> rows) {
        Box root(dom_.size());
        for (std::size_t k = 0; k < dom_.size(); ++k)
            if (dom_[k].is_categorical()) root[k].mask = dom_[k].full_mask();
        grow(std::move(rows), std::move(root));
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> rows, Box box) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});

        double sum = 0;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto r : rows) {
            sum += y_[r];
            lo = std::min(lo, y_[r]);
            hi = std::max(hi, y_[r]);
        }
        const double mean = sum / static_cast<double>(rows.size());

        SplitCandidate best;
        if (rows.size() >= opt_.min_samples_split && hi > lo) best = find_split(rows, box);
        if (best.dim < 0) {
            tree_.nodes[id].leaf = static_cast<int>(tree_.leaves.size());
            tree_.leaves.push_back({mean, rows.size(), std::move(box)});
            return id;
        }

        std::vector<std::size_t> left_rows, right_rows;
        const auto& dom = dom_[best.dim];
        for (auto r : rows) {
            const double v = x_[r][best.dim];
            const bool left = dom.is_categorical() ? ((best.left_mask >> static_cast<unsigned>(std::lround(v))) & 1u)
                                                   : v <= best.threshold;
            (left ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        Box left_box = box, right_box = std::move(box);
        if (dom.is_categorical()) {
            left_box[best.dim].mask = best.left_mask;
            right_box[best.dim].mask &= ~best.left_mask;
        } else {
            left_box[best.dim].hi = best.threshold;
            right_box[best.dim].lo = best.threshold;
        }
        tree_.nodes[id].dim = best.dim;
        tree_.nodes[id].threshold = best.threshold;
        tree_.nodes[id].left_mask = best.left_mask;
        const int l = grow(std::move(left_rows), std::move(left_box));
        const int r = grow(std::move(right_rows), std::move(right_box));
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    SplitCandidate find_split(const std::vector<std::size_t>& rows, const Box& box) {
        const std::size_t dims = dom_.size();
        std::vector<std::size_t> order(dims);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng_);
        const auto k = std::min<std::size_t>(
            dims, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt_.max_features_fraction * dims - 1e-9))));

        SplitCandidate best;
        // Sampled dimensions first; fall back to the rest only when none of them can split.
        for (std::size_t stage = 0; stage < 2 && best.dim < 0; ++stage) {
            std::vector<std::size_t> cand(order.begin() + (stage ? k : 0), stage ? order.end() : order.begin() + k);
            std::sort(cand.begin(), cand.end());
            for (auto d : cand) {
                const auto s = dom_[d].is_categorical() ? categorical_split(rows, d, box[d].mask) : numeric_split(rows, d);
                if (s.dim >= 0 && s.sse < best.sse) best = s;
            }
        }
        return best;
    }

    SplitCandidate numeric_split(const std::vector<std::size_t>& rows, std::size_t d) const {
        std::vector<std::pair<double, double>> v;
        v.reserve(rows.size());
        double s_all = 0, q_all = 0;
        for (auto r : rows) {
            v.emplace_back(x_[r][d], y_[r]);
            s_all += y_[r];
            q_all += y_[r] * y_[r];
        }
        std::sort(v.begin(), v.end());
        SplitCandidate best;
        double s = 0, q = 0;
        const double n = static_cast<double>(v.size());
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            s += v[i].second;
            q += v[i].second * v[i].second;
            if (v[i].first == v[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1);
            const double sse = sse_of(nl, s, q) + sse_of(n - nl, s_all - s, q_all - q);
            if (sse < best.sse) {
                best.dim = static_cast<int>(d);
                best.sse = sse;
                best.threshold = 0.5 * (v[i].first + v[i + 1].first);
            }
        }
        return best;
    }

    // Exhaustive binary partition of the categories still allowed in this box.
    SplitCandidate categorical_split(const std::vector<std::size_t>& rows, std::size_t d, std::uint32_t allowed) const {
        const std::size_t kc = dom_[d].categories;
        std::vector<double> cn(kc, 0), cs(kc, 0), cq(kc, 0);
        for (auto r : rows) {
            const auto c = static_cast<std::size_t>(std::lround(x_[r][d]));
            cn[c] += 1;
            cs[c] += y_[r];
            cq[c] += y_[r] * y_[r];
        }
        SplitCandidate best;
        if (std::popcount(allowed) < 2) return best;
        const std::uint32_t anchor = allowed & (~allowed + 1);  // lowest allowed category always goes left
        for (std::uint32_t sub = allowed; sub; sub = (sub - 1) & allowed) {
            if (!(sub & anchor) || sub == allowed) continue;
            double nl = 0, sl = 0, ql = 0, nr = 0, sr = 0, qr = 0;
            for (std::size_t c = 0; c < kc; ++c) {
                if (!((allowed >> c) & 1u)) continue;
                if ((sub >> c) & 1u) {
                    nl += cn[c], sl += cs[c], ql += cq[c];
                } else {
                    nr += cn[c], sr += cs[c], qr += cq[c];
                }
            }
            if (nl == 0 || nr == 0) continue;
            const double sse = sse_of(nl, sl, ql) + sse_of(nr, sr, qr);
            // ties resolved towards the smaller mask for determinism
            if (sse < best.sse || (sse == best.sse && best.dim >= 0 && sub < best.left_mask)) {
                best.dim = static_cast<int>(d);
                best.sse = sse;
                best.left_mask = sub;
            }
        }
        return best;
    }

    std::span<const std::vector<double>> x_;
    std::span<const double> y_;
    const SpaceDomains& dom_;
    const TreeOptions& opt_;
    std::mt19937_64& rng_;
    RegressionTree tree_;
};

inline void check_rows(std::span<const std::vector<double>> x, std::span<const double> y, const SpaceDomains& d) {
    if (x.size() != y.size()) throw ValidationError("row and target counts differ");
    for (const auto& row : x) {
        if (row.size() != d.size()) throw ValidationError("row width does not match the space dimension");
        for (std::size_t k = 0; k < d.size(); ++k)
            if (!d[k].contains(row[k])) throw ValidationError("row value outside dimension " + std::to_string(k) + " domain");
    }
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("non-finite target");
}

}  // namespace detail

inline constexpr std::size_t kMinTreeRows = 10;

inline RegressionTree fit_tree(std::span<const std::vector<double>> x, std::span<const double> y,
                               const SpaceDomains& domains, std::mt19937_64& rng, const TreeOptions& opt = {}) {
    detail::check_rows(x, y, domains);
    if (x.size() < kMinTreeRows)
        throw ValidationError("need at least " + std::to_string(kMinTreeRows) + " rows to fit a tree, got " +
                              std::to_string(x.size()));
    std::vector<std::size_t> rows(x.size());
    if (opt.bootstrap) {
        std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
        for (auto& r : rows) r = pick(rng);
        std::sort(rows.begin(), rows.end());
    } else {
        std::iota(rows.begin(), rows.end(), 0);
    }
    return detail::TreeBuilder(x, y, domains, opt, rng).build(std::move(rows));
}

inline constexpr std::size_t kForestTrees = 128;

struct ForestOptions {
    std::size_t num_trees = kForestTrees;
    TreeOptions tree;
    std::size_t jobs = 1;
};

class Forest {
public:
    SpaceDomains domains;
    std::vector<RegressionTree> trees;

    double predict(std::span<const double> x) const {
        double s = 0;
        for (const auto& t : trees) s += t.predict(x, domains);
        return s / static_cast<double>(trees.size());
    }

    double predict(const Configuration& c) const {
        const auto f = to_feature_vector(c);
        return predict(std::span<const double>(f));
    }

    double operator()(const Configuration& c) const { return predict(c); }
};

/// Fits each tree from its own rng stream derive_seed(seed, "tree", t), so
/// the result does not depend on `jobs`.
inline Forest fit_forest(std::span<const std::vector<double>> x, std::span<const double> y, const SpaceDomains& domains,
                         std::uint64_t seed, const ForestOptions& opt = {}) {
    detail::check_rows(x, y, domains);
    if (x.size() < kMinTreeRows) throw ValidationError("too few rows to fit a forest");
    Forest f;
    f.domains = domains;
    f.trees.resize(opt.num_trees);
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t t = begin; t < opt.num_trees; t += step) {
            std::mt19937_64 rng(derive_seed(seed, "tree", t));
            f.trees[t] = fit_tree(x, y, domains, rng, opt.tree);
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, opt.num_trees));
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    }
    return f;
}

/// Encoded feature rows and targets of the successful runs in a table.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> surrogate_rows(const RunTable& table) {
    std::pair<std::vector<std::vector<double>>, std::vector<double>> out;
    for (const auto* r : table.successful()) {
        const auto f = to_feature_vector(r->config);
        out.first.emplace_back(f.begin(), f.end());
        out.second.push_back(*r->y);
    }
    return out;
}

inline Forest fit_forest(const RunTable& table, std::uint64_t seed, const ForestOptions& opt = {}) {
    const auto [x, y] = surrogate_rows(table);
    return fit_forest(x, y, surrogate_domains(), seed, opt);
}

// --- surrogate quality --------------------------------------------------------

/// Ranks starting at 1, ties given their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = average_ranks(a), rb = average_ranks(b);
    return pearson(ra, rb);
}

inline constexpr double kQualityThreshold = 0.75;

struct SurrogateQuality {
    double r2 = std::numeric_limits<double>::quiet_NaN();
    double rmse = 0.0;
    double spearman_cc = std::numeric_limits<double>::quiet_NaN();
    bool passed = false;
    bool zero_variance = false;
    std::size_t rows_used = 0;
    std::size_t rows_excluded = 0;  // failed runs left out before fitting
};

/// R2, RMSE and Spearman CC of pooled out-of-fold predictions against the targets.
inline SurrogateQuality regression_metrics(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size() || truth.empty()) throw ValidationError("metric inputs must be non-empty and equal length");
    SurrogateQuality q;
    const double n = static_cast<double>(truth.size());
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
    double sse = 0, sst = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
        sst += (truth[i] - mean) * (truth[i] - mean);
    }
    q.rmse = std::sqrt(sse / n);
    q.rows_used = truth.size();
    if (sst == 0) {
        q.zero_variance = true;
        q.passed = false;
        return q;
    }
    q.r2 = 1.0 - sse / sst;
    q.spearman_cc = spearman(truth, pred);
    q.passed = q.r2 >= kQualityThreshold;
    return q;
}

inline constexpr std::size_t kMinQualityRows = 50;

/// k-fold cross-validated surrogate quality; each fold fits a fresh forest.
inline SurrogateQuality assess_quality(std::span<const std::vector<double>> x, std::span<const double> y,
                                       const SpaceDomains& domains, std::size_t k, std::uint64_t seed,
                                       const ForestOptions& opt = {}) {
    if (x.size() < kMinQualityRows)
        throw ValidationError("surrogate assessment needs at least " + std::to_string(kMinQualityRows) +
                              " successful rows, got " + std::to_string(x.size()));
    if (k < 2 || k > x.size()) throw ValidationError("invalid fold count");
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, "quality-folds"));
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<double> pred(x.size(), 0.0);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::vector<double>> tx;
        std::vector<double> ty;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            if (i % k == f) {
                test.push_back(perm[i]);
            } else {
                tx.push_back(x[perm[i]]);
                ty.push_back(y[perm[i]]);
            }
        }
        const Forest forest = fit_forest(tx, ty, domains, derive_seed(seed, "quality-forest", f), opt);
        for (auto i : test) pred[i] = forest.predict(x[i]);
    }
    return regression_metrics(y, pred);
}

inline SurrogateQuality assess_quality(const RunTable& table, std::size_t k, std::uint64_t seed,
                                       const ForestOptions& opt = {}) {
    const auto [x, y] = surrogate_rows(table);
    auto q = assess_quality(x, y, surrogate_domains(), k, seed, opt);
    q.rows_excluded = table.rows.size() - x.size();
    return q;
}

namespace detail {
inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
inline double num_or(const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }
}  // namespace detail

inline nlohmann::json to_json(const SurrogateQuality& q) {
    return {{"r2", detail::num_or_null(q.r2)},
            {"rmse", q.rmse},
            {"spearman_cc", detail::num_or_null(q.spearman_cc)},
            {"passed", q.passed},
            {"zero_variance", q.zero_variance},
            {"rows_used", q.rows_used},
            {"rows_excluded", q.rows_excluded}};
}

// --- serialization ------------------------------------------------------------

inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json to_json(const Forest& f) {
    using nlohmann::json;
    json doms = json::array();
    for (const auto& d : f.domains) {
        switch (d.kind) {
            case DimKind::continuous: doms.push_back({{"kind", "continuous"}, {"lo", d.lo}, {"hi", d.hi}}); break;
            case DimKind::integer: doms.push_back({{"kind", "integer"}, {"lo", d.lo}, {"hi", d.hi}}); break;
            case DimKind::categorical: doms.push_back({{"kind", "categorical"}, {"categories", d.categories}}); break;
        }
    }
    json trees = json::array();
    for (const auto& t : f.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            if (n.dim < 0)
                nodes.push_back({{"leaf", n.leaf}});
            else
                nodes.push_back({{"dim", n.dim}, {"threshold", n.threshold}, {"left_mask", n.left_mask},
                                 {"left", n.left}, {"right", n.right}});
        }
        json leaves = json::array();
        for (const auto& l : t.leaves) {
            json box = json::array();
            for (std::size_t k = 0; k < l.box.size(); ++k) {
                if (f.domains[k].is_categorical())
                    box.push_back({{"mask", l.box[k].mask}});
                else
                    box.push_back({{"lo", detail::num_or_null(l.box[k].lo)}, {"hi", detail::num_or_null(l.box[k].hi)}});
            }
            leaves.push_back({{"value", l.value}, {"count", l.count}, {"box", box}});
        }
        trees.push_back({{"nodes", nodes}, {"leaves", leaves}});
    }
    return {{"format", "qhpi-forest"}, {"version", kForestFormatVersion}, {"domains", doms}, {"trees", trees}};
}

inline Forest forest_from_json(const nlohmann::json& j) {
    Forest f;
    try {
        if (j.at("format") != "qhpi-forest" || j.at("version").get<int>() != kForestFormatVersion)
            throw ParseError("unsupported forest format/version");
        for (const auto& d : j.at("domains")) {
            const auto kind = d.at("kind").get<std::string>();
            if (kind == "continuous")
                f.domains.push_back(DimDomain::continuous(d.at("lo"), d.at("hi")));
            else if (kind == "integer")
                f.domains.push_back({DimKind::integer, d.at("lo"), d.at("hi"), 0});
            else if (kind == "categorical")
                f.domains.push_back(DimDomain::categorical(d.at("categories")));
            else
                throw ParseError("unknown domain kind '" + kind + "'");
        }
        const double inf = std::numeric_limits<double>::infinity();
        for (const auto& jt : j.at("trees")) {
            RegressionTree t;
            for (const auto& n : jt.at("nodes")) {
                TreeNode node;
                if (n.contains("leaf")) {
                    node.leaf = n.at("leaf");
                } else {
                    node.dim = n.at("dim");
                    node.threshold = n.at("threshold");
                    node.left_mask = n.at("left_mask");
                    node.left = n.at("left");
                    node.right = n.at("right");
                }
                t.nodes.push_back(node);
            }
            for (const auto& l : jt.at("leaves")) {
                Leaf leaf{l.at("value"), l.at("count"), {}};
                for (const auto& b : l.at("box")) {
                    BoxSide s;
                    if (b.contains("mask")) {
                        s.mask = b.at("mask");
                    } else {
                        s.lo = detail::num_or(b.at("lo"), -inf);
                        s.hi = detail::num_or(b.at("hi"), inf);
                    }
                    leaf.box.push_back(s);
                }
                t.leaves.push_back(std::move(leaf));
            }
            f.trees.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed forest JSON: ") + e.what());
    }
    return f;
}

}  // namespace qhpi
