#pragma once

// Functional ANOVA over a fitted forest: exact per-tree marginals and the
// first- and second-order variance decomposition under the uniform measure
// of each dimension's domain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/forest.hpp"

namespace qhpi {

/// Marginal of one tree: the average of its predictor over all dimensions
/// outside `dims`, with dims[k] pinned to values[k].
inline double tree_marginal(const RegressionTree& tree, const SpaceDomains& domains, std::span<const std::size_t> dims,
                            std::span<const double> values) {
    if (dims.size() != values.size()) throw ValidationError("one value per marginal dimension required");
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (dims[k] >= domains.size()) throw ValidationError("marginal dimension out of range");
        if (!domains[dims[k]].contains(values[k])) throw ValidationError("marginal value outside the space");
    }
    double total = 0;
    for (const auto& leaf : tree.leaves) {
        double w = leaf.value;
        for (std::size_t d = 0; d < domains.size() && w != 0.0; ++d) {
            const auto it = std::find(dims.begin(), dims.end(), d);
            if (it != dims.end()) {
                if (!leaf.box[d].contains(domains[d], values[static_cast<std::size_t>(it - dims.begin())])) w = 0.0;
            } else {
                w *= leaf.box[d].weight(domains[d]);
            }
        }
        total += w;
    }
    return total;
}

inline double tree_marginal(const RegressionTree& tree, const SpaceDomains& domains,
                            std::initializer_list<std::size_t> dims, std::initializer_list<double> values) {
    return tree_marginal(tree, domains, std::span<const std::size_t>(dims.begin(), dims.size()),
                         std::span<const double>(values.begin(), values.size()));
}

/// Points at which marginal tables are tabulated: every category, every
/// integer, or ten evenly spaced values (endpoints included) on a continuous range.
inline std::vector<double> evaluation_grid(const DimDomain& d) {
    std::vector<double> g;
    switch (d.kind) {
        case DimKind::categorical:
            for (std::size_t c = 0; c < d.categories; ++c) g.push_back(static_cast<double>(c));
            break;
        case DimKind::integer:
            for (double v = d.lo; v <= d.hi; v += 1.0) g.push_back(v);
            break;
        case DimKind::continuous:
            for (int i = 0; i < 10; ++i) g.push_back(i == 9 ? d.hi : d.lo + (d.hi - d.lo) * i / 9.0);
            break;
    }
    return g;
}

inline std::size_t pair_count(std::size_t dims) { return dims * (dims - 1) / 2; }

/// Position of (i, j), i < j, in lexicographic pair order.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t dims) {
    if (i > j) std::swap(i, j);
    return i * dims - i * (i + 1) / 2 + (j - i - 1);
}

struct TreeDecomposition {
    double mean = 0.0;            // f_0
    double total_variance = 0.0;  // V
    bool defined = false;         // false when V == 0
    std::vector<double> single;   // V_{i}
    std::vector<double> pairs;    // V_{i,j}, lexicographic order

    std::optional<double> fraction_single(std::size_t i) const {
        return defined ? std::optional(single[i] / total_variance) : std::nullopt;
    }
    std::optional<double> fraction_pair(std::size_t i, std::size_t j) const {
        return defined ? std::optional(pairs[pair_index(i, j, single.size())] / total_variance) : std::nullopt;
    }
};

namespace detail {

// A tree's predictor is constant on the product of these per-dimension cells.
struct Cells {
    std::vector<double> weight;
    std::vector<double> point;  // representative value inside the cell
};

inline Cells tree_cells(const RegressionTree& tree, const DimDomain& dom, std::size_t dim) {
    Cells c;
    std::vector<double> cuts;
    for (const auto& n : tree.nodes)
        if (n.dim == static_cast<int>(dim)) cuts.push_back(n.threshold);
    if (cuts.empty()) {
        c.weight = {1.0};
        c.point = {dom.is_categorical() ? 0.0 : dom.lo};
        return c;
    }
    switch (dom.kind) {
        case DimKind::categorical:
            for (std::size_t k = 0; k < dom.categories; ++k) {
                c.weight.push_back(1.0 / static_cast<double>(dom.categories));
                c.point.push_back(static_cast<double>(k));
            }
            break;
        case DimKind::integer: {
            const double count = dom.hi - dom.lo + 1.0;
            for (double v = dom.lo; v <= dom.hi; v += 1.0) {
                c.weight.push_back(1.0 / count);
                c.point.push_back(v);
            }
            break;
        }
        case DimKind::continuous: {
            std::vector<double> b{dom.lo};
            std::sort(cuts.begin(), cuts.end());
            for (double t : cuts)
                if (t > b.back() && t < dom.hi) b.push_back(t);
            b.push_back(dom.hi);
            for (std::size_t k = 0; k + 1 < b.size(); ++k) {
                c.weight.push_back((b[k + 1] - b[k]) / (dom.hi - dom.lo));
                c.point.push_back(0.5 * (b[k] + b[k + 1]));
            }
            break;
        }
    }
    return c;
}

}  // namespace detail

/// Exact f_0, V, V_{i} and (for max_order >= 2) V_{i,j} of one tree.
inline TreeDecomposition variance_decomposition(const RegressionTree& tree, const SpaceDomains& domains,
                                                int max_order = 2) {
    const std::size_t D = domains.size();
    const std::size_t L = tree.leaves.size();
    TreeDecomposition out;
    out.single.assign(D, 0.0);
    if (max_order >= 2) out.pairs.assign(pair_count(D), 0.0);

    std::vector<std::vector<double>> w(L, std::vector<double>(D));
    std::vector<double> vol(L, 1.0);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t d = 0; d < D; ++d) {
            w[l][d] = tree.leaves[l].box[d].weight(domains[d]);
            vol[l] *= w[l][d];
        }
    double f0 = 0;
    for (std::size_t l = 0; l < L; ++l) f0 += vol[l] * tree.leaves[l].value;
    double var = 0;
    for (std::size_t l = 0; l < L; ++l) var += vol[l] * (tree.leaves[l].value - f0) * (tree.leaves[l].value - f0);
    out.mean = f0;
    out.total_variance = var;
    out.defined = var > 0.0;
    if (!out.defined) return out;

    const auto used = tree.split_dims(D);
    std::vector<detail::Cells> cells(D);
    // compat[d][l] = cells of dimension d lying inside leaf l's box
    std::vector<std::vector<std::vector<std::size_t>>> compat(D);
    for (std::size_t d = 0; d < D; ++d) {
        if (!used[d]) continue;
        cells[d] = detail::tree_cells(tree, domains[d], d);
        compat[d].resize(L);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t c = 0; c < cells[d].point.size(); ++c)
                if (tree.leaves[l].box[d].contains(domains[d], cells[d].point[c])) compat[d][l].push_back(c);
    }

    auto prod_except = [&](std::size_t l, std::size_t a, std::size_t b) {
        double p = tree.leaves[l].value;
        for (std::size_t d = 0; d < D; ++d)
            if (d != a && d != b) p *= w[l][d];
        return p;
    };

    std::vector<std::vector<double>> marg(D);
    for (std::size_t i = 0; i < D; ++i) {
        if (!used[i]) continue;
        marg[i].assign(cells[i].point.size(), 0.0);
        for (std::size_t l = 0; l < L; ++l) {
            const double p = prod_except(l, i, i);
            for (auto c : compat[i][l]) marg[i][c] += p;
        }
        double v = 0;
        for (std::size_t c = 0; c < marg[i].size(); ++c) v += cells[i].weight[c] * (marg[i][c] - f0) * (marg[i][c] - f0);
        out.single[i] = std::max(0.0, v);
    }

    if (max_order < 2) return out;
    for (std::size_t i = 0; i < D; ++i) {
        if (!used[i]) continue;
        for (std::size_t j = i + 1; j < D; ++j) {
            if (!used[j]) continue;
            const std::size_t ni = cells[i].point.size(), nj = cells[j].point.size();
            std::vector<double> a(ni * nj, 0.0);
            for (std::size_t l = 0; l < L; ++l) {
                const double p = prod_except(l, i, j);
                for (auto ci : compat[i][l])
                    for (auto cj : compat[j][l]) a[ci * nj + cj] += p;
            }
            double v = 0;
            for (std::size_t ci = 0; ci < ni; ++ci)
                for (std::size_t cj = 0; cj < nj; ++cj) {
                    const double f = a[ci * nj + cj] - marg[i][ci] - marg[j][cj] + f0;
                    v += cells[i].weight[ci] * cells[j].weight[cj] * f * f;
                }
            out.pairs[pair_index(i, j, D)] = std::max(0.0, v);
        }
    }
    return out;
}

struct MarginalTable {
    std::vector<std::size_t> dims;               // |U| = 1 or 2
    std::vector<std::vector<double>> grid;       // per dim of U
    std::vector<double> mean;                    // tree-averaged, row-major over the grid
    std::vector<std::vector<double>> per_tree;   // filled for singletons only

    double range() const {
        const auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
        return *hi - *lo;
    }
};

struct ImportanceEntry {
    std::vector<std::size_t> dims;
    std::optional<double> fraction;          // tree-averaged F_U, null when undefined
    std::vector<double> per_tree_fraction;   // trees with V > 0 only
    std::optional<double> marginal_range;    // singletons
};

struct ImportanceReport {
    std::vector<ImportanceEntry> singles;  // one per dimension
    std::vector<ImportanceEntry> pairs;    // lexicographic (i, j)
    std::vector<double> total_variance;    // per tree
    std::size_t undefined_trees = 0;
    std::vector<MarginalTable> single_marginals;
    std::vector<MarginalTable> pair_marginals;

    bool defined() const { return undefined_trees < total_variance.size(); }
};

inline MarginalTable marginal_table(const Forest& forest, std::vector<std::size_t> dims, bool keep_per_tree) {
    MarginalTable t;
    t.dims = std::move(dims);
    for (auto d : t.dims) t.grid.push_back(evaluation_grid(forest.domains.at(d)));
    std::vector<std::vector<double>> points;
    if (t.dims.size() == 1) {
        for (double v : t.grid[0]) points.push_back({v});
    } else {
        for (double a : t.grid[0])
            for (double b : t.grid[1]) points.push_back({a, b});
    }
    t.mean.assign(points.size(), 0.0);
    for (const auto& tree : forest.trees) {
        std::vector<double> row;
        for (std::size_t p = 0; p < points.size(); ++p) {
            const double m = tree_marginal(tree, forest.domains, t.dims, points[p]);
            t.mean[p] += m;
            if (keep_per_tree) row.push_back(m);
        }
        if (keep_per_tree) t.per_tree.push_back(std::move(row));
    }
    for (auto& v : t.mean) v /= static_cast<double>(forest.trees.size());
    return t;
}

/// Per-tree decompositions averaged over the forest; marginal ranges from
/// tree-averaged marginals on each dimension's evaluation grid.
inline ImportanceReport aggregate_importance(const Forest& forest, int max_order = 2, bool pair_tables = false) {
    const std::size_t D = forest.domains.size();
    ImportanceReport r;
    std::vector<TreeDecomposition> decs;
    decs.reserve(forest.trees.size());
    for (const auto& t : forest.trees) {
        decs.push_back(variance_decomposition(t, forest.domains, max_order));
        r.total_variance.push_back(decs.back().total_variance);
        if (!decs.back().defined) ++r.undefined_trees;
    }

    auto summarize = [&](std::vector<std::size_t> dims, auto&& getter) {
        ImportanceEntry e;
        e.dims = std::move(dims);
        double s = 0;
        for (const auto& d : decs) {
            if (!d.defined) continue;
            const double f = getter(d) / d.total_variance;
            e.per_tree_fraction.push_back(f);
            s += f;
        }
        if (!e.per_tree_fraction.empty()) e.fraction = s / static_cast<double>(e.per_tree_fraction.size());
        return e;
    };

    for (std::size_t i = 0; i < D; ++i) {
        auto e = summarize({i}, [i](const TreeDecomposition& d) { return d.single[i]; });
        auto table = marginal_table(forest, {i}, true);
        e.marginal_range = table.range();
        r.singles.push_back(std::move(e));
        r.single_marginals.push_back(std::move(table));
    }
    if (max_order >= 2) {
        for (std::size_t i = 0; i < D; ++i)
            for (std::size_t j = i + 1; j < D; ++j) {
                const auto k = pair_index(i, j, D);
                r.pairs.push_back(summarize({i, j}, [k](const TreeDecomposition& d) { return d.pairs[k]; }));
                if (pair_tables) r.pair_marginals.push_back(marginal_table(forest, {i, j}, false));
            }
    }
    return r;
}

inline nlohmann::json to_json(const MarginalTable& t) {
    return {{"dims", t.dims}, {"grid", t.grid}, {"mean", t.mean}};
}

}  // namespace qhpi
