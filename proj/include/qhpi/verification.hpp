#pragma once

// Surrogate-driven random search with one hyperparameter pinned at a time.
// A hyperparameter whose pinned searches end low (low y*_j, high average
// rank) matters to tune.

#include <algorithm>
#include <concepts>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qhpi/config_space.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/forest.hpp"
#include "qhpi/util.hpp"

namespace qhpi {

template <typename S>
concept Surrogate = requires(const S& s, const Configuration& c) {
    { s(c) } -> std::convertible_to<double>;
};

inline constexpr std::size_t kSearchIterations = 500;
inline constexpr std::size_t kSearchRepeats = 10;

struct BestSoFarCurve {
    std::size_t hyperparameter = 0;
    double fixed_value = 0.0;  // encoded units
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::vector<double> best;  // running maximum per iteration
};

namespace detail {

template <Surrogate S, typename Rng, typename Fix>
std::vector<double> running_max_search(const S& surrogate, std::size_t iterations, Rng& rng, Fix&& fix) {
    std::vector<double> best;
    best.reserve(iterations);
    double cur = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < iterations; ++t) {
        Configuration c = sample(rng);
        fix(c);
        cur = std::max(cur, static_cast<double>(surrogate(c)));
        best.push_back(cur);
    }
    return best;
}

}  // namespace detail

/// Random search with hyperparameter j pinned to f (encoded). Every draw
/// samples the full configuration first, so searches that share an rng
/// seed see the same values in all other dimensions.
template <Surrogate S, typename Rng>
std::vector<double> fixed_search(const S& surrogate, std::size_t j, double f, std::size_t iterations, Rng& rng) {
    Configuration probe;
    try {
        set_encoded(probe, j, f);
    } catch (const ConfigurationError& e) {
        throw ValidationError(std::string("fixed value outside the domain: ") + e.what());
    }
    return detail::running_max_search(surrogate, iterations, rng, [&](Configuration& c) { set_encoded(c, j, f); });
}

template <Surrogate S, typename Rng>
std::vector<double> unconstrained_search(const S& surrogate, std::size_t iterations, Rng& rng) {
    return detail::running_max_search(surrogate, iterations, rng, [](Configuration&) {});
}

/// y*_j: mean of the final best scores over the fixed values of j.
inline double aggregate_y_star(std::span<const double> finals) {
    if (finals.empty()) throw ValidationError("no fixed-value results to aggregate");
    return std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size());
}

struct DatasetVerification {
    std::string dataset;
    std::vector<BestSoFarCurve> curves;
    std::vector<std::vector<double>> mean_curve;  // [j][t], averaged over repeats then fixed values
    std::vector<double> y_star;                   // [j]
};

struct VerificationOptions {
    std::size_t iterations = kSearchIterations;
    std::size_t repeats = kSearchRepeats;
    std::uint64_t seed = 0;
};

/// Runs every (j, f, repeat) search. Repeat r uses the same rng seed for
/// all j and f.
template <Surrogate S>
DatasetVerification verify_dataset(const S& surrogate, std::string dataset, const VerificationOptions& opt) {
    if (opt.iterations == 0 || opt.repeats == 0) throw ValidationError("verification needs iterations and repeats >= 1");
    DatasetVerification out;
    out.dataset = std::move(dataset);
    for (std::size_t j = 0; j < kNumHyperparameters; ++j) {
        const auto grid = fixing_grid(j);
        std::vector<double> curve(opt.iterations, 0.0);
        std::vector<double> finals;
        for (double f : grid) {
            std::vector<double> per_f(opt.iterations, 0.0);
            for (std::size_t r = 0; r < opt.repeats; ++r) {
                const auto seed = derive_seed(opt.seed, "verify", r);
                std::mt19937_64 rng(seed);
                auto best = fixed_search(surrogate, j, f, opt.iterations, rng);
                for (std::size_t t = 0; t < opt.iterations; ++t) per_f[t] += best[t] / static_cast<double>(opt.repeats);
                out.curves.push_back({j, f, r, seed, std::move(best)});
            }
            finals.push_back(per_f.back());
            for (std::size_t t = 0; t < opt.iterations; ++t) curve[t] += per_f[t] / static_cast<double>(grid.size());
        }
        out.y_star.push_back(aggregate_y_star(finals));
        out.mean_curve.push_back(std::move(curve));
    }
    return out;
}

struct RankReport {
    std::vector<std::vector<double>> mean_rank;  // [t][j]
    std::vector<std::string> datasets;
    std::vector<std::vector<double>> y_star;     // [dataset][j]
    std::string averaging = "repeats, then fixed values, then datasets";

    std::vector<double> final_ranks() const { return mean_rank.empty() ? std::vector<double>{} : mean_rank.back(); }
};

/// At each iteration rank the per-hyperparameter curves of a dataset
/// (rank 1 = highest score, ties averaged), then average over datasets.
inline RankReport rank_curves(std::span<const DatasetVerification> runs) {
    if (runs.empty()) throw ValidationError("no verification runs to rank");
    const std::size_t J = runs.front().mean_curve.size();
    const std::size_t T = J ? runs.front().mean_curve.front().size() : 0;
    if (J != kNumHyperparameters)
        throw ValidationError("verification must cover all " + std::to_string(kNumHyperparameters) +
                              " hyperparameters, got " + std::to_string(J));
    if (T == 0) throw ValidationError("empty verification curves");
    RankReport rep;
    rep.mean_rank.assign(T, std::vector<double>(J, 0.0));
    for (const auto& run : runs) {
        if (run.mean_curve.size() != J || run.y_star.size() != J)
            throw ValidationError("dataset '" + run.dataset + "' does not cover every hyperparameter");
        for (const auto& c : run.mean_curve)
            if (c.size() != T) throw ValidationError("verification curves differ in length");
        rep.datasets.push_back(run.dataset);
        rep.y_star.push_back(run.y_star);
        std::vector<double> neg(J);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < J; ++j) neg[j] = -run.mean_curve[j][t];
            const auto r = average_ranks(neg);
            for (std::size_t j = 0; j < J; ++j) rep.mean_rank[t][j] += r[j] / static_cast<double>(runs.size());
        }
    }
    return rep;
}

}  // namespace qhpi
