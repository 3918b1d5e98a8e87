#pragma once

// Campaign orchestration: sampled training runs per dataset (resumable
// runs.csv), surrogate quality gate, fANOVA importance, verification search
// and the Markdown summary.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <limits>
#include <numeric>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qhpi/config_space.hpp"
#include "qhpi/csv.hpp"
#include "qhpi/data.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/fanova.hpp"
#include "qhpi/forest.hpp"
#include "qhpi/trainer.hpp"
#include "qhpi/util.hpp"
#include "qhpi/verification.hpp"

namespace qhpi {

namespace fs = std::filesystem;

struct ExperimentManifest {
    std::string dataset_manifest;
    std::size_t configs = 1000;
    std::size_t epochs = 100;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::size_t jobs = 1;
    std::size_t max_qubits = kMaxFeatures;
    std::size_t quality_folds = 10;
    std::size_t verify_iterations = kSearchIterations;
    std::size_t verify_repeats = kSearchRepeats;
    bool run_importance = true;
    bool run_verification = true;
    bool quiet = false;

    /// 200 configurations, 30 epochs, 5 folds, datasets of at most 6 features.
    void apply_desk_scale() {
        configs = 200;
        epochs = 30;
        folds = 5;
        max_qubits = 6;
    }

    void validate() const {
        if (configs == 0 || epochs == 0 || folds < 2 || jobs == 0 || quality_folds < 2 || verify_iterations == 0 ||
            verify_repeats == 0)
            throw ValidationError("experiment counts must be positive (folds >= 2)");
    }
};

inline void log_line(const ExperimentManifest& m, const std::string& msg) {
    if (!m.quiet) std::cerr << "[qhpi] " << msg << '\n';
}

// --- runs.csv -------------------------------------------------------------------

inline csv::Row runs_header() {
    csv::Row h(kHyperparameterNames.begin(), kHyperparameterNames.end());
    for (const char* extra : {"y", "status", "run_id", "seed"}) h.emplace_back(extra);
    return h;
}

inline csv::Row run_row_cells(const RunRow& r) {
    csv::Row row;
    for (std::size_t j = 0; j < kNumHyperparameters; ++j) row.push_back(csv_cell(r.config, j));
    row.push_back(r.y ? format_double(*r.y) : "");
    row.push_back(r.status == RunStatus::ok ? "ok" : "failed");
    row.push_back(std::to_string(r.run_id));
    row.push_back(std::to_string(r.seed));
    return row;
}

inline RunTable parse_run_table(const std::string& text, std::string dataset) {
    RunTable t;
    t.dataset = std::move(dataset);
    const auto rows = csv::parse(text);
    if (rows.empty()) return t;
    if (rows[0] != runs_header()) throw ParseError("runs.csv header does not match the expected columns");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& c = rows[i];
        if (c.size() != kNumHyperparameters + 4) throw ParseError("runs.csv row " + std::to_string(i + 1) + " is malformed");
        RunRow r;
        for (std::size_t j = 0; j < kNumHyperparameters; ++j) set_from_csv_cell(r.config, j, c[j]);
        validate(r.config);
        const auto& status = c[kNumHyperparameters + 1];
        if (status != "ok" && status != "failed") throw ParseError("unknown run status '" + status + "'");
        r.status = status == "ok" ? RunStatus::ok : RunStatus::failed;
        if (r.status == RunStatus::ok) {
            if (c[kNumHyperparameters].empty()) throw ParseError("successful run without y");
            r.y = std::stod(c[kNumHyperparameters]);
        }
        r.run_id = std::stoull(c[kNumHyperparameters + 2]);
        r.seed = std::stoull(c[kNumHyperparameters + 3]);
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline RunTable load_run_table(const fs::path& path, std::string dataset) {
    return parse_run_table(csv::read_file(path.string()), std::move(dataset));
}

inline void write_file_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
    }
    fs::rename(tmp, path);
}

inline std::string format_run_table(const RunTable& t) {
    std::string s = csv::format_row(runs_header());
    for (const auto& r : t.rows) s += csv::format_row(run_row_cells(r));
    return s;
}

// --- one run ----------------------------------------------------------------------

inline std::uint64_t run_seed(std::uint64_t master, const std::string& dataset, std::uint64_t run_id) {
    return derive_seed(master, dataset, run_id);
}

inline Configuration run_configuration(std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, "config"));
    return sample(rng);
}

struct RunResult {
    RunRow row;
    std::vector<TrainingRecord> folds;
};

/// Trains one sampled configuration on every fold; y is the mean over folds
/// of the best validation accuracy.
inline RunResult execute_run(const std::vector<std::pair<Samples, Samples>>& fold_data, std::uint64_t run_id,
                             std::uint64_t seed, std::size_t epochs) {
    RunResult res;
    res.row.run_id = run_id;
    res.row.seed = seed;
    res.row.config = run_configuration(seed);
    double sum = 0;
    bool failed = false;
    for (std::size_t f = 0; f < fold_data.size(); ++f) {
        TrainOptions opt;
        opt.epochs = epochs;
        opt.seed = derive_seed(seed, "fold", f);
        auto rec = train_fold(res.row.config, fold_data[f].first, fold_data[f].second, opt);
        failed = failed || rec.failed;
        sum += rec.best_val_accuracy;
        res.folds.push_back(std::move(rec));
        if (failed) break;
    }
    if (failed) {
        res.row.status = RunStatus::failed;
    } else {
        res.row.status = RunStatus::ok;
        res.row.y = sum / static_cast<double>(fold_data.size());
    }
    return res;
}

inline nlohmann::json to_json(const RunResult& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) folds.push_back(to_json(f));
    return {{"run_id", r.row.run_id},
            {"seed", r.row.seed},
            {"configuration", to_json(r.row.config)},
            {"status", r.row.status == RunStatus::ok ? "ok" : "failed"},
            {"y", r.row.y ? nlohmann::json(*r.row.y) : nlohmann::json(nullptr)},
            {"folds", folds}};
}

// --- sample-runs ------------------------------------------------------------------

inline fs::path dataset_dir(const ExperimentManifest& m, const std::string& name) { return fs::path(m.out_dir) / name; }

struct CampaignSummary {
    std::vector<std::string> completed;
    std::vector<std::pair<std::string, std::string>> skipped;  // dataset, reason
};

/// Rows already in runs.csv are kept byte for byte and never recomputed.
/// A trailing partial line left by an interrupted write is discarded.
inline RunTable run_campaign(const Dataset& data, const ExperimentManifest& m) {
    const fs::path dir = dataset_dir(m, data.name);
    fs::create_directories(dir / "records");
    const fs::path runs_path = dir / "runs.csv";

    std::string existing;
    if (fs::exists(runs_path)) {
        existing = csv::read_file(runs_path.string());
        const auto last_nl = existing.rfind('\n');
        existing = last_nl == std::string::npos ? std::string{} : existing.substr(0, last_nl + 1);
    }
    RunTable table = parse_run_table(existing, data.name);
    if (existing.empty()) existing = csv::format_row(runs_header());
    write_file_atomic(runs_path, existing);

    std::set<std::uint64_t> done;
    for (const auto& r : table.rows) done.insert(r.run_id);
    std::vector<std::uint64_t> pending;
    for (std::uint64_t i = 0; i < m.configs; ++i)
        if (!done.contains(i)) pending.push_back(i);
    log_line(m, data.name + ": " + std::to_string(done.size()) + " runs on disk, " + std::to_string(pending.size()) +
                    " to train (" + std::to_string(data.num_features()) + " qubits, " + std::to_string(data.size()) +
                    " instances)");

    const auto folds = make_folds(data, m.folds, derive_seed(m.seed, data.name, "folds"));
    std::vector<std::pair<Samples, Samples>> fold_data;
    for (const auto& f : folds) fold_data.push_back(fold_samples(data, f));

    std::ofstream out(runs_path, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot append to '" + runs_path.string() + "'");
    std::mutex write_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;

    auto worker = [&] {
        try {
            for (std::size_t k = next++; k < pending.size(); k = next++) {
                const auto id = pending[k];
                auto res = execute_run(fold_data, id, run_seed(m.seed, data.name, id), m.epochs);
                write_file_atomic(dir / "records" / ("run_" + std::to_string(id) + ".json"), to_json(res).dump(1) + "\n");
                std::lock_guard lock(write_mutex);
                out << csv::format_row(run_row_cells(res.row)) << std::flush;
                table.rows.push_back(res.row);
                if (!m.quiet && (table.rows.size() % 10 == 0 || table.rows.size() == m.configs))
                    log_line(m, data.name + ": " + std::to_string(table.rows.size()) + "/" + std::to_string(m.configs) +
                                    " runs");
            }
        } catch (...) {
            std::lock_guard lock(write_mutex);
            if (!error) error = std::current_exception();
            next = pending.size();
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t j = 1; j < std::min(m.jobs, std::max<std::size_t>(1, pending.size())); ++j) pool.emplace_back(worker);
        worker();
    }
    out.close();
    if (error) std::rethrow_exception(error);

    std::stable_sort(table.rows.begin(), table.rows.end(), [](const RunRow& a, const RunRow& b) { return a.run_id < b.run_id; });
    const std::string sorted = format_run_table(table);
    if (sorted != csv::read_file(runs_path.string())) write_file_atomic(runs_path, sorted);
    return table;
}

inline CampaignSummary cmd_sample_runs(const ExperimentManifest& m) {
    m.validate();
    CampaignSummary summary;
    fs::create_directories(m.out_dir);
    for (const auto& entry : load_manifest(m.dataset_manifest)) {
        Dataset data;
        try {
            data = preprocess(load_dataset(entry), entry);
        } catch (const std::exception& e) {
            log_line(m, "skipping " + entry.name + ": " + e.what());
            summary.skipped.emplace_back(entry.name, e.what());
            continue;
        }
        if (data.num_features() > m.max_qubits) {
            const std::string why = std::to_string(data.num_features()) + " features exceed the " +
                                    std::to_string(m.max_qubits) + "-qubit limit of this run";
            log_line(m, "skipping " + entry.name + ": " + why);
            summary.skipped.emplace_back(entry.name, why);
            continue;
        }
        run_campaign(data, m);
        summary.completed.push_back(entry.name);
    }
    return summary;
}

// --- analyze / verify --------------------------------------------------------------

inline std::vector<std::string> manifest_dataset_names(const ExperimentManifest& m) {
    std::vector<std::string> names;
    for (const auto& e : load_manifest(m.dataset_manifest)) names.push_back(e.name);
    return names;
}

/// Splits hyperparameters (sorted by decreasing score) into three levels at
/// the two largest gaps between consecutive scores.
inline std::vector<int> importance_levels(const std::vector<double>& sorted_desc) {
    const std::size_t n = sorted_desc.size();
    std::vector<int> level(n, 1);
    if (n < 3) return level;
    std::vector<std::pair<double, std::size_t>> gaps;
    for (std::size_t i = 0; i + 1 < n; ++i) gaps.emplace_back(sorted_desc[i] - sorted_desc[i + 1], i);
    std::stable_sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t a = std::min(gaps[0].second, gaps[1].second), b = std::max(gaps[0].second, gaps[1].second);
    for (std::size_t i = 0; i < n; ++i) level[i] = i <= a ? 1 : (i <= b ? 2 : 3);
    return level;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct DatasetAnalysis {
    std::string dataset;
    SurrogateQuality quality;
    std::string excluded_reason;  // empty when the dataset passed the gate
    std::optional<ImportanceReport> importance;
    std::optional<DatasetVerification> verification;
};

struct AnalysisResult {
    std::vector<DatasetAnalysis> datasets;
    std::optional<RankReport> ranks;
    bool any_passing = false;
};

inline std::string fmt_or_empty(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline void write_quality(const ExperimentManifest& m, const AnalysisResult& r) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : r.datasets) {
        auto j = to_json(d.quality);
        j["dataset"] = d.dataset;
        j["excluded_reason"] = d.excluded_reason.empty() ? nlohmann::json(nullptr) : nlohmann::json(d.excluded_reason);
        arr.push_back(std::move(j));
    }
    nlohmann::json doc{{"threshold_r2", kQualityThreshold}, {"folds", m.quality_folds}, {"datasets", arr}};
    write_file_atomic(fs::path(m.out_dir) / "quality.json", doc.dump(2) + "\n");
}

inline void write_importance(const ExperimentManifest& m, const AnalysisResult& r) {
    csv::Row header{"dataset", "U", "order", "variance_fraction", "marginal_range", "tree_fraction_q25",
                    "tree_fraction_median", "tree_fraction_q75"};
    std::string text = csv::format_row(header);
    nlohmann::json per_dataset = nlohmann::json::array();
    std::vector<std::vector<double>> fractions(kNumHyperparameters), ranges(kNumHyperparameters);

    for (const auto& d : r.datasets) {
        if (!d.importance) continue;
        const auto& rep = *d.importance;
        auto emit = [&](const ImportanceEntry& e, std::optional<double> range) {
            std::string u;
            for (std::size_t k = 0; k < e.dims.size(); ++k) u += (k ? ":" : "") + std::string(kHyperparameterNames[e.dims[k]]);
            text += csv::format_row({d.dataset, u, std::to_string(e.dims.size()), fmt_or_empty(e.fraction),
                                     fmt_or_empty(range), format_double(quantile(e.per_tree_fraction, 0.25)),
                                     format_double(quantile(e.per_tree_fraction, 0.5)),
                                     format_double(quantile(e.per_tree_fraction, 0.75))});
        };
        nlohmann::json singles = nlohmann::json::array();
        for (std::size_t i = 0; i < rep.singles.size(); ++i) {
            const auto& e = rep.singles[i];
            emit(e, e.marginal_range);
            if (e.fraction) fractions[i].push_back(*e.fraction);
            if (e.marginal_range) ranges[i].push_back(*e.marginal_range);
            singles.push_back({{"hyperparameter", kHyperparameterNames[i]},
                               {"variance_fraction", e.fraction ? nlohmann::json(*e.fraction) : nlohmann::json(nullptr)},
                               {"marginal_range", e.marginal_range ? nlohmann::json(*e.marginal_range) : nlohmann::json(nullptr)},
                               {"per_tree_fraction", e.per_tree_fraction},
                               {"marginal", to_json(rep.single_marginals[i])}});
        }
        for (const auto& e : rep.pairs) emit(e, std::nullopt);
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& e : rep.pairs)
            pairs.push_back({{"hyperparameters", {kHyperparameterNames[e.dims[0]], kHyperparameterNames[e.dims[1]]}},
                             {"variance_fraction", e.fraction ? nlohmann::json(*e.fraction) : nlohmann::json(nullptr)}});
        nlohmann::json tables = nlohmann::json::array();
        for (const auto& t : rep.pair_marginals) tables.push_back(to_json(t));
        per_dataset.push_back({{"dataset", d.dataset},
                               {"undefined_trees", rep.undefined_trees},
                               {"total_variance", rep.total_variance},
                               {"singles", singles},
                               {"pairs", pairs},
                               {"pair_marginals", tables}});
    }

    std::vector<std::size_t> order(kNumHyperparameters);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> med(kNumHyperparameters), med_range(kNumHyperparameters);
    for (std::size_t i = 0; i < kNumHyperparameters; ++i) {
        med[i] = median(fractions[i]);
        med_range[i] = median(ranges[i]);
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        const double x = std::isnan(med[a]) ? -1 : med[a], y = std::isnan(med[b]) ? -1 : med[b];
        return x > y;
    });
    std::vector<double> sorted;
    for (auto i : order) sorted.push_back(std::isnan(med[i]) ? 0.0 : med[i]);
    const auto levels = importance_levels(sorted);
    nlohmann::json ranking = nlohmann::json::array();
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto i = order[k];
        ranking.push_back({{"rank", k + 1},
                           {"hyperparameter", kHyperparameterNames[i]},
                           {"median_variance_fraction", std::isnan(med[i]) ? nlohmann::json(nullptr) : nlohmann::json(med[i])},
                           {"median_marginal_range",
                            std::isnan(med_range[i]) ? nlohmann::json(nullptr) : nlohmann::json(med_range[i])},
                           {"level", levels[k]}});
    }
    write_file_atomic(fs::path(m.out_dir) / "importance.csv", text);
    nlohmann::json doc{{"datasets", per_dataset}, {"median_ranking", ranking}};
    write_file_atomic(fs::path(m.out_dir) / "importance.json", doc.dump(1) + "\n");
}

inline void write_verification(const ExperimentManifest& m, const AnalysisResult& r) {
    if (!r.ranks) return;
    const auto& rk = *r.ranks;
    std::string text = csv::format_row({"iteration", "hyperparameter", "average_rank"});
    for (std::size_t t = 0; t < rk.mean_rank.size(); ++t)
        for (std::size_t j = 0; j < rk.mean_rank[t].size(); ++j)
            text += csv::format_row({std::to_string(t + 1), std::string(kHyperparameterNames[j]), format_double(rk.mean_rank[t][j])});
    write_file_atomic(fs::path(m.out_dir) / "verification.csv", text);

    std::string curves = csv::format_row({"dataset", "hyperparameter", "iteration", "best_so_far"});
    nlohmann::json per_dataset = nlohmann::json::array();
    for (const auto& d : r.datasets) {
        if (!d.verification) continue;
        const auto& v = *d.verification;
        for (std::size_t j = 0; j < v.mean_curve.size(); ++j)
            for (std::size_t t = 0; t < v.mean_curve[j].size(); ++t)
                curves += csv::format_row({d.dataset, std::string(kHyperparameterNames[j]), std::to_string(t + 1),
                                           format_double(v.mean_curve[j][t])});
        nlohmann::json ys = nlohmann::json::object();
        for (std::size_t j = 0; j < v.y_star.size(); ++j) ys[std::string(kHyperparameterNames[j])] = v.y_star[j];
        nlohmann::json entry{{"dataset", d.dataset}, {"y_star", ys}};
        if (d.importance) {
            // agreement between fANOVA importance and the verification ranking
            std::vector<double> imp, rank_at_end;
            std::vector<double> neg(v.y_star.size());
            for (std::size_t j = 0; j < v.y_star.size(); ++j) neg[j] = -v.mean_curve[j].back();
            const auto ranks = average_ranks(neg);
            for (std::size_t j = 0; j < v.y_star.size(); ++j) {
                imp.push_back(d.importance->singles[j].fraction.value_or(0.0));
                rank_at_end.push_back(ranks[j]);
            }
            const double cc = spearman(imp, rank_at_end);
            entry["importance_rank_spearman"] = std::isfinite(cc) ? nlohmann::json(cc) : nlohmann::json(nullptr);
        }
        per_dataset.push_back(std::move(entry));
    }
    write_file_atomic(fs::path(m.out_dir) / "verification_curves.csv", curves);
    nlohmann::json final_ranks = nlohmann::json::object();
    for (std::size_t j = 0; j < rk.final_ranks().size(); ++j)
        final_ranks[std::string(kHyperparameterNames[j])] = rk.final_ranks()[j];
    nlohmann::json doc{{"iterations", m.verify_iterations},
                       {"repeats", m.verify_repeats},
                       {"averaging", rk.averaging},
                       {"rank_direction", "1 = highest best-so-far score"},
                       {"final_average_rank", final_ranks},
                       {"datasets", per_dataset}};
    write_file_atomic(fs::path(m.out_dir) / "verification.json", doc.dump(2) + "\n");
}

/// Quality gate on every dataset with a runs.csv, then importance and/or
/// verification on the datasets that pass.
inline AnalysisResult analyze(const ExperimentManifest& m) {
    m.validate();
    AnalysisResult result;
    std::vector<DatasetVerification> verifications;
    for (const auto& name : manifest_dataset_names(m)) {
        const fs::path runs = dataset_dir(m, name) / "runs.csv";
        if (!fs::exists(runs)) {
            log_line(m, name + ": no runs.csv, skipped");
            continue;
        }
        DatasetAnalysis da;
        da.dataset = name;
        const RunTable table = load_run_table(runs, name);
        const auto ok = table.successful().size();
        da.quality.rows_used = ok;
        da.quality.rows_excluded = table.rows.size() - ok;
        if (ok < kMinQualityRows) {
            da.excluded_reason = "only " + std::to_string(ok) + " successful runs (need " + std::to_string(kMinQualityRows) + ")";
        } else {
            ForestOptions fo;
            fo.jobs = m.jobs;
            da.quality = assess_quality(table, m.quality_folds, derive_seed(m.seed, name, "quality"), fo);
            if (da.quality.zero_variance)
                da.excluded_reason = "all runs have the same performance (zero variance)";
            else if (!da.quality.passed)
                da.excluded_reason = "surrogate R2 " + format_double(da.quality.r2) + " below " + format_double(kQualityThreshold);
        }
        if (!da.excluded_reason.empty()) {
            log_line(m, name + " excluded: " + da.excluded_reason);
            result.datasets.push_back(std::move(da));
            continue;
        }
        result.any_passing = true;
        log_line(m, name + ": surrogate R2 " + format_double(da.quality.r2) + ", fitting full-data forest");
        ForestOptions fo;
        fo.jobs = m.jobs;
        const Forest forest = fit_forest(table, derive_seed(m.seed, name, "surrogate"), fo);
        write_file_atomic(dataset_dir(m, name) / "forest.json", to_json(forest).dump() + "\n");
        if (m.run_importance) {
            auto rep = aggregate_importance(forest, 2, false);
            rep.pair_marginals.push_back(marginal_table(forest, {kLearningRate, kDepth}, false));
            da.importance = std::move(rep);
        }
        if (m.run_verification) {
            VerificationOptions vo;
            vo.iterations = m.verify_iterations;
            vo.repeats = m.verify_repeats;
            vo.seed = derive_seed(m.seed, name, "verify");
            da.verification = verify_dataset(forest, name, vo);
            verifications.push_back(*da.verification);
        }
        result.datasets.push_back(std::move(da));
    }
    if (!verifications.empty()) result.ranks = rank_curves(verifications);

    fs::create_directories(m.out_dir);
    write_quality(m, result);
    if (result.any_passing && m.run_importance) write_importance(m, result);
    if (result.any_passing && m.run_verification) write_verification(m, result);
    return result;
}

inline AnalysisResult cmd_analyze(const ExperimentManifest& m) { return analyze(m); }

inline AnalysisResult cmd_verify(ExperimentManifest m) {
    m.run_importance = false;
    m.run_verification = true;
    return analyze(m);
}

// --- report -------------------------------------------------------------------------

/// Markdown summary from the files written by sample-runs and analyze.
inline std::string cmd_report(const std::string& out_dir) {
    const fs::path out(out_dir);
    std::vector<std::pair<std::string, fs::path>> runs;
    if (fs::is_directory(out))
        for (const auto& e : fs::directory_iterator(out))
            if (e.is_directory() && fs::exists(e.path() / "runs.csv")) runs.emplace_back(e.path().filename().string(), e.path() / "runs.csv");
    std::sort(runs.begin(), runs.end());

    std::vector<std::string> missing;
    if (runs.empty()) missing.push_back("<dataset>/runs.csv");
    for (const char* f : {"quality.json", "importance.csv", "importance.json", "verification.csv", "verification.json"})
        if (!fs::exists(out / f)) missing.push_back(f);
    if (!missing.empty()) {
        std::string msg = "missing analysis inputs in '" + out_dir + "':";
        for (const auto& f : missing) msg += " " + f;
        throw ValidationError(msg);
    }

    const auto quality = nlohmann::json::parse(csv::read_file((out / "quality.json").string()));
    const auto importance = nlohmann::json::parse(csv::read_file((out / "importance.json").string()));
    const auto verification = nlohmann::json::parse(csv::read_file((out / "verification.json").string()));
    auto num = [](const nlohmann::json& v) { return v.is_null() ? std::string("n/a") : format_double(v.get<double>()); };
    auto short_num = [](const nlohmann::json& v) {
        if (v.is_null()) return std::string("n/a");
        std::ostringstream s;
        s.precision(4);
        s << std::fixed << v.get<double>();
        return s.str();
    };

    std::ostringstream md;
    md << "# Hyperparameter importance summary\n\n";
    md << "## Performance distribution per dataset\n\n";
    md << "| Dataset | runs ok | runs failed | min | q25 | median | q75 | max |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& [name, path] : runs) {
        const auto table = load_run_table(path, name);
        std::vector<double> ys;
        for (const auto* r : table.successful()) ys.push_back(*r->y);
        auto cell = [&](double q) { return ys.empty() ? std::string("n/a") : short_num(quantile(ys, q)); };
        md << "| " << name << " | " << ys.size() << " | " << table.rows.size() - ys.size() << " | " << cell(0) << " | "
           << cell(0.25) << " | " << cell(0.5) << " | " << cell(0.75) << " | " << cell(1) << " |\n";
    }

    md << "\n## Surrogate quality (" << quality.value("folds", 10) << "-fold CV, gate R2 >= "
       << format_double(quality.value("threshold_r2", kQualityThreshold)) << ")\n\n";
    md << "| Dataset | R2 | RMSE | CC | Status |\n|---|---|---|---|---|\n";
    for (const auto& d : quality.at("datasets")) {
        md << "| " << d.at("dataset").get<std::string>() << " | " << short_num(d.at("r2")) << " | "
           << short_num(d.at("rmse")) << " | " << short_num(d.at("spearman_cc")) << " | "
           << (d.at("excluded_reason").is_null() ? std::string("kept") : "excluded: " + d.at("excluded_reason").get<std::string>())
           << " |\n";
    }

    md << "\n## Importance ranking (median over kept datasets)\n\n";
    md << "| Rank | Hyperparameter | Median variance fraction | Median marginal range | Level |\n|---|---|---|---|---|\n";
    for (const auto& r : importance.at("median_ranking"))
        md << "| " << r.at("rank").get<int>() << " | " << r.at("hyperparameter").get<std::string>() << " | "
           << short_num(r.at("median_variance_fraction")) << " | " << short_num(r.at("median_marginal_range")) << " | "
           << r.at("level").get<int>() << " |\n";

    md << "\n## Verification search (average rank at iteration " << verification.value("iterations", 0) << ")\n\n";
    md << "Higher rank = worse score when the hyperparameter is left untuned.\n\n";
    md << "| Hyperparameter | Average rank |\n|---|---|\n";
    for (const auto& [name, rank] : verification.at("final_average_rank").items())
        md << "| " << name << " | " << short_num(rank) << " |\n";
    for (const auto& d : verification.at("datasets"))
        if (d.contains("importance_rank_spearman"))
            md << "\nSpearman(importance, verification rank) on " << d.at("dataset").get<std::string>() << ": "
               << num(d.at("importance_rank_spearman")) << "\n";

    const std::string text = md.str();
    write_file_atomic(out / "summary.md", text);
    return text;
}

}  // namespace qhpi
