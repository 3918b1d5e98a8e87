#pragma once

// Tabular dataset ingestion (CSV / ARFF via a JSON manifest), preprocessing
// (missing rows dropped, one-hot categoricals, constant columns removed) and
// stratified k-fold splits with train-fitted standardization.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qhpi/csv.hpp"
#include "qhpi/errors.hpp"

namespace qhpi {

inline constexpr std::size_t kMaxFeatures = 20;

struct DatasetManifest {
    std::string name;
    std::string path;  // resolved against the manifest's directory
    std::string label_column;
    std::string positive_label;
    std::vector<std::string> categorical_columns;
    std::int64_t openml_task_id = 0;
};

inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    DatasetManifest m;
    try {
        m.name = j.at("name").get<std::string>();
        m.path = j.at("path").get<std::string>();
        m.label_column = j.at("label_column").get<std::string>();
        if (j.contains("positive_label"))
            m.positive_label = j.at("positive_label").is_string() ? j.at("positive_label").get<std::string>()
                                                                  : j.at("positive_label").dump();
        if (j.contains("categorical_columns"))
            m.categorical_columns = j.at("categorical_columns").get<std::vector<std::string>>();
        if (j.contains("openml_task_id")) m.openml_task_id = j.at("openml_task_id").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed dataset manifest entry: ") + e.what());
    }
    if (!base.empty() && std::filesystem::path(m.path).is_relative()) m.path = (base / m.path).string();
    return m;
}

/// A manifest file holds a single entry, an array of entries, or {"datasets": [...]}.
inline std::vector<DatasetManifest> load_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(csv::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest '" + path + "' is not valid JSON: " + e.what());
    }
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<DatasetManifest> out;
    const nlohmann::json& list = j.is_object() && j.contains("datasets") ? j.at("datasets") : j;
    if (list.is_array()) {
        for (const auto& e : list) out.push_back(manifest_from_json(e, base));
    } else {
        out.push_back(manifest_from_json(list, base));
    }
    return out;
}

struct RawTable {
    std::vector<std::string> columns;
    std::vector<bool> nominal;  // declared nominal in the source (ARFF) or by the manifest
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ParseError("unknown column '" + name + "'");
    }
};

inline bool is_missing(const std::string& s) { return s.empty() || s == "?" || s == "NA" || s == "nan"; }

inline std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c); };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

namespace detail {

inline std::string unquote(std::string s) {
    s = trim(std::move(s));
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

// Splits on commas outside single or double quotes.
inline std::vector<std::string> split_arff_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    for (char c : line) {
        if (quote) {
            cur += c;
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"') {
            quote = c;
            cur += c;
        } else if (c == ',') {
            out.push_back(unquote(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(unquote(cur));
    return out;
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

inline RawTable parse_arff(const std::string& text) {
    RawTable t;
    bool in_data = false;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line[0] == '%') {
            if (end == text.size()) break;
            continue;
        }
        if (!in_data) {
            const auto head = detail::lower(line.substr(0, std::min<std::size_t>(line.size(), 10)));
            if (head.starts_with("@relation")) continue;
            if (head.starts_with("@data")) {
                in_data = true;
                continue;
            }
            if (head.starts_with("@attribute")) {
                std::string rest = trim(line.substr(10));
                std::string name;
                if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
                    const auto close = rest.find(rest[0], 1);
                    if (close == std::string::npos) throw ParseError("unterminated attribute name at line " + std::to_string(line_no));
                    name = rest.substr(1, close - 1);
                    rest = trim(rest.substr(close + 1));
                } else {
                    const auto sp = rest.find_first_of(" \t");
                    if (sp == std::string::npos) throw ParseError("attribute without type at line " + std::to_string(line_no));
                    name = rest.substr(0, sp);
                    rest = trim(rest.substr(sp));
                }
                t.columns.push_back(name);
                t.nominal.push_back(!rest.empty() && rest[0] == '{');
                continue;
            }
            throw ParseError("unexpected ARFF header line " + std::to_string(line_no));
        }
        auto cells = detail::split_arff_row(line);
        if (cells.size() != t.columns.size())
            throw ParseError("ARFF row at line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " values, expected " + std::to_string(t.columns.size()));
        t.rows.push_back(std::move(cells));
        if (end == text.size()) break;
    }
    if (t.columns.empty()) throw ParseError("ARFF file declares no attributes");
    if (!in_data) throw ParseError("ARFF file has no @data section");
    return t;
}

inline RawTable parse_csv_table(const std::string& text) {
    auto rows = csv::parse(text);
    if (rows.empty()) throw ParseError("empty CSV file (header row required)");
    RawTable t;
    for (auto& c : rows[0]) t.columns.push_back(trim(c));
    t.nominal.assign(t.columns.size(), false);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() == 1 && trim(rows[r][0]).empty()) continue;
        if (rows[r].size() != t.columns.size())
            throw ParseError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                             " fields, header has " + std::to_string(t.columns.size()));
        for (auto& c : rows[r]) c = trim(c);
        t.rows.push_back(std::move(rows[r]));
    }
    return t;
}

/// Reads a CSV or ARFF file and checks it against the manifest.
inline RawTable load_dataset(const std::string& path, const DatasetManifest& manifest) {
    const std::string text = csv::read_file(path);
    if (trim(text).empty()) throw ParseError("'" + path + "' is empty");
    const auto ext = detail::lower(std::filesystem::path(path).extension().string());
    RawTable t = ext == ".arff" ? parse_arff(text) : parse_csv_table(text);
    if (t.rows.empty()) throw ParseError("'" + path + "' has no data rows");

    const auto label = t.column_index(manifest.label_column);
    for (const auto& c : manifest.categorical_columns) t.nominal[t.column_index(c)] = true;

    std::set<std::string> labels;
    for (const auto& r : t.rows)
        if (!is_missing(r[label])) labels.insert(r[label]);
    if (labels.size() > 2)
        throw ValidationError("label column '" + manifest.label_column + "' has " + std::to_string(labels.size()) +
                              " distinct values; binary labels required");
    if (!manifest.positive_label.empty() && !labels.contains(manifest.positive_label))
        throw ValidationError("positive label '" + manifest.positive_label + "' does not occur in '" +
                              manifest.label_column + "'");
    return t;
}

inline RawTable load_dataset(const DatasetManifest& manifest) { return load_dataset(manifest.path, manifest); }

/// Row-major feature matrix plus binary labels.
struct Samples {
    std::size_t num_features = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(features).subspan(i * num_features, num_features);
    }
    void push_back(std::span<const double> x, int y) {
        features.insert(features.end(), x.begin(), x.end());
        labels.push_back(y);
    }
};

struct Dataset {
    std::string name;
    std::vector<std::string> feature_names;
    Samples samples;

    std::size_t num_features() const noexcept { return samples.num_features; }
    std::size_t size() const noexcept { return samples.size(); }
};

/// Missing-value rows dropped, labels mapped to {0,1}, categoricals
/// one-hot encoded (categories sorted), constant columns removed.
inline Dataset preprocess(const RawTable& raw, const DatasetManifest& manifest) {
    const auto label = raw.column_index(manifest.label_column);

    std::vector<const std::vector<std::string>*> rows;
    for (const auto& r : raw.rows)
        if (std::none_of(r.begin(), r.end(), [](const std::string& c) { return is_missing(c); })) rows.push_back(&r);
    if (rows.empty()) throw ValidationError("no complete rows after dropping missing values");

    std::string positive = manifest.positive_label;
    if (positive.empty()) {
        std::set<std::string> labels;
        for (auto* r : rows) labels.insert((*r)[label]);
        positive = *labels.rbegin();
    }

    struct Column {
        std::string name;
        std::vector<double> values;
    };
    std::vector<Column> cols;
    for (std::size_t c = 0; c < raw.columns.size(); ++c) {
        if (c == label) continue;
        bool nominal = raw.nominal[c];
        std::vector<double> numeric;
        if (!nominal) {
            numeric.reserve(rows.size());
            for (auto* r : rows) {
                const std::string& cell = (*r)[c];
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str() || *end != '\0') {
                    throw ParseError("non-numeric value '" + cell + "' in column '" + raw.columns[c] +
                                     "' (declare it categorical in the manifest)");
                }
                numeric.push_back(v);
            }
            cols.push_back({raw.columns[c], std::move(numeric)});
            continue;
        }
        std::set<std::string> cats;
        for (auto* r : rows) cats.insert((*r)[c]);
        for (const auto& cat : cats) {
            Column col{raw.columns[c] + "=" + cat, {}};
            col.values.reserve(rows.size());
            for (auto* r : rows) col.values.push_back((*r)[c] == cat ? 1.0 : 0.0);
            cols.push_back(std::move(col));
        }
    }

    std::erase_if(cols, [](const Column& col) {
        return std::all_of(col.values.begin(), col.values.end(), [&](double v) { return v == col.values.front(); });
    });
    if (cols.empty()) throw ValidationError("every feature column is constant");
    if (cols.size() > kMaxFeatures)
        throw ValidationError(std::to_string(cols.size()) + " features after preprocessing; at most " +
                              std::to_string(kMaxFeatures) + " are supported");

    Dataset d;
    d.name = manifest.name;
    d.samples.num_features = cols.size();
    d.samples.features.reserve(rows.size() * cols.size());
    for (const auto& col : cols) d.feature_names.push_back(col.name);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const auto& col : cols) d.samples.features.push_back(col.values[i]);
        d.samples.labels.push_back((*rows[i])[label] == positive ? 1 : 0);
    }
    return d;
}

// --- folds and scaling ------------------------------------------------------

struct FoldSplit {
    std::size_t fold_index = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified k-fold: each class is shuffled and dealt round-robin over the
/// folds, continuing the deal position across classes so fold sizes differ
/// by at most one.
inline std::vector<FoldSplit> make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("need at least 2 folds");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, idx] : by_class)
        if (idx.size() < k)
            throw ValidationError("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                                  " instances, fewer than " + std::to_string(k) + " folds");

    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> test(k);
    std::size_t deal = 0;
    for (auto& [cls, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (auto i : idx) test[deal++ % k].push_back(i);
    }

    std::vector<FoldSplit> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        folds[f].fold_index = f;
        std::sort(test[f].begin(), test[f].end());
        folds[f].test = test[f];
        for (std::size_t g = 0; g < k; ++g)
            if (g != f) folds[f].train.insert(folds[f].train.end(), test[g].begin(), test[g].end());
        std::sort(folds[f].train.begin(), folds[f].train.end());
    }
    return folds;
}

inline std::vector<FoldSplit> make_folds(const Dataset& d, std::size_t k, std::uint64_t seed) {
    return make_folds(d.samples.labels, k, seed);
}

/// Per-column mean and population standard deviation.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> sd;

    static Standardizer fit(const Samples& s, std::span<const std::size_t> rows) {
        const std::size_t m = s.num_features;
        Standardizer st{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
        if (rows.empty()) throw ValidationError("cannot fit scaling on zero rows");
        for (auto r : rows)
            for (std::size_t c = 0; c < m; ++c) st.mean[c] += s.row(r)[c];
        for (auto& v : st.mean) v /= static_cast<double>(rows.size());
        for (auto r : rows)
            for (std::size_t c = 0; c < m; ++c) {
                const double d = s.row(r)[c] - st.mean[c];
                st.sd[c] += d * d;
            }
        for (auto& v : st.sd) {
            v = std::sqrt(v / static_cast<double>(rows.size()));
            if (v == 0.0) v = 1.0;  // column constant on this fold: centre only
        }
        return st;
    }

    Samples apply(const Samples& s, std::span<const std::size_t> rows) const {
        Samples out;
        out.num_features = s.num_features;
        out.features.reserve(rows.size() * s.num_features);
        out.labels.reserve(rows.size());
        for (auto r : rows) {
            const auto x = s.row(r);
            for (std::size_t c = 0; c < s.num_features; ++c) out.features.push_back((x[c] - mean[c]) / sd[c]);
            out.labels.push_back(s.labels[r]);
        }
        return out;
    }
};

/// Train/test samples of one fold, both scaled with train-only statistics.
inline std::pair<Samples, Samples> fold_samples(const Dataset& d, const FoldSplit& split) {
    const auto st = Standardizer::fit(d.samples, split.train);
    return {st.apply(d.samples, split.train), st.apply(d.samples, split.test)};
}

}  // namespace qhpi
