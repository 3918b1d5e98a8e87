#pragma once

// The ten-hyperparameter search space for the quantum classifier, its
// sampler, and the numeric encoding consumed by the surrogate forest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/util.hpp"

namespace qhpi {

enum class Entangler { cz, sqiswap };
enum class MapType { ring, full, pairs };
enum class Activation { linear, tanh };
enum class OutputCircuit { two_z, m_z };

inline constexpr std::size_t kNumHyperparameters = 10;

/// Slot indices into the encoded feature vector; order matches the runs.csv header.
enum Hp : std::size_t {
    kLearningRate = 0,
    kBatchsize,
    kDepth,
    kHardwareEfficient,
    kReuploading,
    kLessRotations,
    kEntangler,
    kMapType,
    kActivation,
    kOutputCircuit,
};

inline constexpr std::array<std::string_view, kNumHyperparameters> kHyperparameterNames{
    "learning_rate",
    "batchsize",
    "depth",
    "is_data_encoding_hardware_efficient",
    "use_reuploading",
    "have_less_rotations",
    "entangler_operation",
    "map_type",
    "input_activation_function",
    "output_circuit",
};

inline std::size_t hyperparameter_index(std::string_view name) {
    for (std::size_t i = 0; i < kNumHyperparameters; ++i)
        if (kHyperparameterNames[i] == name) return i;
    throw ConfigurationError("unknown hyperparameter '" + std::string(name) + "'");
}

enum class HpKind { continuous_log, integer_range, categorical };

struct HyperparameterDef {
    std::string name;
    HpKind kind = HpKind::categorical;
    double low = 0, high = 0;             // numeric kinds; natural (not log) units
    std::vector<std::string> categories;  // categorical kind, index order = encoding

    bool is_categorical() const noexcept { return kind == HpKind::categorical; }
    std::size_t num_categories() const noexcept { return categories.size(); }

    /// Range of the encoded slot: log10 for continuous_log, identity for integers.
    double encoded_low() const { return kind == HpKind::continuous_log ? std::log10(low) : low; }
    double encoded_high() const { return kind == HpKind::continuous_log ? std::log10(high) : high; }

    void validate() const {
        switch (kind) {
            case HpKind::continuous_log:
                if (!(low > 0 && low < high)) throw ConfigurationError(name + ": log range needs 0 < low < high");
                break;
            case HpKind::integer_range:
                if (!(low <= high)) throw ConfigurationError(name + ": empty integer range");
                break;
            case HpKind::categorical: {
                if (categories.empty()) throw ConfigurationError(name + ": empty category list");
                auto sorted = categories;
                std::sort(sorted.begin(), sorted.end());
                if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                    throw ConfigurationError(name + ": duplicate categories");
                break;
            }
        }
    }
};

using FeatureVector = std::array<double, kNumHyperparameters>;

struct Configuration {
    double learning_rate = 0.01;
    int batchsize = 32;
    int depth = 1;
    bool is_data_encoding_hardware_efficient = true;
    bool use_reuploading = false;
    bool have_less_rotations = true;
    Entangler entangler_operation = Entangler::cz;
    MapType map_type = MapType::ring;
    Activation input_activation_function = Activation::linear;
    OutputCircuit output_circuit = OutputCircuit::two_z;

    bool operator==(const Configuration&) const = default;
};

class ConfigSpace {
public:
    ConfigSpace() {
        defs_ = {{
            {"learning_rate", HpKind::continuous_log, 1e-4, 0.5, {}},
            {"batchsize", HpKind::categorical, 0, 0, {"16", "32", "64"}},
            {"depth", HpKind::integer_range, 1, 10, {}},
            {"is_data_encoding_hardware_efficient", HpKind::categorical, 0, 0, {"false", "true"}},
            {"use_reuploading", HpKind::categorical, 0, 0, {"false", "true"}},
            {"have_less_rotations", HpKind::categorical, 0, 0, {"false", "true"}},
            {"entangler_operation", HpKind::categorical, 0, 0, {"cz", "sqiswap"}},
            {"map_type", HpKind::categorical, 0, 0, {"ring", "full", "pairs"}},
            {"input_activation_function", HpKind::categorical, 0, 0, {"linear", "tanh"}},
            {"output_circuit", HpKind::categorical, 0, 0, {"2Z", "mZ"}},
        }};
        for (const auto& d : defs_) d.validate();
    }

    const HyperparameterDef& operator[](std::size_t j) const { return defs_.at(j); }
    std::size_t size() const noexcept { return defs_.size(); }
    const std::array<HyperparameterDef, kNumHyperparameters>& defs() const noexcept { return defs_; }

private:
    std::array<HyperparameterDef, kNumHyperparameters> defs_;
};

inline const ConfigSpace& default_space() {
    static const ConfigSpace space;
    return space;
}

// --- categorical <-> index ------------------------------------------------

inline int batchsize_index(int bs) {
    switch (bs) {
        case 16: return 0;
        case 32: return 1;
        case 64: return 2;
        default: throw ConfigurationError("batchsize " + std::to_string(bs) + " not in {16,32,64}");
    }
}

inline std::string category_of(const Configuration& c, std::size_t j) {
    const auto idx = [&]() -> std::size_t {
        switch (j) {
            case kBatchsize: return static_cast<std::size_t>(batchsize_index(c.batchsize));
            case kHardwareEfficient: return c.is_data_encoding_hardware_efficient;
            case kReuploading: return c.use_reuploading;
            case kLessRotations: return c.have_less_rotations;
            case kEntangler: return static_cast<std::size_t>(c.entangler_operation);
            case kMapType: return static_cast<std::size_t>(c.map_type);
            case kActivation: return static_cast<std::size_t>(c.input_activation_function);
            case kOutputCircuit: return static_cast<std::size_t>(c.output_circuit);
            default: throw ConfigurationError("hyperparameter is not categorical");
        }
    }();
    return default_space()[j].categories.at(idx);
}

inline std::size_t category_index(std::size_t j, std::string_view value) {
    const auto& cats = default_space()[j].categories;
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i] == value) return i;
    // Accept Python-style booleans as well.
    if (value == "True") return category_index(j, "true");
    if (value == "False") return category_index(j, "false");
    throw ConfigurationError("unknown value '" + std::string(value) + "' for " +
                             std::string(kHyperparameterNames[j]));
}

inline void validate(const Configuration& c) {
    const auto& s = default_space();
    if (!(c.learning_rate >= s[kLearningRate].low && c.learning_rate <= s[kLearningRate].high))
        throw ConfigurationError("learning_rate outside [1e-4, 0.5]");
    batchsize_index(c.batchsize);
    if (c.depth < 1 || c.depth > 10) throw ConfigurationError("depth outside 1..10");
    if (static_cast<int>(c.entangler_operation) > 1 || static_cast<int>(c.map_type) > 2 ||
        static_cast<int>(c.input_activation_function) > 1 || static_cast<int>(c.output_circuit) > 1)
        throw ConfigurationError("categorical value out of domain");
}

// --- sampling ---------------------------------------------------------------

/// One independent draw: log-uniform learning rate, uniform depth, uniform categoricals.
template <typename Rng>
Configuration sample(const ConfigSpace& space, Rng& rng) {
    const auto& lr = space[kLearningRate];
    std::uniform_real_distribution<double> u(std::log10(lr.low), std::log10(lr.high));
    auto pick = [&](std::size_t j) {
        std::uniform_int_distribution<std::size_t> d(0, space[j].num_categories() - 1);
        return d(rng);
    };
    Configuration c;
    c.learning_rate = std::clamp(std::pow(10.0, u(rng)), lr.low, lr.high);
    c.batchsize = std::array{16, 32, 64}[pick(kBatchsize)];
    std::uniform_int_distribution<int> depth(static_cast<int>(space[kDepth].low), static_cast<int>(space[kDepth].high));
    c.depth = depth(rng);
    c.is_data_encoding_hardware_efficient = pick(kHardwareEfficient) == 1;
    c.use_reuploading = pick(kReuploading) == 1;
    c.have_less_rotations = pick(kLessRotations) == 1;
    c.entangler_operation = static_cast<Entangler>(pick(kEntangler));
    c.map_type = static_cast<MapType>(pick(kMapType));
    c.input_activation_function = static_cast<Activation>(pick(kActivation));
    c.output_circuit = static_cast<OutputCircuit>(pick(kOutputCircuit));
    return c;
}

template <typename Rng>
Configuration sample(Rng& rng) {
    return sample(default_space(), rng);
}

// --- numeric encoding -------------------------------------------------------

inline bool is_categorical_dim(std::size_t j) { return default_space()[j].is_categorical(); }

inline FeatureVector to_feature_vector(const Configuration& c) {
    FeatureVector f{};
    f[kLearningRate] = std::log10(c.learning_rate);
    f[kBatchsize] = batchsize_index(c.batchsize);
    f[kDepth] = c.depth;
    f[kHardwareEfficient] = c.is_data_encoding_hardware_efficient;
    f[kReuploading] = c.use_reuploading;
    f[kLessRotations] = c.have_less_rotations;
    f[kEntangler] = static_cast<double>(c.entangler_operation);
    f[kMapType] = static_cast<double>(c.map_type);
    f[kActivation] = static_cast<double>(c.input_activation_function);
    f[kOutputCircuit] = static_cast<double>(c.output_circuit);
    return f;
}

/// Overwrites one hyperparameter from its encoded value.
inline void set_encoded(Configuration& c, std::size_t j, double v) {
    if (j >= kNumHyperparameters) throw ConfigurationError("hyperparameter index out of range");
    const auto& def = default_space()[j];
    auto cat = [&]() {
        const auto k = static_cast<long>(std::lround(v));
        if (k < 0 || static_cast<std::size_t>(k) >= def.num_categories() || std::abs(v - k) > 1e-9)
            throw ConfigurationError("encoded value out of domain for " + def.name);
        return static_cast<std::size_t>(k);
    };
    switch (j) {
        case kLearningRate:
            if (v < def.encoded_low() - 1e-12 || v > def.encoded_high() + 1e-12)
                throw ConfigurationError("learning_rate encoding out of domain");
            c.learning_rate = std::clamp(std::pow(10.0, v), def.low, def.high);
            break;
        case kBatchsize: c.batchsize = std::array{16, 32, 64}[cat()]; break;
        case kDepth: {
            const auto d = std::lround(v);
            if (d < 1 || d > 10 || std::abs(v - d) > 1e-9) throw ConfigurationError("depth out of domain");
            c.depth = static_cast<int>(d);
            break;
        }
        case kHardwareEfficient: c.is_data_encoding_hardware_efficient = cat() == 1; break;
        case kReuploading: c.use_reuploading = cat() == 1; break;
        case kLessRotations: c.have_less_rotations = cat() == 1; break;
        case kEntangler: c.entangler_operation = static_cast<Entangler>(cat()); break;
        case kMapType: c.map_type = static_cast<MapType>(cat()); break;
        case kActivation: c.input_activation_function = static_cast<Activation>(cat()); break;
        case kOutputCircuit: c.output_circuit = static_cast<OutputCircuit>(cat()); break;
        default: throw ConfigurationError("hyperparameter index out of range");
    }
}

inline Configuration from_feature_vector(const FeatureVector& f) {
    Configuration c;
    for (std::size_t j = 0; j < kNumHyperparameters; ++j) set_encoded(c, j, f[j]);
    return c;
}

/// Values a hyperparameter is pinned to during the fixed-hyperparameter
/// search, in encoded units: every category, every depth, or ten
/// log-spaced learning rates including both endpoints.
inline std::vector<double> fixing_grid(const ConfigSpace& space, std::size_t j) {
    if (j >= space.size()) throw ConfigurationError("hyperparameter index out of range");
    const auto& def = space[j];
    std::vector<double> grid;
    switch (def.kind) {
        case HpKind::categorical:
            for (std::size_t i = 0; i < def.num_categories(); ++i) grid.push_back(static_cast<double>(i));
            break;
        case HpKind::integer_range:
            for (auto v = static_cast<long>(def.low); v <= static_cast<long>(def.high); ++v)
                grid.push_back(static_cast<double>(v));
            break;
        case HpKind::continuous_log: {
            const double lo = def.encoded_low(), hi = def.encoded_high();
            for (int i = 0; i < 10; ++i) grid.push_back(i == 9 ? hi : lo + (hi - lo) * i / 9.0);
            break;
        }
    }
    return grid;
}

inline std::vector<double> fixing_grid(std::size_t j) { return fixing_grid(default_space(), j); }

/// Human-readable value of an encoded slot (category label, integer, or learning rate).
inline std::string describe_encoded(std::size_t j, double v) {
    const auto& def = default_space()[j];
    switch (def.kind) {
        case HpKind::categorical: return def.categories.at(static_cast<std::size_t>(std::lround(v)));
        case HpKind::integer_range: return std::to_string(std::lround(v));
        case HpKind::continuous_log: return format_double(std::clamp(std::pow(10.0, v), def.low, def.high));
    }
    return {};
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json to_json(const Configuration& c) {
    nlohmann::ordered_json j;
    j["learning_rate"] = c.learning_rate;
    j["batchsize"] = c.batchsize;
    j["depth"] = c.depth;
    j["is_data_encoding_hardware_efficient"] = c.is_data_encoding_hardware_efficient;
    j["use_reuploading"] = c.use_reuploading;
    j["have_less_rotations"] = c.have_less_rotations;
    j["entangler_operation"] = category_of(c, kEntangler);
    j["map_type"] = category_of(c, kMapType);
    j["input_activation_function"] = category_of(c, kActivation);
    j["output_circuit"] = category_of(c, kOutputCircuit);
    return nlohmann::json(j);
}

inline Configuration configuration_from_json(const nlohmann::json& j) {
    Configuration c;
    try {
        c.learning_rate = j.at("learning_rate").get<double>();
        c.batchsize = j.at("batchsize").get<int>();
        c.depth = j.at("depth").get<int>();
        c.is_data_encoding_hardware_efficient = j.at("is_data_encoding_hardware_efficient").get<bool>();
        c.use_reuploading = j.at("use_reuploading").get<bool>();
        c.have_less_rotations = j.at("have_less_rotations").get<bool>();
        c.entangler_operation =
            static_cast<Entangler>(category_index(kEntangler, j.at("entangler_operation").get<std::string>()));
        c.map_type = static_cast<MapType>(category_index(kMapType, j.at("map_type").get<std::string>()));
        c.input_activation_function = static_cast<Activation>(
            category_index(kActivation, j.at("input_activation_function").get<std::string>()));
        c.output_circuit =
            static_cast<OutputCircuit>(category_index(kOutputCircuit, j.at("output_circuit").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed configuration JSON: ") + e.what());
    }
    validate(c);
    return c;
}

/// Cell text for one hyperparameter column of runs.csv.
inline std::string csv_cell(const Configuration& c, std::size_t j) {
    switch (j) {
        case kLearningRate: return format_double(c.learning_rate);
        case kDepth: return std::to_string(c.depth);
        default: return category_of(c, j);
    }
}

inline void set_from_csv_cell(Configuration& c, std::size_t j, const std::string& cell) {
    try {
        switch (j) {
            case kLearningRate: c.learning_rate = std::stod(cell); return;
            case kDepth: c.depth = std::stoi(cell); return;
            default: set_encoded(c, j, static_cast<double>(category_index(j, cell)));
        }
    } catch (const std::logic_error&) {
        throw ParseError("bad value '" + cell + "' for " + std::string(kHyperparameterNames[j]));
    }
}

// --- run table --------------------------------------------------------------

enum class RunStatus { ok, failed };

struct RunRow {
    std::uint64_t run_id = 0;
    std::uint64_t seed = 0;
    Configuration config;
    std::optional<double> y;  // absent for failed runs
    RunStatus status = RunStatus::ok;
};

struct RunTable {
    std::string dataset;
    std::vector<RunRow> rows;

    std::vector<const RunRow*> successful() const {
        std::vector<const RunRow*> out;
        for (const auto& r : rows)
            if (r.status == RunStatus::ok && r.y) out.push_back(&r);
        return out;
    }
    std::size_t failed_count() const { return rows.size() - successful().size(); }
};

}  // namespace qhpi
