#pragma once

// Assembles the layered classifier circuit (encoding, entangling,
// variational rotations, Z-product observables) from a Configuration.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qhpi/config_space.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/statevector.hpp"

namespace qhpi {

struct EntanglingMap {
    MapType map_type = MapType::ring;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

inline EntanglingMap build_entangling_map(MapType type, std::size_t n) {
    if (n < 2) throw ValidationError("entangling map needs at least 2 qubits");
    EntanglingMap m{type, {}};
    switch (type) {
        case MapType::ring:
            if (n == 2) {
                m.pairs.emplace_back(0, 1);
            } else {
                for (std::size_t i = 0; i < n; ++i) m.pairs.emplace_back(i, (i + 1) % n);
            }
            break;
        case MapType::full:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) m.pairs.emplace_back(i, j);
            break;
        case MapType::pairs:
            for (std::size_t i = 0; i + 1 < n; i += 2) m.pairs.emplace_back(i, i + 1);
            for (std::size_t i = 1; i + 1 < n; i += 2) m.pairs.emplace_back(i, i + 1);
            break;
    }
    return m;
}

// Circuit program entries.
struct FixedGateOp {
    GateSpec gate;
};
struct InputSlot {  // RX(a(x[feature])) on qubit
    std::size_t feature = 0;
    std::size_t qubit = 0;
    Activation activation = Activation::linear;
};
struct ParamSlot {  // axis(params[index]) on qubit
    std::size_t index = 0;
    GateKind axis = GateKind::RY;
    std::size_t qubit = 0;
};
struct IqpSlot {  // diagonal phase built from the full feature vector
    Activation activation = Activation::linear;
};

using CircuitOp = std::variant<FixedGateOp, InputSlot, ParamSlot, IqpSlot>;

struct CircuitTemplate {
    std::size_t num_qubits = 0;
    std::vector<CircuitOp> ops;
    std::size_t num_parameters = 0;
    ObservableSpec observable;

    std::size_t num_encoding_blocks() const {
        std::size_t iqp = 0, inputs = 0;
        for (const auto& op : ops) {
            if (std::holds_alternative<IqpSlot>(op)) ++iqp;
            if (std::holds_alternative<InputSlot>(op)) ++inputs;
        }
        return iqp + (num_qubits ? inputs / num_qubits : 0);
    }

    bool has_iqp() const {
        for (const auto& op : ops)
            if (std::holds_alternative<IqpSlot>(op)) return true;
        return false;
    }
};

inline double activate(Activation a, double x) noexcept { return a == Activation::tanh ? std::tanh(x) : x; }

/// exp(-i*pi*[sum_i a_i z_i + sum_{i<j} a_i a_j z_i z_j]) per basis state,
/// with z_i = +1 when qubit i is 0 and -1 when it is 1.
inline std::vector<cplx> iqp_phases(std::size_t n, std::span<const double> x, Activation act) {
    if (x.size() != n) throw ValidationError("feature vector length must equal qubit count");
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = activate(act, x[i]);
    const std::size_t dim = std::size_t{1} << n;
    std::vector<cplx> phases(dim);
    std::vector<double> z(n);
    for (std::size_t b = 0; b < dim; ++b) {
        for (std::size_t i = 0; i < n; ++i) z[i] = (b >> (n - 1 - i)) & 1 ? -1.0 : 1.0;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s += a[i] * z[i];
            for (std::size_t j = i + 1; j < n; ++j) s += a[i] * a[j] * z[i] * z[j];
        }
        phases[b] = std::polar(1.0, -std::numbers::pi * s);
    }
    return phases;
}

inline std::vector<CircuitOp> build_encoding_block(const Configuration& config, std::size_t n) {
    std::vector<CircuitOp> ops;
    const auto act = config.input_activation_function;
    if (config.is_data_encoding_hardware_efficient) {
        for (std::size_t q = 0; q < n; ++q) ops.emplace_back(InputSlot{q, q, act});
    } else {
        for (std::size_t q = 0; q < n; ++q) ops.emplace_back(FixedGateOp{GateSpec::single(GateKind::H, q)});
        ops.emplace_back(IqpSlot{act});
    }
    return ops;
}

/// Encoding (once, or before every layer when reuploading), then per layer:
/// entangling gates over the map, then RX? RY RZ on each qubit.
inline CircuitTemplate assemble_circuit(const Configuration& config, std::size_t n) {
    validate(config);
    if (n < 1 || n > kMaxQubits) throw CapacityError("qubit count out of range");
    CircuitTemplate t;
    t.num_qubits = n;
    t.observable = ObservableSpec::make(
        config.output_circuit == OutputCircuit::two_z ? ObservableMode::PAIRS_ZZ : ObservableMode::ALL_Z, n);

    const auto encoding = build_encoding_block(config, n);
    const GateKind entangler = config.entangler_operation == Entangler::cz ? GateKind::CZ : GateKind::SQISWAP;
    const EntanglingMap map = n >= 2 ? build_entangling_map(config.map_type, n) : EntanglingMap{config.map_type, {}};

    std::vector<GateKind> axes;
    if (!config.have_less_rotations) axes.push_back(GateKind::RX);
    axes.push_back(GateKind::RY);
    axes.push_back(GateKind::RZ);

    if (!config.use_reuploading) t.ops.insert(t.ops.end(), encoding.begin(), encoding.end());
    std::size_t p = 0;
    for (int layer = 0; layer < config.depth; ++layer) {
        if (config.use_reuploading) t.ops.insert(t.ops.end(), encoding.begin(), encoding.end());
        for (const auto& [a, b] : map.pairs) t.ops.emplace_back(FixedGateOp{GateSpec::pair(entangler, a, b)});
        for (std::size_t q = 0; q < n; ++q)
            for (auto axis : axes) t.ops.emplace_back(ParamSlot{p++, axis, q});
    }
    t.num_parameters = p;
    return t;
}

namespace detail {

inline void check_shapes(const CircuitTemplate& t, std::span<const double> x, std::span<const double> params) {
    if (x.size() != t.num_qubits)
        throw ValidationError("feature vector has " + std::to_string(x.size()) + " entries, circuit has " +
                              std::to_string(t.num_qubits) + " qubits");
    if (params.size() != t.num_parameters)
        throw ValidationError("parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                              std::to_string(t.num_parameters));
}

}  // namespace detail

/// Runs the template into `state` (reset to |0...0>). `phases` is scratch for
/// the IQP diagonal and is filled on first use.
inline void run_circuit(const CircuitTemplate& t, std::span<const double> x, std::span<const double> params,
                        StateVector& state, std::vector<cplx>& phases) {
    detail::check_shapes(t, x, params);
    auto amps = state.amplitudes();
    std::fill(amps.begin(), amps.end(), cplx{0, 0});
    amps[0] = 1.0;
    bool phases_ready = false;
    for (const auto& op : t.ops) {
        if (const auto* g = std::get_if<FixedGateOp>(&op)) {
            apply_gate(state, g->gate);
        } else if (const auto* in = std::get_if<InputSlot>(&op)) {
            state.apply_matrix(single_qubit_matrix(GateKind::RX, activate(in->activation, x[in->feature])),
                               in->qubit);
        } else if (const auto* ps = std::get_if<ParamSlot>(&op)) {
            state.apply_matrix(single_qubit_matrix(ps->axis, params[ps->index]), ps->qubit);
        } else if (const auto* iqp = std::get_if<IqpSlot>(&op)) {
            if (!phases_ready) {
                phases = iqp_phases(t.num_qubits, x, iqp->activation);
                phases_ready = true;
            }
            state.apply_phases(phases);
        }
    }
}

inline StateVector realize_circuit(const CircuitTemplate& t, std::span<const double> x,
                                   std::span<const double> params) {
    StateVector s(t.num_qubits);
    std::vector<cplx> phases;
    run_circuit(t, x, params, s, phases);
    return s;
}

inline StateVector realize_circuit(const CircuitTemplate& t, const std::vector<double>& x,
                                   const std::vector<double>& params) {
    return realize_circuit(t, std::span<const double>(x), std::span<const double>(params));
}

inline nlohmann::json to_json(const CircuitTemplate& t) {
    using nlohmann::json;
    json ops = json::array();
    auto act_name = [](Activation a) { return a == Activation::tanh ? "tanh" : "linear"; };
    for (const auto& op : t.ops) {
        if (const auto* g = std::get_if<FixedGateOp>(&op)) {
            ops.push_back({{"type", "gate"}, {"kind", to_string(g->gate.kind)}, {"targets", g->gate.targets}});
        } else if (const auto* in = std::get_if<InputSlot>(&op)) {
            ops.push_back({{"type", "input"},
                           {"feature", in->feature},
                           {"qubit", in->qubit},
                           {"gate", "RX"},
                           {"activation", act_name(in->activation)}});
        } else if (const auto* ps = std::get_if<ParamSlot>(&op)) {
            ops.push_back({{"type", "param"}, {"index", ps->index}, {"axis", to_string(ps->axis)}, {"qubit", ps->qubit}});
        } else if (const auto* iqp = std::get_if<IqpSlot>(&op)) {
            ops.push_back({{"type", "iqp"}, {"activation", act_name(iqp->activation)}});
        }
    }
    return {{"num_qubits", t.num_qubits},
            {"num_parameters", t.num_parameters},
            {"observable",
             {{"mode", t.observable.mode == ObservableMode::PAIRS_ZZ ? "PAIRS_ZZ" : "ALL_Z"},
              {"terms", t.observable.terms}}},
            {"ops", ops}};
}

}  // namespace qhpi
