#pragma once

// Circuit + sigmoid-neuron binary classifier: forward pass, cross-entropy
// loss, exact circuit gradients, Adam, and the per-fold training loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qhpi/circuit.hpp"
#include "qhpi/config_space.hpp"
#include "qhpi/data.hpp"
#include "qhpi/errors.hpp"
#include "qhpi/statevector.hpp"
#include "qhpi/util.hpp"

namespace qhpi {

struct ModelParameters {
    std::vector<double> circuit_params;
    std::vector<double> head_weights;
    double head_bias = 0.0;

    std::size_t size() const noexcept { return circuit_params.size() + head_weights.size() + 1; }

    bool all_finite() const {
        auto fin = [](double v) { return std::isfinite(v); };
        return std::all_of(circuit_params.begin(), circuit_params.end(), fin) &&
               std::all_of(head_weights.begin(), head_weights.end(), fin) && std::isfinite(head_bias);
    }

    ModelParameters with_negated_head() const {
        ModelParameters m = *this;
        for (auto& w : m.head_weights) w = -w;
        m.head_bias = -m.head_bias;
        return m;
    }
};

/// Gradient with the same layout as ModelParameters.
using ModelGradient = ModelParameters;

inline ModelGradient zero_gradient_like(const ModelParameters& m) {
    return {std::vector<double>(m.circuit_params.size(), 0.0), std::vector<double>(m.head_weights.size(), 0.0), 0.0};
}

inline void check_model(const CircuitTemplate& t, const ModelParameters& m) {
    if (m.circuit_params.size() != t.num_parameters)
        throw ValidationError("model has " + std::to_string(m.circuit_params.size()) + " circuit parameters, template needs " +
                              std::to_string(t.num_parameters));
    if (m.head_weights.size() != t.observable.size())
        throw ValidationError("model has " + std::to_string(m.head_weights.size()) + " head weights, observable has " +
                              std::to_string(t.observable.size()) + " terms");
}

inline double logit_from(const ModelParameters& m, std::span<const double> expectations) {
    double z = m.head_bias;
    for (std::size_t k = 0; k < expectations.size(); ++k) z += m.head_weights[k] * expectations[k];
    return z;
}

inline double forward(const CircuitTemplate& t, const ModelParameters& m, std::span<const double> x) {
    check_model(t, m);
    const auto state = realize_circuit(t, x, m.circuit_params);
    return sigmoid(logit_from(m, expectations(state, t.observable)));
}

inline constexpr double kProbClamp = 1e-12;

inline double loss(double p, int y) {
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return y == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

/// dL/dp of the clamped cross-entropy (zero where the clamp is active).
inline double loss_derivative(double p, int y) {
    if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
    return y == 1 ? -1.0 / p : 1.0 / (1.0 - p);
}

namespace detail {

// Shared by both gradient routes: chain dL/dp * dp/dz into head gradients.
inline ModelGradient head_gradient(const ModelParameters& m, std::span<const double> ev, double p, int y,
                                   double& dl_dz) {
    dl_dz = loss_derivative(p, y) * p * (1.0 - p);
    ModelGradient g = zero_gradient_like(m);
    for (std::size_t k = 0; k < ev.size(); ++k) g.head_weights[k] = dl_dz * ev[k];
    g.head_bias = dl_dz;
    return g;
}

}  // namespace detail

/// Loss gradient with circuit derivatives from the parameter-shift rule:
/// d<O>/dθ = (<O>(θ+π/2) - <O>(θ-π/2)) / 2 per observable term.
inline ModelGradient circuit_gradient(const CircuitTemplate& t, const ModelParameters& m, std::span<const double> x,
                                      int y) {
    check_model(t, m);
    const auto ev = expectations(realize_circuit(t, x, m.circuit_params), t.observable);
    const double p = sigmoid(logit_from(m, ev));
    double dl_dz = 0;
    ModelGradient g = detail::head_gradient(m, ev, p, y, dl_dz);

    std::vector<double> shifted = m.circuit_params;
    const double shift = std::numbers::pi / 2;
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        const double orig = shifted[i];
        shifted[i] = orig + shift;
        const auto plus = expectations(realize_circuit(t, x, shifted), t.observable);
        shifted[i] = orig - shift;
        const auto minus = expectations(realize_circuit(t, x, shifted), t.observable);
        shifted[i] = orig;
        double d = 0;
        for (std::size_t k = 0; k < ev.size(); ++k) d += m.head_weights[k] * (plus[k] - minus[k]) / 2;
        g.circuit_params[i] = dl_dz * d;
    }
    return g;
}

/// Reusable buffers for the adjoint gradient; one per worker thread.
class AdjointWorkspace {
public:
    explicit AdjointWorkspace(std::size_t n) : psi_(n), lambda_(n) {}

    StateVector& psi() noexcept { return psi_; }
    StateVector& lambda() noexcept { return lambda_; }
    std::vector<cplx>& phases() noexcept { return phases_; }

private:
    StateVector psi_, lambda_;
    std::vector<cplx> phases_;
};

namespace detail {

inline void apply_inverse(const CircuitOp& op, StateVector& s, std::span<const double> x,
                          std::span<const double> params, const std::vector<cplx>& phases) {
    if (const auto* g = std::get_if<FixedGateOp>(&op)) {
        const auto& gate = g->gate;
        switch (gate.kind) {
            case GateKind::CZ: s.apply_cz(gate.targets[0], gate.targets[1]); return;
            case GateKind::SQISWAP: {
                auto m = two_qubit_matrix(gate.kind);
                Matrix4 inv{};
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 4; ++c) inv[4 * r + c] = std::conj(m[4 * c + r]);
                s.apply_matrix(inv, gate.targets[0], gate.targets[1]);
                return;
            }
            case GateKind::DIAGONAL_PHASE: s.apply_conj_phases(gate.phases); return;
            default: {
                const auto m = single_qubit_matrix(gate.kind, gate.angle);
                s.apply_matrix(Matrix2{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])},
                               gate.targets[0]);
                return;
            }
        }
    } else if (const auto* in = std::get_if<InputSlot>(&op)) {
        s.apply_matrix(single_qubit_matrix(GateKind::RX, -activate(in->activation, x[in->feature])), in->qubit);
    } else if (const auto* ps = std::get_if<ParamSlot>(&op)) {
        s.apply_matrix(single_qubit_matrix(ps->axis, -params[ps->index]), ps->qubit);
    } else {
        s.apply_conj_phases(phases);
    }
}

// Im <lambda| P |psi> for the Pauli generator P of a rotation on qubit q.
inline double generator_overlap(const StateVector& lambda, const StateVector& psi, GateKind axis, std::size_t q) {
    const auto l = lambda.amplitudes();
    const auto p = psi.amplitudes();
    const std::size_t bit = psi.mask(q);
    cplx acc = 0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        if (b & bit) continue;
        const std::size_t b1 = b | bit;
        switch (axis) {
            case GateKind::RX: acc += std::conj(l[b]) * p[b1] + std::conj(l[b1]) * p[b]; break;
            case GateKind::RY: acc += std::conj(l[b]) * (cplx{0, -1} * p[b1]) + std::conj(l[b1]) * (cplx{0, 1} * p[b]); break;
            default: acc += std::conj(l[b]) * p[b] - std::conj(l[b1]) * p[b1]; break;
        }
    }
    return acc.imag();
}

}  // namespace detail

/// Same gradient as circuit_gradient, computed in one forward and one
/// backward sweep: d<O>/dθ_i = Im <λ_i| P_i |ψ_i> with λ = O ψ propagated
/// backwards. O = Σ_k w_k Z-product_k is diagonal.
inline ModelGradient adjoint_gradient(const CircuitTemplate& t, const ModelParameters& m, std::span<const double> x,
                                      int y, AdjointWorkspace& ws, double* prob_out = nullptr) {
    check_model(t, m);
    StateVector& psi = ws.psi();
    StateVector& lambda = ws.lambda();
    run_circuit(t, x, m.circuit_params, psi, ws.phases());

    const std::size_t n = t.num_qubits;
    const auto amps = psi.amplitudes();
    std::vector<std::size_t> masks;
    masks.reserve(t.observable.size());
    for (const auto& term : t.observable.terms) masks.push_back(term_mask(term, n));

    std::vector<double> ev(masks.size(), 0.0);
    auto lam = lambda.amplitudes();
    for (std::size_t b = 0; b < amps.size(); ++b) {
        const double prob = std::norm(amps[b]);
        double diag = 0;
        for (std::size_t k = 0; k < masks.size(); ++k) {
            const double sign = (std::popcount(b & masks[k]) & 1) ? -1.0 : 1.0;
            ev[k] += sign * prob;
            diag += m.head_weights[k] * sign;
        }
        lam[b] = diag * amps[b];
    }
    const double p = sigmoid(logit_from(m, ev));
    if (prob_out) *prob_out = p;
    double dl_dz = 0;
    ModelGradient g = detail::head_gradient(m, ev, p, y, dl_dz);

    for (auto it = t.ops.rbegin(); it != t.ops.rend(); ++it) {
        if (const auto* ps = std::get_if<ParamSlot>(&*it))
            g.circuit_params[ps->index] = dl_dz * detail::generator_overlap(lambda, psi, ps->axis, ps->qubit);
        detail::apply_inverse(*it, psi, x, m.circuit_params, ws.phases());
        detail::apply_inverse(*it, lambda, x, m.circuit_params, ws.phases());
    }
    return g;
}

inline ModelGradient adjoint_gradient(const CircuitTemplate& t, const ModelParameters& m, std::span<const double> x,
                                      int y) {
    AdjointWorkspace ws(t.num_qubits);
    return adjoint_gradient(t, m, x, y, ws);
}

// --- Adam -------------------------------------------------------------------

struct AdamConstants {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

/// First and second moment estimates, laid out like ModelParameters.
struct AdamState {
    ModelParameters m, v;

    static AdamState like(const ModelParameters& p) { return {zero_gradient_like(p), zero_gradient_like(p)}; }
};

/// One bias-corrected Adam update; step_count starts at 1.
inline void adam_step(ModelParameters& model, const ModelGradient& grads, AdamState& state, std::size_t step_count,
                      double lr, const AdamConstants& k = {}) {
    if (step_count < 1) throw ValidationError("Adam step count starts at 1");
    const double bc1 = 1.0 - std::pow(k.beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(k.beta2, static_cast<double>(step_count));
    auto update = [&](double& theta, double g, double& m, double& v) {
        m = k.beta1 * m + (1 - k.beta1) * g;
        v = k.beta2 * v + (1 - k.beta2) * g * g;
        theta -= lr * (m / bc1) / (std::sqrt(v / bc2) + k.epsilon);
    };
    for (std::size_t i = 0; i < model.circuit_params.size(); ++i)
        update(model.circuit_params[i], grads.circuit_params[i], state.m.circuit_params[i], state.v.circuit_params[i]);
    for (std::size_t i = 0; i < model.head_weights.size(); ++i)
        update(model.head_weights[i], grads.head_weights[i], state.m.head_weights[i], state.v.head_weights[i]);
    update(model.head_bias, grads.head_bias, state.m.head_bias, state.v.head_bias);
}

// --- training loop ----------------------------------------------------------

/// Circuit angles uniform in [0, 2π), head weights Glorot-uniform, bias 0.
template <typename Rng>
ModelParameters init_model(const CircuitTemplate& t, Rng& rng) {
    ModelParameters m;
    std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
    m.circuit_params.resize(t.num_parameters);
    for (auto& p : m.circuit_params) p = angle(rng);
    const double limit = std::sqrt(6.0 / (static_cast<double>(t.observable.size()) + 1.0));
    std::uniform_real_distribution<double> w(-limit, limit);
    m.head_weights.resize(t.observable.size());
    for (auto& v : m.head_weights) v = w(rng);
    m.head_bias = 0.0;
    return m;
}

enum class GradientMethod { adjoint, parameter_shift };

struct TrainOptions {
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    GradientMethod gradient = GradientMethod::adjoint;
    std::optional<ModelParameters> initial_model;  // overrides seeded initialization
};

struct TrainingRecord {
    std::vector<double> per_epoch_val_accuracy;
    std::vector<double> per_epoch_train_loss;  // mean loss over the epoch's samples, before each update
    double best_val_accuracy = 0.0;
    std::size_t epochs_run = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure_reason;
};

inline double accuracy(const CircuitTemplate& t, const ModelParameters& m, const Samples& data) {
    if (data.size() == 0) return 0.0;
    StateVector s(t.num_qubits);
    std::vector<cplx> phases;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        run_circuit(t, data.row(i), m.circuit_params, s, phases);
        const double p = sigmoid(logit_from(m, expectations(s, t.observable)));
        correct += (p >= 0.5 ? 1 : 0) == data.labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

inline void check_binary(const Samples& s) {
    for (int y : s.labels)
        if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1, found " + std::to_string(y));
}

/// Mini-batch Adam on `train`; validation accuracy (threshold 0.5) after each epoch.
inline TrainingRecord train_fold(const Configuration& config, const Samples& train, const Samples& validation,
                                 const TrainOptions& options) {
    check_binary(train);
    check_binary(validation);
    if (train.size() == 0) throw ValidationError("empty training set");
    const std::size_t n = train.num_features;
    if (validation.num_features != n) throw ValidationError("train/validation feature counts differ");
    const CircuitTemplate t = assemble_circuit(config, n);

    TrainingRecord rec;
    rec.seed = options.seed;
    std::mt19937_64 init_rng(derive_seed(options.seed, "init"));
    ModelParameters model = options.initial_model ? *options.initial_model : init_model(t, init_rng);
    check_model(t, model);
    AdamState adam = AdamState::like(model);
    AdjointWorkspace ws(n);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = static_cast<std::size_t>(config.batchsize);
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(derive_seed(options.seed, "epoch", epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            ModelGradient acc = zero_gradient_like(model);
            for (std::size_t b = start; b < stop; ++b) {
                const auto i = order[b];
                double p = 0;
                ModelGradient g;
                if (options.gradient == GradientMethod::adjoint) {
                    g = adjoint_gradient(t, model, train.row(i), train.labels[i], ws, &p);
                } else {
                    g = circuit_gradient(t, model, train.row(i), train.labels[i]);
                    p = forward(t, model, train.row(i));
                }
                loss_sum += loss(p, train.labels[i]);
                for (std::size_t k = 0; k < g.circuit_params.size(); ++k) acc.circuit_params[k] += g.circuit_params[k];
                for (std::size_t k = 0; k < g.head_weights.size(); ++k) acc.head_weights[k] += g.head_weights[k];
                acc.head_bias += g.head_bias;
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto& v : acc.circuit_params) v *= scale;
            for (auto& v : acc.head_weights) v *= scale;
            acc.head_bias *= scale;
            adam_step(model, acc, adam, ++step, config.learning_rate);
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss) || !model.all_finite()) {
            rec.failed = true;
            rec.failure_reason = "non-finite loss or parameters at epoch " + std::to_string(epoch + 1);
            rec.epochs_run = epoch + 1;
            return rec;
        }
        rec.per_epoch_train_loss.push_back(mean_loss);
        rec.per_epoch_val_accuracy.push_back(accuracy(t, model, validation));
        rec.epochs_run = epoch + 1;
    }
    rec.best_val_accuracy = rec.per_epoch_val_accuracy.empty()
                                ? 0.0
                                : *std::max_element(rec.per_epoch_val_accuracy.begin(), rec.per_epoch_val_accuracy.end());
    return rec;
}

inline nlohmann::json to_json(const TrainingRecord& r) {
    nlohmann::json j{{"per_epoch_val_accuracy", r.per_epoch_val_accuracy},
                     {"per_epoch_train_loss", r.per_epoch_train_loss},
                     {"best_val_accuracy", r.best_val_accuracy},
                     {"epochs_run", r.epochs_run},
                     {"seed", r.seed},
                     {"failed", r.failed}};
    if (r.failed) j["failure_reason"] = r.failure_reason;
    return j;
}

}  // namespace qhpi
