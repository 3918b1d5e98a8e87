#pragma once

// Dense n-qubit statevector simulation.
//
// Basis convention: qubit 0 is the most significant bit of the basis index,
// so for n = 2 the amplitude order is |00>, |01>, |10>, |11>.

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qhpi/errors.hpp"

namespace qhpi {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 24;

enum class GateKind { H, X, Y, Z, RX, RY, RZ, CZ, SQISWAP, DIAGONAL_PHASE };

constexpr std::string_view to_string(GateKind k) noexcept {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::X: return "X";
        case GateKind::Y: return "Y";
        case GateKind::Z: return "Z";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CZ: return "CZ";
        case GateKind::SQISWAP: return "SQISWAP";
        case GateKind::DIAGONAL_PHASE: return "DIAGONAL_PHASE";
    }
    return "?";
}

constexpr bool is_rotation(GateKind k) noexcept {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

constexpr std::size_t gate_arity(GateKind k) noexcept {
    switch (k) {
        case GateKind::CZ:
        case GateKind::SQISWAP: return 2;
        case GateKind::DIAGONAL_PHASE: return 0;  // acts on the whole register
        default: return 1;
    }
}

using Matrix2 = std::array<cplx, 4>;   // row-major
using Matrix4 = std::array<cplx, 16>;  // row-major, local index = 2*b(t0) + b(t1)

struct GateSpec {
    GateKind kind = GateKind::H;
    double angle = 0.0;                // radians, RX/RY/RZ only
    std::vector<std::size_t> targets;  // ordered
    std::vector<cplx> phases;          // DIAGONAL_PHASE only, length 2^n

    static GateSpec single(GateKind k, std::size_t q, double angle = 0.0) { return {k, angle, {q}, {}}; }
    static GateSpec pair(GateKind k, std::size_t a, std::size_t b) { return {k, 0.0, {a, b}, {}}; }
    static GateSpec diagonal(std::vector<cplx> phases) {
        return {GateKind::DIAGONAL_PHASE, 0.0, {}, std::move(phases)};
    }
};

inline Matrix2 single_qubit_matrix(GateKind kind, double angle = 0.0) {
    using std::numbers::sqrt2;
    const cplx i{0.0, 1.0};
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    switch (kind) {
        case GateKind::H: return {1 / sqrt2, 1 / sqrt2, 1 / sqrt2, -1 / sqrt2};
        case GateKind::X: return {0, 1, 1, 0};
        case GateKind::Y: return {0, -i, i, 0};
        case GateKind::Z: return {1, 0, 0, -1};
        case GateKind::RX: return {c, -i * s, -i * s, c};
        case GateKind::RY: return {c, -s, s, c};
        case GateKind::RZ: return {std::polar(1.0, -angle / 2), 0, 0, std::polar(1.0, angle / 2)};
        default: throw ValidationError("not a single-qubit gate: " + std::string(to_string(kind)));
    }
}

inline Matrix4 two_qubit_matrix(GateKind kind) {
    Matrix4 m{};
    switch (kind) {
        case GateKind::CZ:
            m[0] = m[5] = m[10] = 1;
            m[15] = -1;
            return m;
        case GateKind::SQISWAP: {
            const double r = 1 / std::numbers::sqrt2;
            m[0] = m[15] = 1;
            m[5] = m[10] = r;
            m[6] = m[9] = cplx{0, r};
            return m;
        }
        default: throw ValidationError("not a two-qubit gate: " + std::string(to_string(kind)));
    }
}

/// Pure n-qubit state. Amplitudes are stored densely; length is always 2^n.
class StateVector {
public:
    explicit StateVector(std::size_t num_qubits) : n_(num_qubits) {
        if (num_qubits < 1 || num_qubits > kMaxQubits)
            throw CapacityError("qubit count " + std::to_string(num_qubits) + " outside [1, " +
                                std::to_string(kMaxQubits) + "]");
        amps_.assign(std::size_t{1} << n_, cplx{0.0, 0.0});
        amps_[0] = 1.0;
    }

    StateVector(std::size_t num_qubits, std::vector<cplx> amplitudes) : n_(num_qubits) {
        if (num_qubits < 1 || num_qubits > kMaxQubits) throw CapacityError("qubit count out of range");
        if (amplitudes.size() != (std::size_t{1} << n_))
            throw ValidationError("amplitude vector length must be 2^n");
        amps_ = std::move(amplitudes);
    }

    std::size_t num_qubits() const noexcept { return n_; }
    std::size_t dimension() const noexcept { return amps_.size(); }
    std::span<const cplx> amplitudes() const noexcept { return amps_; }
    std::span<cplx> amplitudes() noexcept { return amps_; }
    const cplx& operator[](std::size_t b) const { return amps_[b]; }

    double norm_squared() const noexcept {
        double s = 0;
        for (const auto& a : amps_) s += std::norm(a);
        return s;
    }

    /// Bit mask of qubit q inside a basis index.
    std::size_t mask(std::size_t q) const noexcept { return std::size_t{1} << (n_ - 1 - q); }

    void check_qubit(std::size_t q) const {
        if (q >= n_)
            throw BoundsError("qubit index " + std::to_string(q) + " out of range for " + std::to_string(n_) +
                              " qubits");
    }

    void apply_matrix(const Matrix2& m, std::size_t q) {
        check_qubit(q);
        const std::size_t bit = mask(q);
        const std::size_t dim = amps_.size();
        for (std::size_t hi = 0; hi < dim; hi += 2 * bit) {
            for (std::size_t b = hi; b < hi + bit; ++b) {
                const cplx a0 = amps_[b], a1 = amps_[b | bit];
                amps_[b] = m[0] * a0 + m[1] * a1;
                amps_[b | bit] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    void apply_matrix(const Matrix4& m, std::size_t q0, std::size_t q1) {
        check_qubit(q0);
        check_qubit(q1);
        if (q0 == q1) throw ValidationError("two-qubit gate targets must be distinct");
        const std::size_t b0 = mask(q0), b1 = mask(q1);
        for (std::size_t b = 0; b < amps_.size(); ++b) {
            if (b & (b0 | b1)) continue;
            const std::array<std::size_t, 4> idx{b, b | b1, b | b0, b | b0 | b1};
            std::array<cplx, 4> in{amps_[idx[0]], amps_[idx[1]], amps_[idx[2]], amps_[idx[3]]};
            for (std::size_t r = 0; r < 4; ++r) {
                cplx acc = 0;
                for (std::size_t c = 0; c < 4; ++c) acc += m[4 * r + c] * in[c];
                amps_[idx[r]] = acc;
            }
        }
    }

    // CZ is diagonal; skip the generic 4x4 path.
    void apply_cz(std::size_t q0, std::size_t q1) {
        check_qubit(q0);
        check_qubit(q1);
        if (q0 == q1) throw ValidationError("two-qubit gate targets must be distinct");
        const std::size_t both = mask(q0) | mask(q1);
        for (std::size_t b = 0; b < amps_.size(); ++b)
            if ((b & both) == both) amps_[b] = -amps_[b];
    }

    void apply_phases(std::span<const cplx> phases) {
        if (phases.size() != amps_.size())
            throw ValidationError("phase vector length " + std::to_string(phases.size()) + " != 2^n = " +
                                  std::to_string(amps_.size()));
        for (std::size_t b = 0; b < amps_.size(); ++b) amps_[b] *= phases[b];
    }

    void apply_conj_phases(std::span<const cplx> phases) {
        if (phases.size() != amps_.size()) throw ValidationError("phase vector length != 2^n");
        for (std::size_t b = 0; b < amps_.size(); ++b) amps_[b] *= std::conj(phases[b]);
    }

private:
    std::size_t n_;
    std::vector<cplx> amps_;
};

inline StateVector init_state(std::size_t n) { return StateVector(n); }

inline void validate_phases(std::span<const cplx> phases, double tol = 1e-12) {
    for (const auto& p : phases)
        if (std::abs(std::abs(p) - 1.0) > tol) throw ValidationError("diagonal phase is not unit modulus");
}

/// Multiplies amplitude b by phases[b]. Phases must be unit modulus.
inline void apply_diagonal_phase(StateVector& state, std::span<const cplx> phases) {
    if (phases.size() != state.dimension()) throw ValidationError("phase vector length must equal 2^n");
    validate_phases(phases);
    state.apply_phases(phases);
}

inline StateVector phase_applied(StateVector state, const std::vector<cplx>& phases) {
    apply_diagonal_phase(state, std::span<const cplx>(phases));
    return state;
}

inline void apply_gate(StateVector& state, const GateSpec& g) {
    const std::size_t arity = gate_arity(g.kind);
    if (g.kind == GateKind::DIAGONAL_PHASE) {
        apply_diagonal_phase(state, std::span<const cplx>(g.phases));
        return;
    }
    if (g.targets.size() != arity)
        throw ValidationError(std::string(to_string(g.kind)) + " expects " + std::to_string(arity) + " target(s)");
    if (arity == 1) {
        state.apply_matrix(single_qubit_matrix(g.kind, g.angle), g.targets[0]);
    } else if (g.kind == GateKind::CZ) {
        state.apply_cz(g.targets[0], g.targets[1]);
    } else {
        state.apply_matrix(two_qubit_matrix(g.kind), g.targets[0], g.targets[1]);
    }
}

/// Value-returning form of apply_gate.
inline StateVector gate_applied(StateVector state, const GateSpec& g) {
    apply_gate(state, g);
    return state;
}

/// Exact <Z_{i1} Z_{i2} ...> from amplitudes.
inline double expectation_z_product(const StateVector& state, std::span<const std::size_t> qubits) {
    if (qubits.empty()) throw ValidationError("Z-product needs at least one qubit");
    std::size_t m = 0;
    for (auto q : qubits) {
        state.check_qubit(q);
        m |= state.mask(q);
    }
    double e = 0;
    const auto amps = state.amplitudes();
    for (std::size_t b = 0; b < amps.size(); ++b) {
        const double p = std::norm(amps[b]);
        e += (std::popcount(b & m) & 1) ? -p : p;
    }
    return e;
}

inline double expectation_z_product(const StateVector& state, std::initializer_list<std::size_t> qubits) {
    return expectation_z_product(state, std::span<const std::size_t>(qubits.begin(), qubits.size()));
}

enum class ObservableMode { PAIRS_ZZ, ALL_Z };

struct ObservableSpec {
    ObservableMode mode = ObservableMode::PAIRS_ZZ;
    std::vector<std::vector<std::size_t>> terms;

    static ObservableSpec make(ObservableMode mode, std::size_t n) {
        ObservableSpec o{mode, {}};
        if (mode == ObservableMode::PAIRS_ZZ) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) o.terms.push_back({i, j});
        } else {
            std::vector<std::size_t> all(n);
            for (std::size_t i = 0; i < n; ++i) all[i] = i;
            o.terms.push_back(std::move(all));
        }
        return o;
    }

    std::size_t size() const noexcept { return terms.size(); }
};

/// Sign pattern of a Z-product term over all basis states: +1 / -1 per index.
inline std::size_t term_mask(const std::vector<std::size_t>& term, std::size_t n) {
    std::size_t m = 0;
    for (auto q : term) m |= std::size_t{1} << (n - 1 - q);
    return m;
}

inline std::vector<double> expectations(const StateVector& state, const ObservableSpec& obs) {
    std::vector<double> out;
    out.reserve(obs.size());
    for (const auto& t : obs.terms) out.push_back(expectation_z_product(state, t));
    return out;
}

}  // namespace qhpi
