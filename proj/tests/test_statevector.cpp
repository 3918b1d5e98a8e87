#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qhpi/statevector.hpp"

using namespace qhpi;
using oracle::cplx;

namespace {

const double kR = 1 / std::sqrt(2.0);

void expect_amps(const StateVector& s, std::initializer_list<cplx> want, double tol = 1e-12) {
    ASSERT_EQ(s.dimension(), want.size());
    std::size_t i = 0;
    for (auto w : want) {
        EXPECT_NEAR(s[i].real(), w.real(), tol) << "amplitude " << i;
        EXPECT_NEAR(s[i].imag(), w.imag(), tol) << "amplitude " << i;
        ++i;
    }
}

StateVector basis(std::size_t n, std::size_t b) {
    std::vector<cplx> a(std::size_t{1} << n);
    a[b] = 1;
    return StateVector(n, a);
}

GateSpec random_gate(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> kind(0, n >= 2 ? 8 : 6);
    std::uniform_int_distribution<std::size_t> q(0, n - 1);
    std::uniform_real_distribution<double> ang(-2 * std::numbers::pi, 2 * std::numbers::pi);
    const auto k = static_cast<GateKind>(kind(rng));
    if (gate_arity(k) == 1) return GateSpec::single(k, q(rng), is_rotation(k) ? ang(rng) : 0.0);
    std::size_t a = q(rng), b = q(rng);
    while (b == a) b = q(rng);
    return GateSpec::pair(k, a, b);
}

oracle::Dense lifted(const GateSpec& g, std::size_t n) {
    const auto m = oracle::matrix_for(g.kind, g.angle);
    return g.targets.size() == 1 ? oracle::lift1(m, g.targets[0], n) : oracle::lift2(m, g.targets[0], g.targets[1], n);
}

}  // namespace

TEST(InitState, BasisZero) {
    expect_amps(init_state(1), {1, 0});
    expect_amps(init_state(2), {1, 0, 0, 0});
    EXPECT_NEAR(init_state(3).norm_squared(), 1.0, 1e-15);
}

TEST(InitState, CapacityLimits) {
    EXPECT_THROW(init_state(0), CapacityError);
    EXPECT_THROW(init_state(25), CapacityError);
    EXPECT_NO_THROW(init_state(kMaxQubits));
}

TEST(ApplyGate, HadamardOnZero) { expect_amps(gate_applied(init_state(1), GateSpec::single(GateKind::H, 0)), {kR, kR}); }

TEST(ApplyGate, CzFlipsElevenOnly) {
    expect_amps(gate_applied(basis(2, 3), GateSpec::pair(GateKind::CZ, 0, 1)), {0, 0, 0, -1});
    expect_amps(gate_applied(basis(2, 1), GateSpec::pair(GateKind::CZ, 0, 1)), {0, 1, 0, 0});
}

TEST(ApplyGate, SqiswapOnZeroOne) {
    expect_amps(gate_applied(basis(2, 1), GateSpec::pair(GateKind::SQISWAP, 0, 1)), {0, kR, cplx(0, kR), 0});
}

TEST(ApplyGate, BasisConventionQubitZeroIsMostSignificant) {
    // X on qubit 0 of |00> gives |10> = (0,0,1,0)
    expect_amps(gate_applied(init_state(2), GateSpec::single(GateKind::X, 0)), {0, 0, 1, 0});
}

TEST(ApplyGate, RxZeroIsIdentity) {
    std::mt19937_64 rng(7);
    StateVector s(3);
    for (int i = 0; i < 20; ++i) apply_gate(s, random_gate(rng, 3));
    const auto before = std::vector<cplx>(s.amplitudes().begin(), s.amplitudes().end());
    apply_gate(s, GateSpec::single(GateKind::RX, 1, 0.0));
    EXPECT_LE(oracle::max_abs_diff(before, s.amplitudes()), 1e-15);
}

TEST(ApplyGate, InvalidTargets) {
    StateVector s(2);
    EXPECT_THROW(apply_gate(s, GateSpec::single(GateKind::H, 2)), BoundsError);
    EXPECT_THROW(apply_gate(s, GateSpec::pair(GateKind::CZ, 0, 5)), BoundsError);
    EXPECT_THROW(apply_gate(s, GateSpec::pair(GateKind::SQISWAP, 1, 1)), ValidationError);
}

TEST(GateMatrices, UnitaryForEveryKind) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(-10, 10);
    for (int trial = 0; trial < 50; ++trial) {
        for (auto k : {GateKind::H, GateKind::X, GateKind::Y, GateKind::Z, GateKind::RX, GateKind::RY, GateKind::RZ}) {
            const auto m = single_qubit_matrix(k, ang(rng));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    cplx s = 0;
                    for (int r = 0; r < 2; ++r) s += std::conj(m[2 * r + i]) * m[2 * r + j];
                    EXPECT_LE(std::abs(s - cplx(i == j ? 1 : 0)), 1e-12) << to_string(k);
                }
        }
    }
    for (auto k : {GateKind::CZ, GateKind::SQISWAP}) {
        const auto m = two_qubit_matrix(k);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                cplx s = 0;
                for (int r = 0; r < 4; ++r) s += std::conj(m[4 * r + i]) * m[4 * r + j];
                EXPECT_LE(std::abs(s - cplx(i == j ? 1 : 0)), 1e-12) << to_string(k);
            }
    }
}

TEST(GateMatrices, RotationsMatchTextbookForms) {
    for (double t : {-2.1, 0.0, 0.4, 3.0}) {
        for (auto k : {GateKind::RX, GateKind::RY, GateKind::RZ}) {
            const auto m = single_qubit_matrix(k, t);
            const auto o = oracle::matrix_for(k, t);
            for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(m[i] - o.a[i]), 1e-15);
        }
    }
}

TEST(ApplyGate, MatchesKroneckerOracle) {
    std::mt19937_64 rng(3);
    for (std::size_t n = 1; n <= 4; ++n) {
        for (int trial = 0; trial < 40; ++trial) {
            StateVector s(n);
            std::vector<cplx> ref(std::size_t{1} << n);
            ref[0] = 1;
            for (int g = 0; g < 12; ++g) {
                const auto gate = random_gate(rng, n);
                apply_gate(s, gate);
                ref = oracle::matvec(lifted(gate, n), ref);
                ASSERT_LE(oracle::max_abs_diff(ref, s.amplitudes()), 1e-12) << "n=" << n << " gate " << to_string(gate.kind);
            }
        }
    }
}

TEST(ApplyGate, NormPreservedOnLongCircuits) {
    std::mt19937_64 rng(5);
    for (std::size_t n = 1; n <= 8; ++n) {
        StateVector s(n);
        for (int g = 0; g < 200; ++g) apply_gate(s, random_gate(rng, n));
        EXPECT_NEAR(s.norm_squared(), 1.0, 1e-10) << "n=" << n;
    }
}

TEST(Expectation, BasisStates) {
    EXPECT_DOUBLE_EQ(expectation_z_product(basis(2, 0), {0, 1}), 1.0);
    EXPECT_DOUBLE_EQ(expectation_z_product(basis(2, 1), {0, 1}), -1.0);
    EXPECT_DOUBLE_EQ(expectation_z_product(basis(2, 1), {0}), 1.0);
    EXPECT_DOUBLE_EQ(expectation_z_product(basis(2, 1), {1}), -1.0);
}

TEST(Expectation, RyHalfPiIsZero) {
    const auto s = gate_applied(init_state(1), GateSpec::single(GateKind::RY, 0, std::numbers::pi / 2));
    EXPECT_NEAR(expectation_z_product(s, {0}), 0.0, 1e-12);
    for (double t : {0.3, 1.2, 2.9}) {
        const auto r = gate_applied(init_state(1), GateSpec::single(GateKind::RY, 0, t));
        EXPECT_NEAR(expectation_z_product(r, {0}), std::cos(t), 1e-12);
    }
}

TEST(Expectation, EmptySubsetRejected) {
    EXPECT_THROW(expectation_z_product(init_state(2), std::span<const std::size_t>{}), ValidationError);
}

TEST(Expectation, MatchesDenseOperator) {
    std::mt19937_64 rng(9);
    for (std::size_t n = 1; n <= 4; ++n) {
        StateVector s(n);
        for (int g = 0; g < 30; ++g) apply_gate(s, random_gate(rng, n));
        const std::vector<cplx> psi(s.amplitudes().begin(), s.amplitudes().end());
        for (std::size_t m = 1; m < (std::size_t{1} << n); ++m) {
            std::vector<std::size_t> subset;
            for (std::size_t q = 0; q < n; ++q)
                if ((m >> q) & 1) subset.push_back(q);
            const double got = expectation_z_product(s, subset);
            EXPECT_NEAR(got, oracle::z_expectation(psi, subset, n), 1e-12);
            EXPECT_LE(std::abs(got), 1.0 + 1e-12);
        }
    }
}

TEST(DiagonalPhase, IdentityAndHalfExample) {
    StateVector plus = gate_applied(init_state(1), GateSpec::single(GateKind::H, 0));
    expect_amps(phase_applied(plus, {1, 1}), {kR, kR});
    const auto out = phase_applied(plus, {cplx(0, -1), cplx(0, 1)});
    expect_amps(out, {cplx(0, -kR), cplx(0, kR)});
    EXPECT_NEAR(out.norm_squared(), 1.0, 1e-15);
}

TEST(DiagonalPhase, ExampleMatchesMatrixExponential) {
    // n = 1, x = 0.5: exp(-iπ·0.5·Z)
    const std::vector<double> a{0.5};
    const auto u = oracle::iqp_unitary(a);
    EXPECT_LE(std::abs(u(0, 0) - cplx(0, -1)), 1e-15);
    EXPECT_LE(std::abs(u(1, 1) - cplx(0, 1)), 1e-15);
}

TEST(DiagonalPhase, Errors) {
    StateVector s(2);
    EXPECT_THROW(apply_diagonal_phase(s, std::vector<cplx>{1, 1}), ValidationError);
    EXPECT_THROW(apply_diagonal_phase(s, std::vector<cplx>{1, 1, 1, 1.001}), ValidationError);
    EXPECT_THROW(apply_gate(s, GateSpec::diagonal({1, 1, 2, 1})), ValidationError);
}

TEST(Observables, TermCounts) {
    for (std::size_t n = 1; n <= 6; ++n) {
        const auto pz = ObservableSpec::make(ObservableMode::PAIRS_ZZ, n);
        EXPECT_EQ(pz.size(), n * (n - 1) / 2);
        for (const auto& t : pz.terms) {
            ASSERT_EQ(t.size(), 2u);
            EXPECT_LT(t[0], t[1]);
        }
        const auto all = ObservableSpec::make(ObservableMode::ALL_Z, n);
        ASSERT_EQ(all.size(), 1u);
        EXPECT_EQ(all.terms[0].size(), n);
    }
}
