#include <z2forge/hilbert.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace z2forge;

namespace {

Vec random_state(std::int64_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Vec v(n);
    for (auto& x : v) x = cplx(g(rng), g(rng));
    return v.normalized();
}

}  // namespace

TEST(Layout, LastFactorVariesFastest) {
    const SpaceLayout l = compose_space({mode(2), qubit(), mode(1)});
    EXPECT_EQ(l.dim(), 3 * 2 * 2);
    EXPECT_EQ(l.stride(2), 1);
    EXPECT_EQ(l.stride(1), 2);
    EXPECT_EQ(l.stride(0), 4);
    for (std::int64_t i = 0; i < l.dim(); ++i) {
        std::vector<int> d{l.digit(i, 0), l.digit(i, 1), l.digit(i, 2)};
        EXPECT_EQ(l.index_of(d), i);
    }
}

TEST(Layout, RejectsBadCutoffAndEmpty) {
    EXPECT_THROW(compose_space({mode(0)}), invalid_parameter);
    EXPECT_THROW(compose_space({}), invalid_parameter);
}

TEST(LocalOps, LadderAlgebra) {
    for (int n : {1, 3, 6}) {
        const Mat a = local::annihilation(n);
        for (int k = 1; k <= n; ++k) EXPECT_NEAR(std::abs(a(k - 1, k)), std::sqrt(double(k)), 1e-14);
        const Mat c = a * a.adjoint() - a.adjoint() * a;
        // identity except the truncation corner
        for (int k = 0; k < n; ++k) EXPECT_NEAR(std::abs(c(k, k) - 1.0), 0.0, 1e-13);
        EXPECT_NEAR(c(n, n).real(), -double(n), 1e-13);
        EXPECT_LT((a.adjoint() * a - local::number(n)).norm(), 1e-13);
        const Mat p = local::parity(n);
        for (int k = 0; k <= n; ++k) EXPECT_EQ(p(k, k).real(), (k % 2) ? -1.0 : 1.0);
    }
}

TEST(LocalOps, PauliConvention) {
    const Mat x = local::pauli('x'), y = local::pauli('y'), z = local::pauli('z');
    EXPECT_LT((x * y - I * z).norm(), 1e-14);
    EXPECT_LT((y * z - I * x).norm(), 1e-14);
    // basis (down, up) with sz = diag(-1, 1)
    EXPECT_EQ(z(0, 0).real(), -1.0);
    EXPECT_EQ(z(1, 1).real(), 1.0);
    EXPECT_THROW(local::pauli('q'), invalid_parameter);
}

TEST(States, QubitKetsAreFieldEigenstates) {
    const SpaceLayout l = compose_space({qubit()});
    const LinearOperator sx = pauli(l, 0, 'x'), sz = pauli(l, 0, 'z');
    EXPECT_NEAR(expectation(product_state(l, {QubitKet::plus}), sx).real(), 1.0, 1e-14);
    EXPECT_NEAR(expectation(product_state(l, {QubitKet::minus}), sx).real(), -1.0, 1e-14);
    EXPECT_NEAR(expectation(product_state(l, {QubitKet::up}), sz).real(), 1.0, 1e-14);
    EXPECT_NEAR(expectation(product_state(l, {QubitKet::down}), sz).real(), -1.0, 1e-14);
}

TEST(States, ProductStateChecksKinds) {
    const SpaceLayout l = compose_space({mode(2), qubit()});
    EXPECT_THROW(product_state(l, {3, QubitKet::up}), invalid_parameter);
    EXPECT_THROW(product_state(l, {QubitKet::up, QubitKet::up}), invalid_parameter);
    const auto s = product_state(l, {2, QubitKet::up});
    EXPECT_NEAR(s.norm(), 1.0, 1e-15);
    EXPECT_EQ(std::abs(s.amplitudes()(l.index_of({2, 1}))), 1.0);
}

TEST(Operators, EmbedMatchesKron) {
    const SpaceLayout l = compose_space({mode(1), qubit(), mode(2)});
    const Mat a = local::annihilation(1), sx = local::pauli('x'), n = local::number(2);
    const Mat ref = kron(kron(a, sx), n);
    const LinearOperator op = embed(l, 0, a) * embed(l, 1, sx) * embed(l, 2, n);
    EXPECT_LT((op.dense() - ref).norm(), 1e-14);
}

TEST(Operators, OperatorSumMatchesExplicitProducts) {
    const SpaceLayout l = compose_space({mode(2), qubit(), mode(2)});
    const Mat a = local::annihilation(2), sz = local::pauli('z'), sx = local::pauli('x');
    OperatorSum h(l);
    h.add(cplx(0.3, 0.2), {{2, a.adjoint()}, {1, sz}, {0, a}});
    h.add(cplx(0.3, -0.2), {{0, a.adjoint()}, {1, sz}, {2, a}});
    h.add(0.7, {{1, sx}});  // two nonzeros per column: branching path
    const LinearOperator H = h.to_operator(true);
    const Mat ref = cplx(0.3, 0.2) * (creation(l, 2) * pauli(l, 1, 'z') * annihilation(l, 0)).dense() +
                    cplx(0.3, -0.2) * (creation(l, 0) * pauli(l, 1, 'z') * annihilation(l, 2)).dense() +
                    0.7 * pauli(l, 1, 'x').dense();
    EXPECT_LT((H.dense() - ref).norm(), 1e-13);
    EXPECT_LT(H.hermiticity_defect(), 1e-14);
}

TEST(Operators, ArithmeticAndCommutator) {
    const SpaceLayout l = compose_space({qubit(), qubit()});
    const LinearOperator x1 = pauli(l, 0, 'x'), z1 = pauli(l, 0, 'z'), z2 = pauli(l, 1, 'z');
    EXPECT_LT(commutator(x1, z2).max_abs(), 1e-15);
    EXPECT_NEAR(commutator(x1, z1).max_abs(), 2.0, 1e-14);
    const LinearOperator s = x1 + z2;
    EXPECT_TRUE(s.hermitian());
    EXPECT_LT((s - x1 - z2).max_abs(), 1e-15);
    const SpaceLayout other = compose_space({qubit()});
    EXPECT_THROW(x1 + pauli(other, 0, 'x'), invalid_parameter);
}

TEST(Entropy, BellAndProduct) {
    const SpaceLayout l = compose_space({qubit(), qubit()});
    Vec v = Vec::Zero(4);
    v(0) = v(3) = 1 / std::sqrt(2.0);
    EXPECT_NEAR(entanglement_entropy(StateVector(l, v), 1), std::log(2.0), 1e-12);
    EXPECT_NEAR(entanglement_entropy(product_state(l, {QubitKet::plus, QubitKet::up}), 1), 0.0, 1e-12);
    EXPECT_THROW(entanglement_entropy(StateVector(l, v), 0), invalid_parameter);
}

// property: S(A) = S(B) and 0 <= S <= ln(min(dA, dB)) for random pure states
TEST(Entropy, PureStateProperties) {
    const SpaceLayout l = compose_space({mode(2), qubit(), mode(1), qubit()});
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const StateVector s(l, random_state(l.dim(), seed));
        for (int cut = 1; cut < l.size(); ++cut) {
            const double S = entanglement_entropy(s, cut);
            std::int64_t dl = l.dim() / l.stride(cut - 1);
            const double bound = std::log(double(std::min<std::int64_t>(dl, l.stride(cut - 1))));
            EXPECT_GE(S, -1e-12);
            EXPECT_LE(S, bound + 1e-12);
        }
    }
}

TEST(Subspace, ReachableEvolutionMatchesFull) {
    const SpaceLayout l = compose_space({mode(2), qubit(), mode(2)});
    const Mat a = local::annihilation(2), sz = local::pauli('z');
    OperatorSum h(l);
    h.add(1.0, {{2, a.adjoint()}, {1, sz}, {0, a}});
    h.add(1.0, {{0, a.adjoint()}, {1, sz}, {2, a}});
    const Vec seed = product_state(l, {1, QubitKet::down, 0}).amplitudes();
    const Subspace s = reachable_subspace(h, seed);
    EXPECT_LT(s.size(), l.dim());
    const Mat Hs = Mat(compile_on(h, s));
    const Mat Hf = h.to_operator(true).dense();
    // H restricted to the subspace equals the projection of the full H
    for (std::int64_t r = 0; r < s.size(); ++r)
        for (std::int64_t c = 0; c < s.size(); ++c)
            EXPECT_NEAR(std::abs(Hs(r, c) - Hf(s.basis[r], s.basis[c])), 0.0, 1e-14);
    EXPECT_LT((s.lift(s.restrict(seed), l.dim()) - seed).norm(), 1e-15);
}
