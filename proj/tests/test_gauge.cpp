#include <z2forge/gauge.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace z2forge;

namespace {

double eigen_defect(const LinearOperator& G, const StateVector& s, int q) {
    const double sign = q ? -1.0 : 1.0;
    return (G.apply(s.amplitudes()) - sign * s.amplitudes()).norm();
}

}  // namespace

// property: [H, G_j] = 0 for random couplings, both conventions
TEST(Link, GaussGeneratorsCommuteWithHamiltonian) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (Convention c : {Convention::z_cond, Convention::x_cond})
        for (int trial = 0; trial < 10; ++trial) {
            const int nm = 1 + trial % 3;
            const SpaceLayout l = link_layout(nm);
            const LinkParams p{cplx(u(rng), u(rng)), u(rng), c};
            const LinearOperator H = build_link_hamiltonian(p, l);
            EXPECT_LT(H.hermiticity_defect(), 1e-14);
            auto [g1, g2] = gauss_generators_link(l, c);
            EXPECT_LT(commutator(H, g1).max_abs(), 1e-13);
            EXPECT_LT(commutator(H, g2).max_abs(), 1e-13);
            EXPECT_LT(commutator(g1, g2).max_abs(), 1e-14);
            EXPECT_LT((g1 * g1 - LinearOperator::identity(l)).max_abs(), 1e-14);
        }
}

TEST(Link, CanonicalStatesCarryTheirCharges) {
    for (Convention c : {Convention::z_cond, Convention::x_cond}) {
        const SpaceLayout l = link_layout(2);
        auto [g1, g2] = gauss_generators_link(l, c);
        for (StateKind k : {StateKind::link_L, StateKind::link_R, StateKind::link_C, StateKind::noon_target}) {
            const auto s = make_state(k, l, {1, 1, c});
            ASSERT_EQ(s.charges.size(), 2u);
            EXPECT_LT(eigen_defect(g1, s.psi, s.charges[0]), 1e-14);
            EXPECT_LT(eigen_defect(g2, s.psi, s.charges[1]), 1e-14);
        }
        // L and R share a sector; the single-boson exchange stays inside it
        EXPECT_EQ(make_state(StateKind::link_L, l, {1, 1, c}).charges, make_state(StateKind::link_R, l, {1, 1, c}).charges);
    }
}

TEST(Link, SectorProjector) {
    const SpaceLayout l = link_layout(2);
    auto [g1, g2] = gauss_generators_link(l, Convention::z_cond);
    const auto L = make_state(StateKind::link_L, l);
    const LinearOperator P = sector_projector({g1, g2}, L.charges);
    EXPECT_LT((P * P - P).max_abs(), 1e-14);
    EXPECT_LT((P.apply(L.psi.amplitudes()) - L.psi.amplitudes()).norm(), 1e-14);
    SectorCharges other{1 - L.charges[0], L.charges[1]};
    EXPECT_LT(sector_projector({g1, g2}, other).apply(L.psi.amplitudes()).norm(), 1e-14);
    EXPECT_THROW(sector_projector({g1}, L.charges), invalid_parameter);
    EXPECT_THROW(sector_projector({}, {}), invalid_parameter);
    // non-commuting set is rejected
    EXPECT_THROW(sector_projector({g1, pauli(l, 1, 'z')}, {0, 0}), invalid_parameter);
}

TEST(Link, ZCondEndpoints) {
    const SpaceLayout l = link_layout(1);
    const auto L = make_state(StateKind::link_L, l);
    EXPECT_NEAR(std::abs(L.psi.amplitudes().dot(product_state(l, {1, QubitKet::minus, 0}).amplitudes())), 1.0, 1e-15);
    const auto R = make_state(StateKind::link_R, l);
    EXPECT_NEAR(std::abs(R.psi.amplitudes().dot(product_state(l, {0, QubitKet::plus, 1}).amplitudes())), 1.0, 1e-15);
    const auto Lx = make_state(StateKind::link_L, l, {1, 1, Convention::x_cond});
    EXPECT_NEAR(std::abs(Lx.psi.amplitudes().dot(product_state(l, {1, QubitKet::down, 0}).amplitudes())), 1.0, 1e-15);
}

TEST(Plaquette, GeneratorsCommuteAndStatesShareSector) {
    const SpaceLayout l = plaquette_layout(2);
    const PlaquetteParams p{cplx(0.7, 0.2), cplx(-0.4, 0.5), 0.3, 0.9, -1.3};
    const LinearOperator H = build_plaquette_hamiltonian(p, l);
    auto [g1, g2] = gauss_generators_plaquette(l);
    EXPECT_LT(commutator(H, g1).max_abs(), 1e-13);
    EXPECT_LT(commutator(H, g2).max_abs(), 1e-13);
    const auto L1 = make_state(StateKind::plaquette_L1, l);
    for (StateKind k : {StateKind::plaquette_L2, StateKind::plaquette_R1, StateKind::plaquette_R2, StateKind::bell_target}) {
        const auto s = make_state(k, l);
        EXPECT_EQ(s.charges, L1.charges);
        EXPECT_LT(eigen_defect(g1, s.psi, s.charges[0]), 1e-14);
        EXPECT_LT(eigen_defect(g2, s.psi, s.charges[1]), 1e-14);
    }
}

TEST(Chain, HamiltonianIsGaugeInvariant) {
    const int N = 3;
    ChainParams p = ChainParams::uniform(N, 1.0, 0.37, 0.21, 2);
    p.t[0] = cplx(0.8, -0.3);
    const SpaceLayout l = chain_layout(N, 2);
    const LinearOperator H = build_chain_hamiltonian(p, l);
    EXPECT_LT(H.hermiticity_defect(), 1e-14);
    for (const auto& g : chain_generators(l, N)) EXPECT_LT(commutator(H, g).max_abs(), 1e-13);
}

TEST(Chain, ConfigsMatchGeneratorEigenvalues) {
    const int N = 5;
    const SpaceLayout l = chain_layout(N, 1);
    const auto gens = chain_generators(l, N);
    struct Case {
        StateKind k;
        int i, j;
    };
    for (Case c : {Case{StateKind::chain_single, 3, 1}, Case{StateKind::chain_pair, 2, 4},
                   Case{StateKind::chain_vacuum_halffilled, 1, 1}, Case{StateKind::chain_meson, 1, 1},
                   Case{StateKind::chain_string, 1, 2}}) {
        const auto s = make_state(c.k, l, {c.i, c.j});
        for (int i = 0; i < N; ++i) EXPECT_LT(eigen_defect(gens[std::size_t(i)], s.psi, s.charges[std::size_t(i)]), 1e-14);
    }
}

TEST(Chain, StringLayout) {
    const auto c = chain_config(StateKind::chain_string, 10, 2, 3);
    // particle on site 4, hole on site 7, string links 4..6
    EXPECT_EQ(c.n, (std::vector<int>{1, 0, 1, 1, 1, 0, 0, 0, 1, 0}));
    EXPECT_EQ(c.links, (std::vector<int>{-1, -1, -1, 1, 1, 1, -1, -1, -1}));
    EXPECT_THROW(chain_config(StateKind::chain_string, 10, 3, 2), invalid_parameter);
    EXPECT_THROW(chain_config(StateKind::chain_string, 6, 1, 3), invalid_parameter);
    EXPECT_THROW(chain_config(StateKind::chain_single, 4, 5), invalid_parameter);
}

TEST(Chain, ParameterChecks) {
    EXPECT_THROW(chain_layout(1, 1), invalid_parameter);
    ChainParams p = ChainParams::uniform(4, 1.0, 0.1);
    p.t.pop_back();
    EXPECT_THROW(p.check(), invalid_parameter);
    ChainParams q = ChainParams::uniform(4, 1.0, 0.1, 0.0, 0);
    EXPECT_THROW(q.check(), invalid_parameter);
    EXPECT_THROW(build_chain_hamiltonian(ChainParams::uniform(4, 1.0, 0.1), chain_layout(3, 1)), invalid_parameter);
}

TEST(Ladder, LoopPhaseFollowsFlux) {
    for (double flux : {0.0, 0.5 * pi, pi, 1.3}) {
        const auto p = PeierlsLadderParams::with_flux(3, flux);
        const cplx loop = plaquette_loop_phase(p, 0);
        EXPECT_NEAR(std::abs(loop - std::exp(I * flux)), 0.0, 1e-14);
    }
}

TEST(Ladder, NearestNeighbourOptionDropsLongRange) {
    auto p = PeierlsLadderParams::with_flux(3, 0.0);
    const SpaceLayout l = ladder_layout(3, 1);
    const Mat full = build_peierls_ladder(p, l).dense();
    p.nearest_neighbor_only = true;
    const Mat nn = build_peierls_ladder(p, l).dense();
    const LinearOperator hop13 = creation(l, 4) * annihilation(l, 0);
    const Vec e = product_state(l, {1, 0, 0, 0, 0, 0}).amplitudes();
    const Vec f = hop13.apply(e);
    EXPECT_NEAR(std::abs(f.dot(full * e)), 1.0 / 8.0, 1e-14);  // dipolar 1/r^3 at r = 2
    EXPECT_NEAR(std::abs(f.dot(nn * e)), 0.0, 1e-15);
    p.positions = {0.0, 2.0, 1.0};
    EXPECT_THROW(build_peierls_ladder(p, l), invalid_parameter);
}
