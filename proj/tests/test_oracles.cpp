#include <z2forge/evolve.hpp>
#include <z2forge/oracles.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace z2forge;

// libstdc++ special functions serve as the independent reference
TEST(Bessel, MatchesStandardLibrary) {
    for (int n = 0; n <= 30; ++n)
        for (double x : {1e-3, 0.05, 0.5, 1.0, 2.5, 5.0, 9.7, 20.0, 43.0})
            EXPECT_NEAR(bessel_j(n, x), std::cyl_bessel_j(double(n), x), 1e-13) << "n=" << n << " x=" << x;
}

TEST(Bessel, Reflection) {
    for (int n = 0; n <= 12; ++n)
        for (double x : {0.3, 2.0, 7.5}) {
            const double s = (n % 2) ? -1.0 : 1.0;
            EXPECT_NEAR(bessel_j(-n, x), s * bessel_j(n, x), 1e-15);
            EXPECT_NEAR(bessel_j(n, -x), s * bessel_j(n, x), 1e-15);
        }
}

TEST(Bessel, NormalisationAndRecurrence) {
    for (double x : {0.1, 1.0, 4.0, 12.0, 30.0}) {
        double even = bessel_j(0, x), sq = 0;
        for (int k = 1; k < 120; ++k) even += 2 * bessel_j(2 * k, x);
        for (int k = -120; k <= 120; ++k) sq += std::pow(bessel_j(k, x), 2);
        EXPECT_NEAR(even, 1.0, 1e-12);
        EXPECT_NEAR(sq, 1.0, 1e-12);
        for (int n = 1; n < 40; ++n)
            EXPECT_NEAR(bessel_j(n - 1, x) + bessel_j(n + 1, x), 2.0 * n / x * bessel_j(n, x), 1e-12);
    }
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(3, 0.0), 0.0);
    EXPECT_THROW(bessel_j(2000, 1.0), invalid_parameter);
}

TEST(LinkOracle, RabiMatchesExactPropagation) {
    for (double h : {0.0, 0.7, 2.0}) {
        const LinkOracleParams op{1.3, h};
        const SpaceLayout l = link_layout(1);
        const LinearOperator H = build_link_hamiltonian({cplx(op.t_link, 0), h, Convention::z_cond}, l);
        const LinkProbe pr(l, Convention::z_cond);
        evolve_static(H, make_state(StateKind::link_L, l).psi, linspace(0, 6, 61), [&](double t, const StateVector& s) {
            const auto o = rabi_link(t, op);
            EXPECT_NEAR(expectation(s, pr.n2).real(), o.n2, 1e-11);
            EXPECT_NEAR(expectation(s, pr.sx).real(), o.sx, 1e-11);
        });
    }
}

TEST(LinkOracle, TwoBosonAndNoonTime) {
    const LinkOracleParams op{1.0, 0.0};
    EXPECT_NEAR(noon_fidelity_times(op), pi / 4, 1e-15);
    EXPECT_NEAR(lambda_two_boson(0.0, op), 1.0, 1e-15);
    // sx minimum of -1 at the NOON time for h = 0
    EXPECT_NEAR(lambda_two_boson(pi / 4, op), -1.0, 1e-14);
    EXPECT_THROW(noon_fidelity_times({0.0, 0.0}), invalid_parameter);
}

TEST(PlaquetteOracle, SpinOneMatchesExactPropagation) {
    const double t = 0.8, h = 0.45;
    const SpaceLayout l = plaquette_layout(1);
    const LinearOperator H = build_plaquette_hamiltonian({cplx(t, 0), cplx(t, 0), h, 0.0, 0.0}, l);
    const auto L1 = make_state(StateKind::plaquette_L1, l).psi, L2 = make_state(StateKind::plaquette_L2, l).psi;
    evolve_static(H, L1, linspace(0, 5, 41), [&](double tt, const StateVector& s) {
        const auto p = plaquette_spin1(tt, t, h);
        EXPECT_NEAR(fidelity(s, L1), p[0], 1e-11);
        EXPECT_NEAR(fidelity(s, L2), p[2], 1e-11);
        EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-12);
    });
}

// independent oracle: free particle on a long chain in the linear potential 2 h i
TEST(WannierStark, SingleMatchesTightBinding) {
    const int M = 121, c = 61;
    const double t = 1.0, h = 0.4;
    Mat H = Mat::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        H(i, i) = 2 * h * (i + 1);
        if (i + 1 < M) H(i, i + 1) = H(i + 1, i) = t;
    }
    Vec psi = Vec::Zero(M);
    psi(c - 1) = 1;
    WSParams wp;
    wp.N = 2 * (c - 1) + 2;  // centre N/2 = c
    wp.h = h;
    evolve_static_matrix(H, psi, linspace(0, 20, 81), [&](double tt, const Vec& v) {
        for (int i = c - 10; i <= c + 10; ++i) EXPECT_NEAR(std::norm(v(i - 1)), ws_single(tt, i, wp).n, 1e-11);
    });
}

TEST(WannierStark, GuardAndRefocus) {
    WSParams wp;
    wp.N = 16, wp.h = 0.4;
    EXPECT_NEAR(ws_single(0.0, 8, wp).n, 1.0, 1e-15);
    EXPECT_NEAR(ws_single(pi / wp.h, 8, wp).n, 1.0, 1e-12);
    EXPECT_TRUE(ws_single(0.1, 8, wp).valid());
    wp.N = 6;
    EXPECT_FALSE(ws_single(pi / (2 * wp.h), 3, wp).valid());
    const auto prof = ws_single_profile(1.7, WSParams{200, 1.0, 0.4});
    double tot = 0;
    for (double x : prof) tot += x;
    EXPECT_NEAR(tot, 1.0, 1e-12);
}

TEST(WannierStark, EigenstateResiduals) {
    for (double h : {0.2, 0.4, 1.0})
        for (int m : {-3, 0, 5}) EXPECT_LT(ws_eigenstate_residual(m, 1.0, h, m - 60, m + 60), 1e-8);
    WSParams wp;
    wp.h = 0.3;
    for (double P : {0.0, 0.8, 2.0})
        for (int m : {0, 4}) EXPECT_LT(two_body_residual(m, P, wp, m - 60, m + 60), 1e-8);
}

TEST(WannierStark, PairOracleInitialState) {
    WSParams wp;
    wp.N = 32, wp.h = 0.3, wp.r0 = 16;
    for (int i = 1; i <= 32; ++i) EXPECT_NEAR(ws_two_boson(0.0, i, wp), (i == 8 || i == 24) ? 1.0 : 0.0, 1e-15);
    wp.r0 = 15;
    EXPECT_THROW(ws_two_boson(1.0, 8, wp), invalid_parameter);
}
