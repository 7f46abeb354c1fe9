#include <z2forge/evolve.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace z2forge;

namespace {

Mat random_hermitian(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

Vec exact(const Mat& H, const Vec& v, double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec ph = (-I * t * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint() * v;
}

}  // namespace

TEST(Krylov, MatchesDenseExponential) {
    const Mat H = random_hermitian(80, 3);
    Vec v = Vec::Random(80).normalized();
    auto apply = [&](const Vec& x, Vec& y) { y.noalias() = H * x; };
    for (double t : {0.01, 0.5, 3.0}) EXPECT_LT((lanczos_expmv(apply, v, t, 30, 1e-13) - exact(H, v, t)).norm(), 1e-10);
}

TEST(Static, EigenAndKrylovAgreeOnChainSector) {
    const int N = 6;
    const auto p = ChainParams::uniform(N, 1.0, 0.3, 0.2, 1);
    const SpaceLayout l = chain_layout(N, 1);
    const auto ops = chain_terms(p, l);
    const auto st = make_state(StateKind::chain_string, l, {1, 2});
    const Subspace s = reachable_subspace(ops, st.psi.amplitudes());
    const SpMat H = compile_on(ops, s);
    const Vec x0 = s.restrict(st.psi.amplitudes());
    std::vector<Vec> a, b;
    PropagationConfig ce, ck;
    ce.method = Method::eigen;
    ck.method = Method::krylov;
    const auto grid = linspace(0, 4, 9);
    evolve_static_matrix(H, x0, grid, [&](double, const Vec& v) { a.push_back(v); }, ce);
    evolve_static_matrix(H, x0, grid, [&](double, const Vec& v) { b.push_back(v); }, ck);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LT((a[k] - b[k]).norm(), 1e-10);
}

TEST(Static, RejectsBadGrids) {
    const SpaceLayout l = compose_space({qubit()});
    const auto H = pauli(l, 0, 'x');
    const auto s = product_state(l, {QubitKet::up});
    EXPECT_THROW(evolve_static(H, s, {}), invalid_parameter);
    EXPECT_THROW(evolve_static(H, s, {0.0, 1.0, 0.5}), invalid_parameter);
    EXPECT_THROW(evolve_static(pauli(l, 0, 'x') * pauli(l, 0, 'z'), s, {1.0}), invalid_parameter);
}

// property: RK4 error scales as dt^4
TEST(RK4, FourthOrderConvergence) {
    const Mat H = random_hermitian(6, 11);
    const Vec v = Vec::Unit(6, 0);
    const Vec ref = exact(H, v, 2.0);
    auto apply = [&](double, const Vec& x, Vec& y) { y.noalias() = H * x; };
    double err[2];
    for (int k = 0; k < 2; ++k) {
        Vec out;
        evolve_time_dependent(apply, v, {2.0}, 0.02 / (1 << k), [&](double, const Vec& x) { out = x; });
        err[k] = (out - ref).norm();
    }
    EXPECT_NEAR(err[0] / err[1], 16.0, 2.0);
}

TEST(RK4, TimeDependentRotation) {
    // H = f(t) sx / 2 rotates by the pulse area
    const Mat sx = local::pauli('x');
    auto f = [](double t) { return 1.0 + 0.5 * std::sin(3 * t); };
    auto apply = [&](double t, const Vec& x, Vec& y) { y.noalias() = 0.5 * f(t) * (sx * x); };
    const double T = 2.0;
    const double area = T + 0.5 * (1 - std::cos(3 * T)) / 3;
    Vec out;
    evolve_time_dependent(apply, Vec::Unit(2, 0), {T}, 1e-3, [&](double, const Vec& x) { out = x; });
    EXPECT_NEAR(std::norm(out(1)), std::pow(std::sin(area / 2), 2), 1e-10);
}

TEST(RK4, NormDriftIsReported) {
    const Mat H = 50.0 * local::pauli('x');
    auto apply = [&](double, const Vec& x, Vec& y) { y.noalias() = H * x; };
    EXPECT_THROW(evolve_time_dependent(apply, Vec::Unit(2, 0), {1.0}, 0.1, [](double, const Vec&) {}), numerical_failure);
    EXPECT_THROW(evolve_time_dependent(apply, Vec::Unit(2, 0), {1.0}, 0.0, [](double, const Vec&) {}), invalid_parameter);
}

TEST(Metrics, ExchangeDurationRefinesPeak) {
    std::vector<double> t, f;
    for (int k = 0; k <= 40; ++k) {
        t.push_back(0.1 * k);
        f.push_back(std::pow(std::sin(t.back()), 2));
    }
    const auto ex = find_exchange_duration(t, f);
    EXPECT_NEAR(ex.dt_ex, pi / 2, 2e-3);
    EXPECT_NEAR(ex.f_max, 1.0, 1e-3);
    EXPECT_THROW(find_exchange_duration({}, std::vector<double>{}), invalid_parameter);
}

TEST(Metrics, Contrast) {
    EXPECT_NEAR(contrast({-1.0, 0.0, 0.6, 0.2}), 0.8, 1e-15);
    EXPECT_THROW(contrast({}), invalid_parameter);
}

TEST(TimeSeries, ChannelsStayAligned) {
    TimeSeries ts;
    ts.times = {0.0, 1.0};
    ts.push("a", 1);
    ts.push("a", 2);
    ts.push("b", 3);
    EXPECT_FALSE(ts.consistent());
    ts.push("b", 4);
    EXPECT_TRUE(ts.consistent());
    EXPECT_EQ(ts.names(), (std::vector<std::string>{"a", "b"}));
    EXPECT_THROW(ts["c"], invalid_parameter);
}
