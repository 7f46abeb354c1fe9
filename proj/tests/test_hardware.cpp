#include <z2forge/hardware.hpp>

#include <gtest/gtest.h>

using namespace z2forge;

TEST(Envelope, ShapeAndWidth) {
    const auto e = PulseEnvelope::from_fwhm(2.0, 7.0);
    EXPECT_DOUBLE_EQ(e.fwhm(), 7.0);
    EXPECT_DOUBLE_EQ(e.total(), 9.0);
    EXPECT_EQ(e(0.0), 0.0);
    EXPECT_EQ(e(9.0), 0.0);
    EXPECT_NEAR(e(1.0), 0.5, 1e-15);  // half height at the FWHM edges
    EXPECT_NEAR(e(8.0), 0.5, 1e-15);
    EXPECT_EQ(e(4.5), 1.0);
    // continuous at the ramp joints
    EXPECT_NEAR(e(2.0 - 1e-9), 1.0, 1e-8);
    EXPECT_NEAR(e(7.0 + 1e-9), 1.0, 1e-8);
    EXPECT_THROW(PulseEnvelope::from_fwhm(3.0, 2.0), invalid_parameter);
    const PulseEnvelope rect{0.0, 5.0};
    EXPECT_EQ(rect(0.0), 1.0);
    EXPECT_EQ(rect(5.0), 1.0);
    EXPECT_EQ(rect(5.1), 0.0);
}

TEST(Displacement, UnitaryAndSmallEtaLimit) {
    const ModeDisplacement D(6, 0.01, 2.0);
    for (double t : {0.0, 0.7}) {
        const Mat d = D.at(t);
        EXPECT_LT((d * d.adjoint() - Mat::Identity(7, 7)).norm(), 1e-13);
    }
    // series to second order in eta; remainder is O(eta^3)
    const Mat a = local::annihilation(6);
    const Mat X = 0.01 * (a + a.adjoint());
    const Mat series = Mat::Identity(7, 7) + I * X - 0.5 * X * X;
    EXPECT_LT((D.at_zero() - series).norm(), 2e-5);
}

TEST(Drives, HermitianAtAllTimes) {
    const TrapPreset p = raman_preset();
    LSDrive ls(p, 3, two_pi * 1e6, p.omega_x - p.omega_z);
    ls.h = 1e3;
    ls.dE_ac = 2e3;
    MSDrive ms(p, 3, two_pi * 0.5e6, p.omega_x - p.omega_z, 3e3);
    SDFDrive sdf(quadrupole_preset(), 3, two_pi * 0.5e6, two_pi * 75e3, true);
    for (double t : {0.0, 1.3e-6, 4.1e-5}) {
        EXPECT_LT(ls.at(t).hermiticity_defect(), 1e-6 * ls.at(t).max_abs());
        EXPECT_LT(ms.at(t).hermiticity_defect(), 1e-6 * ms.at(t).max_abs());
        EXPECT_LT(sdf.at(t).hermiticity_defect(), 1e-6 * sdf.at(t).max_abs());
    }
}

TEST(Drives, ApplyMatchesDenseAssembly) {
    const TrapPreset p = raman_preset();
    LSDrive d(p, 2, two_pi * 1e6, p.omega_x - p.omega_z);
    d.h = 500.0;
    const SpaceLayout l = d.layout();
    const Vec v = Vec::Random(l.dim());
    Vec out(l.dim());
    d.apply(2e-6, v, out);
    // independent assembly from kron products
    const Mat dz = ModeDisplacement(2, p.eta_z, p.omega_z).at(2e-6), dx = ModeDisplacement(2, p.eta_x, p.omega_x).at(2e-6);
    const cplx ph = std::exp(-I * (d.omega_d * 2e-6));
    const Mat sz = local::pauli('z'), sx = local::pauli('x'), id = Mat::Identity(3, 3);
    const Mat H = 0.5 * d.omega12 * (ph * kron(kron(dz, sz), dx) + std::conj(ph) * kron(kron(dz.adjoint(), sz), dx.adjoint())) +
                  d.h * kron(kron(id, sx), id);
    EXPECT_LT((out - H * v).norm(), 1e-9 * (H * v).norm());
}

TEST(Effective, LinkParameters) {
    const TrapPreset p = raman_preset();
    const double ee = p.eta_x * p.eta_z;
    auto ls = effective_link_params(Scheme::LS, p, {2.0, 0.0, 0.6});
    EXPECT_DOUBLE_EQ(ls.t_link.real(), ee);
    EXPECT_DOUBLE_EQ(ls.h, 0.3);
    EXPECT_EQ(ls.convention, Convention::z_cond);
    EXPECT_EQ(effective_link_params(Scheme::MS, p, {2.0}).convention, Convention::x_cond);
    auto sdf = effective_link_params(Scheme::SDF, p, {2.0, 4.0, 0.1});
    EXPECT_DOUBLE_EQ(sdf.t_link.imag(), ee / 2);
    EXPECT_DOUBLE_EQ(sdf.t_link.real(), 0.0);
    EXPECT_THROW(effective_link_params(Scheme::SDF, p, {2.0, 0.0}), invalid_parameter);
}

TEST(Trotter, ScheduleLayoutAndError) {
    const double delta = two_pi * 75e3, t = two_pi * 1300, h = 3 * t;
    const auto s = make_trotter_schedule(5, delta, h, t, 3.6e-6);
    ASSERT_EQ(s.segments.size(), 10u);
    EXPECT_EQ(s.segments[0].kind, Segment::sdf);
    EXPECT_EQ(s.segments[1].kind, Segment::carrier);
    EXPECT_NEAR(s.segments[0].env.fwhm(), two_pi / delta, 1e-18);
    EXPECT_NEAR(s.segments[1].area, 2 * h * two_pi / delta, 1e-12);
    EXPECT_NEAR(s.trotter_error, 3.0 * 1300.0 * 1300.0 / (75e3 * 75e3), 1e-15);
    EXPECT_EQ(make_trotter_schedule(4, delta, 0.0, t, 3.6e-6).segments.size(), 4u);
    EXPECT_THROW(make_trotter_schedule(0, delta, h, t, 3.6e-6), invalid_parameter);
    EXPECT_THROW(make_trotter_schedule(3, delta, h, t, 1e-5), invalid_parameter);
}

TEST(Grids, FwhmAndStep) {
    const auto g = fwhm_grid(1.0, 4.0, 5);
    EXPECT_EQ(g, (std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0}));
    EXPECT_GT(fwhm_grid(0.0, 1.0, 3).front(), 0.0);
    EXPECT_THROW(fwhm_grid(1.0, 1.0, 1), invalid_parameter);
    EXPECT_NEAR(default_step({1.0, -4.0}), two_pi / 80.0, 1e-15);
    EXPECT_THROW(default_step({0.0}), invalid_parameter);
}

TEST(Spectator, ErrorFallsWithDetuning) {
    const double g = 1.0;
    EXPECT_GT(spectator_error(g, 0.0), 0.1);
    EXPECT_LT(spectator_error(g, 40.0), spectator_error(g, 10.0));
    const double D = spectator_min_detuning(2.0, 1.0, 0.05);
    EXPECT_LE(spectator_error(1.0, D), 0.05 + 1e-9);
    EXPECT_THROW(spectator_min_detuning(2.0, 1.0, 0.0), invalid_parameter);
}

// reduced full simulation: shaped LS exchange on a small Fock cutoff tracks the effective rate
TEST(Scan, LightShiftExchangeNearEffectiveRate) {
    const TrapPreset p = raman_preset();
    const double om = two_pi * 1.1e6, delta = p.omega_x - p.omega_z;
    const double tl = effective_link_params(Scheme::LS, p, {om}).t_link.real();
    LSDrive d(p, 3, om, delta);
    const double rise = 10e-6;
    const auto r = single_pulse_scan(d, Convention::z_cond, rise, fwhm_grid(rise, 1.5 * pi / (2 * tl), 40),
                                     default_step({p.omega_x + p.omega_z + delta, om}));
    EXPECT_NEAR(r.rate_hz(), tl / two_pi, 0.05 * tl / two_pi);
    EXPECT_LT(r.infidelity(), 5e-2);
    EXPECT_LT(r.gauge_max, 1e-2);
}
