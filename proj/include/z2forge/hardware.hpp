#pragma once

#include "evolve.hpp"

#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

namespace z2forge {

inline constexpr double two_pi = 2.0 * pi;

enum class QubitKind { raman, quadrupole };

struct TrapPreset {
    std::string species = "88Sr+";
    double omega_z = two_pi * 1.2e6;
    double omega_x = two_pi * 1.9e6;
    double eta_z = 2 * 0.077;
    double eta_x = 2 * 0.043;
    double eta_y = 2 * 0.043;  // second radial direction, plaquette/chain only
    QubitKind kind = QubitKind::raman;
    double detuning = 0.0;  // single-photon detuning of the light-shift beams, quadrupole variant only

    void check() const {
        for (double e : {eta_z, eta_x, eta_y})
            if (!(e > 0 && e < 1)) throw invalid_parameter("Lamb-Dicke parameters must lie in (0,1)");
        if (!(omega_z > 0 && omega_x > 0)) throw invalid_parameter("trap frequencies must be positive");
    }
};

inline TrapPreset raman_preset() { return {}; }

inline TrapPreset quadrupole_preset() {
    TrapPreset p;
    p.eta_z = 0.05;
    p.eta_x = p.eta_y = 0.024;
    p.kind = QubitKind::quadrupole;
    return p;
}

// optical-qubit light-shift variant: two 674 nm beams
inline TrapPreset quadrupole_ls_preset() {
    TrapPreset p;
    p.eta_z = 2 * 0.05;
    p.eta_x = p.eta_y = 2 * 0.024;
    p.kind = QubitKind::quadrupole;
    p.detuning = two_pi * 3.56e6;
    return p;
}

// Lamb-Dicke parameter from wave-vector projection k and mode frequency (helper only)
inline double lamb_dicke(double k_proj, double mass, double omega, double hbar = 1.054571817e-34) {
    return k_proj * std::sqrt(hbar / (2.0 * mass * omega));
}

// ---- envelopes -------------------------------------------------------------

// sin^2 rise, flat top, sin^2 fall. fwhm() is rise + plateau.
struct PulseEnvelope {
    double rise = 0.0;
    double plateau = 0.0;

    double total() const { return 2.0 * rise + plateau; }
    double fwhm() const { return rise + plateau; }

    double operator()(double t) const {
        if (rise == 0.0) {
            const double slack = 1e-12 * std::max(total(), 1e-300);  // rectangular: keep endpoints inside
            return (t >= -slack && t <= total() + slack) ? 1.0 : 0.0;
        }
        if (t <= 0.0 || t >= total()) return 0.0;
        if (t < rise) return std::pow(std::sin(0.5 * pi * t / rise), 2);
        if (t <= rise + plateau) return 1.0;
        return std::pow(std::sin(0.5 * pi * (total() - t) / rise), 2);
    }

    static PulseEnvelope from_fwhm(double rise, double fwhm) {
        if (fwhm < rise) throw invalid_parameter("pulse FWHM shorter than its rise time");
        return {rise, fwhm - rise};
    }
};

// ---- link-layout kernels ---------------------------------------------------

inline SpaceLayout hardware_layout(int n_max) {
    return compose_space({mode(n_max, "z"), qubit("q"), mode(n_max, "x")});
}

// out += c (A (x) Q (x) B) in on [z, q, x]
inline void add_kron3(const Mat& A, const Eigen::Matrix2cd& Q, const Mat& B, cplx c, const Vec& in, Vec& out) {
    using RowMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0,
                              Eigen::OuterStride<>>;
    using RowMapW =
        Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0, Eigen::OuterStride<>>;
    const Eigen::Index dz = A.rows(), dx = B.rows();
    Mat tmp(dz, dx);
    for (int qi = 0; qi < 2; ++qi) {
        RowMap blk(in.data() + qi * dx, dz, dx, Eigen::OuterStride<>(2 * dx));
        bool used = false;
        for (int qo = 0; qo < 2; ++qo) {
            if (Q(qo, qi) == cplx(0)) continue;
            if (!used) {
                tmp.noalias() = A * blk * B.transpose();
                used = true;
            }
            RowMapW o(out.data() + qo * dx, dz, dx, Eigen::OuterStride<>(2 * dx));
            o += (c * Q(qo, qi)) * tmp;
        }
    }
}

inline void add_qubit_term(const Eigen::Matrix2cd& Q, cplx c, const Vec& in, Vec& out, Eigen::Index dz, Eigen::Index dx) {
    for (Eigen::Index z = 0; z < dz; ++z)
        for (int qo = 0; qo < 2; ++qo)
            for (int qi = 0; qi < 2; ++qi) {
                if (Q(qo, qi) == cplx(0)) continue;
                out.segment(z * 2 * dx + qo * dx, dx) += (c * Q(qo, qi)) * in.segment(z * 2 * dx + qi * dx, dx);
            }
}

inline Eigen::Matrix2cd pauli2(char axis) { return local::pauli(axis); }

// exp(i eta (a + a^dagger)) in the truncated Fock space, by diagonalising the
// Hermitian exponent; in the interaction picture D(t)_{mn} = e^{i w t (m-n)} D_mn
class ModeDisplacement {
public:
    ModeDisplacement() = default;
    ModeDisplacement(int n_max, double eta, double omega) : omega_(omega) {
        const Mat a = local::annihilation(n_max);
        const Mat x = eta * (a + a.adjoint());
        Eigen::SelfAdjointEigenSolver<Mat> es(x);
        const Vec ph = (I * es.eigenvalues().cast<cplx>()).array().exp();
        D_ = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    }

    Mat at(double t) const {
        const Eigen::Index d = D_.rows();
        Vec ph(d);
        for (Eigen::Index m = 0; m < d; ++m) ph(m) = std::exp(I * (omega_ * t * double(m)));
        return ph.asDiagonal() * D_ * ph.conjugate().asDiagonal();
    }
    const Mat& at_zero() const { return D_; }

private:
    Mat D_;
    double omega_ = 0.0;
};

// Common interface: apply(t, in, out) writes H(t) in; dense(t) gives the full matrix.
template <class Derived>
class LinkDrive {
public:
    LinearOperator at(double t) const {
        const SpaceLayout l = hardware_layout(n_max_);
        const std::int64_t n = l.dim();
        Mat H(n, n);
        Vec e = Vec::Zero(n), col(n);
        for (std::int64_t k = 0; k < n; ++k) {
            e.setZero();
            e(k) = 1;
            col.setZero();
            self().apply(t, e, col);
            H.col(k) = col;
        }
        return {l, H.sparseView(), true};
    }
    int n_max() const { return n_max_; }
    SpaceLayout layout() const { return hardware_layout(n_max_); }

protected:
    int n_max_ = 7;

private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

// ---- scheme I: state-dependent light shift ---------------------------------

// H = f(t) [ (Omega12/2) sz (x) (e^{i phi} e^{-i wd t} e^{iX(t)} + h.c.) + dE_ac sz + h sx ]
struct LSDrive : LinkDrive<LSDrive> {
    double omega12 = 0.0;
    double omega_d = 0.0;
    double phi_d = 0.0;
    double dE_ac = 0.0;
    double h = 0.0;  // resonant carrier field, h = Omega_tilde/2
    PulseEnvelope env{};
    bool shaped = false;
    ModeDisplacement Dz, Dx;

    LSDrive(const TrapPreset& p, int n_max, double omega12_, double omega_d_, double phi = 0.0) {
        p.check();
        n_max_ = n_max;
        omega12 = omega12_;
        omega_d = omega_d_;
        phi_d = phi;
        Dz = ModeDisplacement(n_max, p.eta_z, p.omega_z);
        Dx = ModeDisplacement(n_max, p.eta_x, p.omega_x);
    }

    double envelope(double t) const { return shaped ? env(t) : 1.0; }

    void apply(double t, const Vec& in, Vec& out) const {
        out.setZero();
        const double f = envelope(t);
        if (f == 0.0) return;
        const Mat dz = Dz.at(t), dx = Dx.at(t);
        const cplx ph = std::exp(I * (phi_d - omega_d * t));
        const Eigen::Matrix2cd sz = pauli2('z');
        add_kron3(dz, sz, dx, f * 0.5 * omega12 * ph, in, out);
        add_kron3(dz.adjoint(), sz, dx.adjoint(), f * 0.5 * omega12 * std::conj(ph), in, out);
        const Eigen::Index d = n_max_ + 1;
        if (dE_ac != 0.0) add_qubit_term(sz, f * dE_ac, in, out, d, d);
        if (h != 0.0) add_qubit_term(pauli2('x'), f * h, in, out, d, d);
    }
};

inline LinearOperator ls_hamiltonian(const TrapPreset& p, double omega12, double omega_d, double phi_d, double t,
                                     int n_max = 7, double dE_ac = 0.0) {
    LSDrive d(p, n_max, omega12, omega_d, phi_d);
    d.dE_ac = dE_ac;
    return d.at(t);
}

// ---- scheme I: bichromatic (Molmer-Sorensen type) ----------------------------

// H = f(t) Omega cos(delta t) (s+ e^{iX(t)} + h.c.) + (delta_s/2) sz
struct MSDrive : LinkDrive<MSDrive> {
    double omega = 0.0;
    double delta = 0.0;
    double delta_s = 0.0;
    PulseEnvelope env{};
    bool shaped = false;
    ModeDisplacement Dz, Dx;

    MSDrive(const TrapPreset& p, int n_max, double omega_, double delta_, double delta_s_ = 0.0) {
        p.check();
        n_max_ = n_max;
        omega = omega_;
        delta = delta_;
        delta_s = delta_s_;
        Dz = ModeDisplacement(n_max, p.eta_z, p.omega_z);
        Dx = ModeDisplacement(n_max, p.eta_x, p.omega_x);
    }

    double envelope(double t) const { return shaped ? env(t) : 1.0; }

    void apply(double t, const Vec& in, Vec& out) const {
        out.setZero();
        const Eigen::Index d = n_max_ + 1;
        const double f = envelope(t);
        if (f != 0.0) {
            const Mat dz = Dz.at(t), dx = Dx.at(t);
            const double c = f * omega * std::cos(delta * t);
            Eigen::Matrix2cd sp = Eigen::Matrix2cd::Zero(), sm = Eigen::Matrix2cd::Zero();
            sp(1, 0) = 1;
            sm(0, 1) = 1;
            add_kron3(dz, sp, dx, c, in, out);
            add_kron3(dz.adjoint(), sm, dx.adjoint(), c, in, out);
        }
        if (delta_s != 0.0) add_qubit_term(pauli2('z'), 0.5 * delta_s, in, out, d, d);
    }
};

inline LinearOperator ms_hamiltonian(const TrapPreset& p, double omega, double delta, double delta_s, double t,
                                     int n_max = 7) {
    return MSDrive(p, n_max, omega, delta, delta_s).at(t);
}

// ---- scheme II: orthogonal state-dependent forces --------------------------

// H = f(t) [ (eta_x Omega/2) sx a_x e^{-i delta t} + (eta_z Omega/2) sy a_z e^{-i delta t} + h.c.
//            + carriers: Omega cos((w_x+delta)t) sy + Omega cos((w_z+delta)t) sx ]
struct SDFDrive : LinkDrive<SDFDrive> {
    double omega = 0.0;
    double delta = 0.0;
    double phase_x = 0.0, phase_z = 0.0;
    bool carriers = false;
    double h = 0.0;  // field applied continuously (for tests); Trotter schedules use carrier segments
    double omega_x = 0.0, omega_z = 0.0, eta_x = 0.0, eta_z = 0.0;
    PulseEnvelope env{};
    bool shaped = false;
    double t_offset = 0.0;  // envelope origin, so pulse trains can reuse one drive
    Mat a;

    SDFDrive(const TrapPreset& p, int n_max, double omega_, double delta_, bool carriers_ = false) {
        p.check();
        n_max_ = n_max;
        omega = omega_;
        delta = delta_;
        carriers = carriers_;
        omega_x = p.omega_x, omega_z = p.omega_z, eta_x = p.eta_x, eta_z = p.eta_z;
        a = local::annihilation(n_max);
    }

    double envelope(double t) const { return shaped ? env(t - t_offset) : 1.0; }

    void apply(double t, const Vec& in, Vec& out) const {
        out.setZero();
        const Eigen::Index d = n_max_ + 1;
        const double f = envelope(t);
        if (f != 0.0) {
            const Mat id = Mat::Identity(d, d);
            const cplx e = std::exp(-I * delta * t);
            // half amplitude: the force comes from Omega cos(.) of the bichromatic pair
            const cplx cx = f * 0.5 * eta_x * omega * e * std::exp(I * phase_x);
            const cplx cz = f * 0.5 * eta_z * omega * e * std::exp(I * phase_z);
            add_kron3(id, pauli2('x'), a, cx, in, out);
            add_kron3(id, pauli2('x'), a.adjoint(), std::conj(cx), in, out);
            add_kron3(a, pauli2('y'), id, cz, in, out);
            add_kron3(a.adjoint(), pauli2('y'), id, std::conj(cz), in, out);
            if (carriers) {
                add_qubit_term(pauli2('y'), f * omega * std::cos((omega_x + delta) * t), in, out, d, d);
                add_qubit_term(pauli2('x'), f * omega * std::cos((omega_z + delta) * t), in, out, d, d);
            }
        }
        if (h != 0.0) add_qubit_term(pauli2('x'), h, in, out, d, d);
    }
};

inline LinearOperator sdf_pair_hamiltonian(const TrapPreset& p, double omega, double delta, double phase_x,
                                           double phase_z, double t, bool include_carrier, int n_max = 5) {
    SDFDrive d(p, n_max, omega, delta, include_carrier);
    d.phase_x = phase_x;
    d.phase_z = phase_z;
    return d.at(t);
}

// resonant carrier (Omega_tilde/2) sigma^axis; the tone frequency absorbs any ac-Stark shift
inline LinearOperator carrier_drive(const SpaceLayout& l, double omega_tilde, char axis, double ac_stark_shift = 0.0) {
    (void)ac_stark_shift;  // compensated by retuning the tone
    require_link(l);
    return (0.5 * omega_tilde) * pauli(l, 1, axis);
}

// true when the carrier axis is the field axis of the convention
inline bool carrier_axis_matches(char axis, Convention c) { return axis == field_axis(c); }

// ---- effective parameters ---------------------------------------------------

enum class Scheme { LS, MS, SDF };

struct Tones {
    double omega = 0.0;        // Omega12 (LS) or per-tone Rabi frequency (MS, SDF)
    double delta = 0.0;        // SDF force detuning
    double field = 0.0;        // Omega_tilde (LS carrier), delta_s (MS), or h directly (SDF)
};

inline LinkParams effective_link_params(Scheme s, const TrapPreset& p, const Tones& tn) {
    const double ee = p.eta_x * p.eta_z;
    switch (s) {
        case Scheme::LS: return {cplx(0.5 * std::abs(tn.omega) * ee, 0.0), 0.5 * tn.field, Convention::z_cond};
        case Scheme::MS: return {cplx(0.5 * std::abs(tn.omega) * ee, 0.0), 0.5 * tn.field, Convention::x_cond};
        case Scheme::SDF:
            if (tn.delta == 0) throw invalid_parameter("SDF needs a nonzero detuning");
            return {cplx(0.0, tn.omega * tn.omega * ee / (2.0 * tn.delta)), tn.field, Convention::z_cond};
    }
    throw invalid_parameter("unknown scheme");
}

inline PlaquetteParams plaquette_effective(const TrapPreset& p, double omega12, double omega_tilde = 0.0) {
    const double t = 0.25 * omega12 * p.eta_x * p.eta_y;
    return {cplx(t, 0.0), cplx(t, 0.0), 0.5 * omega_tilde, 0.0, 0.0};
}

inline double chain_effective_tunneling(const TrapPreset& p, double omega12) { return 0.25 * omega12 * p.eta_x * p.eta_y; }

// ---- Trotter schedule for scheme II ----------------------------------------

struct Segment {
    enum Kind { sdf, carrier } kind;
    double duration;     // wall-clock length
    PulseEnvelope env;   // SDF only
    double area = 0.0;   // carrier rotation angle theta in exp(-i theta/2 sx); 0 for SDF
};

struct PulseSchedule {
    std::vector<Segment> segments;
    double trotter_error = 0.0;  // h t (2 pi/delta)^2 with h, t in cycles per second

    double duration() const {
        double d = 0;
        for (auto& s : segments) d += s.duration;
        return d;
    }
};

// n_steps repetitions of [SDF pulse with FWHM k 2pi/delta] + [carrier realising exp(-i h T sx)].
// h and t_link are angular frequencies; carrier_rabi = 0 makes the carrier instantaneous.
inline PulseSchedule make_trotter_schedule(int n_steps, double delta, double h, double t_link, double rise, int k = 1,
                                           double carrier_rabi = 0.0) {
    if (n_steps < 1) throw invalid_parameter("need at least one Trotter step");
    if (!(delta > 0)) throw invalid_parameter("delta must be positive");
    const double fwhm = k * two_pi / delta;
    if (fwhm - rise < 0 || fwhm < 2 * rise) throw invalid_parameter("SDF plateau shorter than twice the ramp");
    PulseSchedule s;
    const PulseEnvelope env = PulseEnvelope::from_fwhm(rise, fwhm);
    for (int n = 0; n < n_steps; ++n) {
        s.segments.push_back({Segment::sdf, env.total(), env, 0.0});
        if (h != 0.0) {
            const double theta = 2.0 * h * fwhm;
            s.segments.push_back({Segment::carrier, carrier_rabi > 0 ? std::abs(theta) / carrier_rabi : 0.0, {}, theta});
        }
    }
    s.trotter_error = (std::abs(h) / two_pi) * (std::abs(t_link) / two_pi) * std::pow(two_pi / delta, 2);
    return s;
}

// ---- shaped-pulse scans --------------------------------------------------------

// Final states after single shaped pulses of several FWHM durations. The ramp-up and plateau
// are integrated once; a ramp-down copy branches off at each requested FWHM.
// The drive must expose `env`, `shaped` and apply(t, in, out).
template <class Drive>
std::vector<Vec> scan_pulse_lengths(Drive drive, const Vec& psi0, double rise, const std::vector<double>& fwhms,
                                    double dt) {
    check_grid(fwhms);
    if (fwhms.front() < rise) throw invalid_parameter("FWHM below rise time");
    const double longest = fwhms.back();
    drive.shaped = true;
    drive.env = PulseEnvelope::from_fwhm(rise, longest);
    std::vector<double> stops;
    for (double f : fwhms) stops.push_back(f);  // plateau end time for FWHM f is rise + (f - rise) = f
    std::vector<Vec> out;
    std::vector<Vec> at_stop;
    auto apply = [&](double t, const Vec& in, Vec& o) { drive.apply(t, in, o); };
    evolve_time_dependent(apply, psi0, stops, dt, [&](double, const Vec& v) { at_stop.push_back(v); });
    for (std::size_t k = 0; k < fwhms.size(); ++k) {
        Drive down = drive;
        down.env = PulseEnvelope::from_fwhm(rise, fwhms[k]);
        if (rise == 0.0) {
            out.push_back(at_stop[k]);
            continue;
        }
        auto ap = [&](double t, const Vec& in, Vec& o) { down.apply(t, in, o); };
        Vec last;
        evolve_time_dependent(ap, at_stop[k], {fwhms[k] + rise}, dt, [&](double, const Vec& v) { last = v; },
                              fwhms[k]);
        out.push_back(last);
    }
    return out;
}

// ---- exchange experiments ----------------------------------------------------

// Link observables sampled at the end of pulses; time axis is the FWHM (accumulated for trains).
struct ScanResult {
    std::vector<double> time, fidelity, gauge, n1, n2, sx;
    Exchange ex{0.0, 0.0};
    double gauge_max = 0.0;    // over the whole scan
    double gauge_at_ex = 0.0;  // interpolated at dt_ex

    double rate_hz() const { return 1.0 / (4.0 * ex.dt_ex); }
    double infidelity() const { return 1.0 - ex.f_max; }
    double contrast() const { return z2forge::contrast(sx); }

    void finish() {
        ex = find_exchange_duration(time, fidelity);
        gauge_max = 0;
        for (double g : gauge) gauge_max = std::max(gauge_max, std::abs(g));
        gauge_at_ex = std::abs(interp(gauge));
    }

private:
    double interp(const std::vector<double>& y) const {
        if (time.size() == 1 || ex.dt_ex <= time.front()) return y.front();
        for (std::size_t k = 1; k < time.size(); ++k)
            if (ex.dt_ex <= time[k]) {
                const double w = (ex.dt_ex - time[k - 1]) / (time[k] - time[k - 1]);
                return (1 - w) * y[k - 1] + w * y[k];
            }
        return y.back();
    }
};

struct LinkTargets {
    StateVector L, R;
    LinkProbe probe;

    LinkTargets(const SpaceLayout& l, Convention c)
        : L(make_state(StateKind::link_L, l, {1, 1, c}).psi),
          R(make_state(StateKind::link_R, l, {1, 1, c}).psi),
          probe(l, c) {}

    void record(ScanResult& r, double t, const StateVector& s) const {
        r.time.push_back(t);
        r.fidelity.push_back(fidelity(s, R));
        r.n1.push_back(expectation(s, probe.n1).real());
        r.n2.push_back(expectation(s, probe.n2).real());
        r.sx.push_back(expectation(s, probe.sx).real());
        r.gauge.push_back(expectation(s, probe.g_avg).real());
    }
};

// Single shaped pulses from |L>, one per requested FWHM; the first entry may equal the rise
// time (no plateau). Observables are taken after each pulse has ramped down.
template <class Drive>
ScanResult single_pulse_scan(const Drive& drive, Convention c, double rise, const std::vector<double>& fwhms, double dt) {
    const SpaceLayout l = drive.layout();
    const LinkTargets tg(l, c);
    ScanResult r;
    tg.record(r, 0.0, tg.L);
    const auto finals = scan_pulse_lengths(drive, tg.L.amplitudes(), rise, fwhms, dt);
    for (std::size_t k = 0; k < fwhms.size(); ++k) tg.record(r, fwhms[k], StateVector(l, finals[k]));
    r.finish();
    return r;
}

// Train of shaped SDF pulses (FWHM k 2pi/delta each) with optional Trotterised field carrier
// between pulses; sampled at every loop closure.
inline ScanResult sdf_pulse_train(SDFDrive drive, double rise, int n_pulses, double dt, double h_field = 0.0,
                                  int k = 1, double carrier_rabi = 0.0) {
    const PulseSchedule sched = make_trotter_schedule(n_pulses, drive.delta, h_field, 0.0, rise, k, carrier_rabi);
    const SpaceLayout l = drive.layout();
    const LinkTargets tg(l, Convention::z_cond);
    ScanResult r;
    tg.record(r, 0.0, tg.L);
    Vec psi = tg.L.amplitudes();
    double wall = 0.0, acc = 0.0;
    const Eigen::Index d = drive.n_max() + 1;
    for (const Segment& seg : sched.segments) {
        if (seg.kind == Segment::sdf) {
            drive.shaped = true;
            drive.env = seg.env;
            drive.t_offset = wall;
            auto ap = [&](double t, const Vec& in, Vec& o) { drive.apply(t, in, o); };
            evolve_time_dependent(ap, psi, {wall + seg.duration}, dt, [&](double, const Vec& v) { psi = v; }, wall);
            wall += seg.duration;
            acc += seg.env.fwhm();
            if (h_field == 0.0) tg.record(r, acc, StateVector(l, psi));
            continue;
        }
        // carrier: exp(-i theta/2 sx), realised instantaneously or as a square pulse
        const double c = std::cos(0.5 * seg.area), s = std::sin(0.5 * seg.area);
        Eigen::Matrix2cd u;
        u << c, -I * s, -I * s, c;
        Vec out = Vec::Zero(psi.size());
        add_qubit_term(u, 1.0, psi, out, d, d);
        psi = out;
        wall += seg.duration;
        tg.record(r, acc, StateVector(l, psi));
    }
    r.finish();
    return r;
}

// evenly spaced FWHM grid [rise, rise + span]
inline std::vector<double> fwhm_grid(double rise, double span, int n) {
    if (n < 2 || !(span > 0)) throw invalid_parameter("FWHM grid needs n >= 2 and positive span");
    std::vector<double> g;
    for (int k = 0; k < n; ++k) g.push_back(rise + span * double(k) / double(n - 1));
    if (rise == 0.0) g.front() = 1e-3 * span / double(n - 1);  // rectangular pulses need a nonzero length
    return g;
}

// rk4 step rule: 1/20 of the fastest period in the problem
inline double default_step(std::initializer_list<double> angular_rates) {
    double w = 0;
    for (double r : angular_rates) w = std::max(w, std::abs(r));
    if (w == 0) throw invalid_parameter("cannot pick a step without any rate");
    return two_pi / w / 20.0;
}

// ---- spectator-mode detuning -------------------------------------------------

// Largest population leaked into a spectator mode coupled with the same strength g as the
// link but detuned by Delta, over one ideal exchange window pi/(2g).
inline double spectator_error(double g, double Delta) {
    const SpaceLayout l = compose_space({mode(1), qubit(), mode(1), mode(1)});
    OperatorSum h(l);
    const Mat a = local::annihilation(1), sz = local::pauli('z');
    h.add(g, {{2, a.adjoint()}, {1, sz}, {0, a}});
    h.add(g, {{0, a.adjoint()}, {1, sz}, {2, a}});
    h.add(g, {{3, a.adjoint()}, {1, sz}, {0, a}});
    h.add(g, {{0, a.adjoint()}, {1, sz}, {3, a}});
    h.add(Delta, {{3, local::number(1)}});
    const LinearOperator H = h.to_operator(true);
    const StateVector psi0 = product_state(l, {1, QubitKet::minus, 0, 0});
    const LinearOperator ns = number(l, 3);
    double worst = 0;
    evolve_static(H, psi0, linspace(0, pi / (2 * g), 201),
                  [&](double, const StateVector& s) { worst = std::max(worst, expectation(s, ns).real()); });
    return worst;
}

// Smallest detuning with spectator error <= eps, for coupling g = Omega eta^2 / 2.
inline double spectator_min_detuning(double omega, double eta, double eps) {
    if (!(eps > 0 && eps < 1)) throw invalid_parameter("error threshold must lie in (0,1)");
    const double g = 0.5 * omega * eta * eta;
    if (g == 0) return 0.0;
    double lo = 0.0, hi = 2.0 * g;
    while (spectator_error(g, hi) > eps) {
        hi *= 2;
        if (hi > 1e6 * g) throw numerical_failure("no spectator detuning found within scan range");
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (spectator_error(g, mid) > eps ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace z2forge
