#pragma once

#include "hilbert.hpp"

#include <optional>
#include <string>
#include <vector>

namespace z2forge {

// Z-COND: tunneling conditioned on sigma_z, field along sigma_x.
// X-COND: the rotated frame of the bichromatic scheme, roles swapped.
enum class Convention { z_cond, x_cond };

inline char tunneling_axis(Convention c) { return c == Convention::z_cond ? 'z' : 'x'; }
inline char field_axis(Convention c) { return c == Convention::z_cond ? 'x' : 'z'; }

struct LinkParams {
    cplx t_link{1.0, 0.0};
    double h = 0.0;
    Convention convention = Convention::z_cond;
};

struct PlaquetteParams {
    cplx t1{1.0, 0.0};
    cplx t2{1.0, 0.0};
    double h = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
};

struct ChainParams {
    int N = 2;
    std::vector<cplx> t;  // N-1 link tunnelings
    double h = 0.0;
    double mu = 0.0;
    int n_max = 1;  // 1 means hardcore

    static ChainParams uniform(int N, double t, double h, double mu = 0.0, int n_max = 1) {
        return {N, std::vector<cplx>(std::size_t(std::max(N - 1, 0)), cplx(t, 0.0)), h, mu, n_max};
    }

    void check() const {
        if (N < 2) throw invalid_parameter("chain needs N >= 2");
        if (int(t.size()) != N - 1) throw invalid_parameter("chain needs N-1 tunnelings");
        if (n_max < 1) throw invalid_parameter("n_max must be >= 1");
    }
};

// q_i in {0,1}: G_i eigenvalue exp(i pi q_i)
using SectorCharges = std::vector<int>;

// ---- link ----------------------------------------------------------------

inline SpaceLayout link_layout(int n_max) { return compose_space({mode(n_max, "a1"), qubit("link"), mode(n_max, "a2")}); }

inline void require_link(const SpaceLayout& l) {
    if (l.size() != 3 || !l.is_mode(0) || !l.is_qubit(1) || !l.is_mode(2))
        throw invalid_parameter("link layout must be [mode, qubit, mode]");
}

inline OperatorSum link_terms(const LinkParams& p, const SpaceLayout& l) {
    require_link(l);
    const int n1 = std::get<ModeSpec>(l.factor(0)).n_max, n2 = std::get<ModeSpec>(l.factor(2)).n_max;
    const Mat a1 = local::annihilation(n1), a2 = local::annihilation(n2);
    const Mat s = local::pauli(tunneling_axis(p.convention));
    OperatorSum h(l);
    h.add(p.t_link, {{2, a2.adjoint()}, {1, s}, {0, a1}});
    h.add(std::conj(p.t_link), {{0, a1.adjoint()}, {1, s}, {2, a2}});
    h.add(p.h, {{1, local::pauli(field_axis(p.convention))}});
    return h;
}

inline LinearOperator build_link_hamiltonian(const LinkParams& p, const SpaceLayout& l) {
    return link_terms(p, l).to_operator(true);
}

inline std::pair<LinearOperator, LinearOperator> gauss_generators_link(const SpaceLayout& l, Convention c) {
    require_link(l);
    LinearOperator s = pauli(l, 1, field_axis(c));
    return {parity(l, 0) * s, s * parity(l, 2)};
}

// P_q = prod_j (1 + e^{i pi q_j} G_j)/2
inline LinearOperator sector_projector(const std::vector<LinearOperator>& gens, const SectorCharges& q) {
    if (gens.empty()) throw invalid_parameter("no generators");
    if (gens.size() != q.size()) throw invalid_parameter("one charge per generator required");
    for (std::size_t a = 0; a < gens.size(); ++a)
        for (std::size_t b = a + 1; b < gens.size(); ++b)
            if (commutator(gens[a], gens[b]).max_abs() > 1e-12)
                throw invalid_parameter("generators do not commute");
    const auto& l = gens[0].layout();
    LinearOperator p = LinearOperator::identity(l);
    for (std::size_t j = 0; j < gens.size(); ++j) {
        double sgn = (q[j] % 2) ? -1.0 : 1.0;
        p = p * (0.5 * (LinearOperator::identity(l) + sgn * gens[j]));
    }
    p.mark_hermitian();
    return p;
}

// ---- plaquette -------------------------------------------------------------

inline SpaceLayout plaquette_layout(int n_max) {
    return compose_space({mode(n_max, "a1"), qubit("e1"), qubit("e2"), mode(n_max, "a2")});
}

inline void require_plaquette(const SpaceLayout& l) {
    if (l.size() != 4 || !l.is_mode(0) || !l.is_qubit(1) || !l.is_qubit(2) || !l.is_mode(3))
        throw invalid_parameter("plaquette layout must be [mode, qubit, qubit, mode]");
}

inline OperatorSum plaquette_terms(const PlaquetteParams& p, const SpaceLayout& l) {
    require_plaquette(l);
    const int n1 = std::get<ModeSpec>(l.factor(0)).n_max, n2 = std::get<ModeSpec>(l.factor(3)).n_max;
    const Mat a1 = local::annihilation(n1), a2 = local::annihilation(n2);
    const Mat sz = local::pauli('z'), sx = local::pauli('x');
    OperatorSum h(l);
    const cplx tn[2] = {p.t1, p.t2};
    for (int n = 0; n < 2; ++n) {
        h.add(tn[n], {{3, a2.adjoint()}, {1 + n, sz}, {0, a1}});
        h.add(std::conj(tn[n]), {{0, a1.adjoint()}, {1 + n, sz}, {3, a2}});
        h.add(p.h, {{1 + n, sx}});
    }
    h.add(p.delta1, {{0, local::number(n1)}});
    h.add(p.delta2, {{3, local::number(n2)}});
    return h;
}

inline LinearOperator build_plaquette_hamiltonian(const PlaquetteParams& p, const SpaceLayout& l) {
    return plaquette_terms(p, l).to_operator(true);
}

inline std::pair<LinearOperator, LinearOperator> gauss_generators_plaquette(const SpaceLayout& l) {
    require_plaquette(l);
    LinearOperator ss = pauli(l, 1, 'x') * pauli(l, 2, 'x');
    return {parity(l, 0) * ss, ss * parity(l, 3)};
}

// ---- chain -----------------------------------------------------------------

// site i (1-based) sits at factor 2(i-1); link l between sites l and l+1 at factor 2l-1
inline int chain_site_factor(int i) { return 2 * (i - 1); }
inline int chain_link_factor(int l) { return 2 * l - 1; }

inline SpaceLayout chain_layout(int N, int n_max) {
    if (N < 2) throw invalid_parameter("chain needs N >= 2");
    std::vector<Factor> f;
    for (int i = 1; i <= N; ++i) {
        f.push_back(mode(n_max, "a" + std::to_string(i)));
        if (i < N) f.push_back(qubit("s" + std::to_string(i)));
    }
    return compose_space(std::move(f));
}

inline void require_chain(const SpaceLayout& l, int N) {
    if (l.size() != 2 * N - 1) throw invalid_parameter("chain layout does not match N");
    for (int k = 0; k < l.size(); ++k)
        if ((k % 2 == 0) != l.is_mode(k)) throw invalid_parameter("chain layout must alternate mode, qubit, ..., mode");
}

inline OperatorSum chain_terms(const ChainParams& p, const SpaceLayout& l) {
    p.check();
    require_chain(l, p.N);
    OperatorSum h(l);
    const Mat sz = local::pauli('z'), sx = local::pauli('x');
    for (int i = 1; i < p.N; ++i) {
        const int fi = chain_site_factor(i), fj = chain_site_factor(i + 1), fl = chain_link_factor(i);
        const Mat ai = local::annihilation(std::get<ModeSpec>(l.factor(fi)).n_max);
        const Mat aj = local::annihilation(std::get<ModeSpec>(l.factor(fj)).n_max);
        h.add(p.t[i - 1], {{fj, aj.adjoint()}, {fl, sz}, {fi, ai}});
        h.add(std::conj(p.t[i - 1]), {{fi, ai.adjoint()}, {fl, sz}, {fj, aj}});
        h.add(p.h, {{fl, sx}});
    }
    if (p.mu != 0.0)
        for (int i = 1; i <= p.N; ++i) {
            const int f = chain_site_factor(i);
            h.add(p.mu * ((i % 2) ? -1.0 : 1.0), {{f, local::number(std::get<ModeSpec>(l.factor(f)).n_max)}});
        }
    return h;
}

inline LinearOperator build_chain_hamiltonian(const ChainParams& p, const SpaceLayout& l) {
    return chain_terms(p, l).to_operator(true);
}

inline LinearOperator chain_generator(const SpaceLayout& l, int N, int i) {
    require_chain(l, N);
    if (i < 1 || i > N) throw invalid_parameter("site out of range");
    LinearOperator g = parity(l, chain_site_factor(i));
    if (i > 1) g = g * pauli(l, chain_link_factor(i - 1), 'x');
    if (i < N) g = g * pauli(l, chain_link_factor(i), 'x');
    return g;
}

inline std::vector<LinearOperator> chain_generators(const SpaceLayout& l, int N) {
    std::vector<LinearOperator> g;
    for (int i = 1; i <= N; ++i) g.push_back(chain_generator(l, N, i));
    return g;
}

// ---- canonical states ------------------------------------------------------

enum class StateKind {
    link_L,
    link_R,
    link_C,
    plaquette_L1,
    plaquette_L2,
    plaquette_R1,
    plaquette_R2,
    bell_target,
    noon_target,
    chain_single,
    chain_pair,
    chain_vacuum_halffilled,
    chain_meson,
    chain_string,
};

struct StateArgs {
    int i = 1;
    int j = 1;
    Convention convention = Convention::z_cond;
};

struct PhysicalState {
    StateVector psi;
    SectorCharges charges;
};

// Product description of a chain state: occupations and link sigma_x signs.
struct ChainConfig {
    std::vector<int> n;      // size N
    std::vector<int> links;  // size N-1, +1 or -1 (sigma_x eigenvalue)

    SectorCharges charges() const {
        const int N = int(n.size());
        SectorCharges q(N);
        for (int i = 1; i <= N; ++i) {
            int g = (n[i - 1] % 2) ? -1 : 1;
            if (i > 1) g *= links[i - 2];
            if (i < N) g *= links[i - 1];
            q[i - 1] = g < 0 ? 1 : 0;
        }
        return q;
    }

    std::vector<LocalKet> kets() const {
        std::vector<LocalKet> k;
        for (std::size_t i = 0; i < n.size(); ++i) {
            k.emplace_back(n[i]);
            if (i + 1 < n.size()) k.emplace_back(links[i] > 0 ? QubitKet::plus : QubitKet::minus);
        }
        return k;
    }
};

inline ChainConfig chain_config(StateKind kind, int N, int i = 1, int j = 1) {
    ChainConfig c{std::vector<int>(std::size_t(N), 0), std::vector<int>(std::size_t(N - 1), -1)};
    auto site = [&](int s) {
        if (s < 1 || s > N) throw invalid_parameter("site " + std::to_string(s) + " out of range");
    };
    switch (kind) {
        case StateKind::chain_single:
            site(i);
            c.n[i - 1] = 1;
            for (int l = 1; l < i; ++l) c.links[l - 1] = 1;
            break;
        case StateKind::chain_pair:
            site(i), site(j);
            if (j < i) throw invalid_parameter("pair needs j >= i");
            c.n[i - 1] += 1, c.n[j - 1] += 1;
            for (int l = i; l < j; ++l) c.links[l - 1] = 1;
            break;
        case StateKind::chain_vacuum_halffilled:
        case StateKind::chain_meson:
        case StateKind::chain_string: {
            for (int s = 1; s <= N; s += 2) c.n[s - 1] = 1;
            if (kind == StateKind::chain_vacuum_halffilled) break;
            // particle on even site 2i, hole on odd site 2j+1, string on links 2i..2j
            const int jj = kind == StateKind::chain_meson ? i : j;
            if (jj < i) throw invalid_parameter("string needs j >= i");
            const int p = 2 * i, h = 2 * jj + 1;
            if (p < 2 || h > N) throw invalid_parameter("meson/string sites out of range");
            c.n[p - 1] = 1, c.n[h - 1] = 0;
            for (int l = p; l < h; ++l) c.links[l - 1] = 1;
            break;
        }
        default: throw invalid_parameter("not a chain state kind");
    }
    return c;
}

inline PhysicalState make_state(StateKind kind, const SpaceLayout& l, StateArgs a = {}) {
    const bool z = a.convention == Convention::z_cond;
    const QubitKet lo = z ? QubitKet::minus : QubitKet::down;  // field-axis eigenvalue -1
    const QubitKet hi = z ? QubitKet::plus : QubitKet::up;
    auto sgn = [&](QubitKet k) { return (k == QubitKet::plus || k == QubitKet::up) ? 1 : -1; };
    auto link_q = [&](int n1, QubitKet s, int n2) {
        int g1 = ((n1 % 2) ? -1 : 1) * sgn(s), g2 = sgn(s) * ((n2 % 2) ? -1 : 1);
        return SectorCharges{g1 < 0, g2 < 0};
    };
    auto plaq_q = [&](int n1, QubitKet s1, QubitKet s2, int n2) {
        int ss = sgn(s1) * sgn(s2);
        return SectorCharges{(((n1 % 2) ? -1 : 1) * ss) < 0, (ss * ((n2 % 2) ? -1 : 1)) < 0};
    };
    using Q = QubitKet;
    switch (kind) {
        case StateKind::link_L: require_link(l); return {product_state(l, {1, lo, 0}), link_q(1, lo, 0)};
        case StateKind::link_R: require_link(l); return {product_state(l, {0, hi, 1}), link_q(0, hi, 1)};
        case StateKind::link_C: require_link(l); return {product_state(l, {1, hi, 1}), link_q(1, hi, 1)};
        case StateKind::noon_target: {
            require_link(l);
            Vec v = product_state(l, {2, lo, 0}).amplitudes() + product_state(l, {0, lo, 2}).amplitudes();
            v.normalize();
            return {StateVector(l, v), link_q(2, lo, 0)};
        }
        case StateKind::plaquette_L1: require_plaquette(l); return {product_state(l, {1, Q::minus, Q::minus, 0}), plaq_q(1, Q::minus, Q::minus, 0)};
        case StateKind::plaquette_L2: require_plaquette(l); return {product_state(l, {1, Q::plus, Q::plus, 0}), plaq_q(1, Q::plus, Q::plus, 0)};
        case StateKind::plaquette_R1: require_plaquette(l); return {product_state(l, {0, Q::plus, Q::minus, 1}), plaq_q(0, Q::plus, Q::minus, 1)};
        case StateKind::plaquette_R2: require_plaquette(l); return {product_state(l, {0, Q::minus, Q::plus, 1}), plaq_q(0, Q::minus, Q::plus, 1)};
        case StateKind::bell_target: {
            require_plaquette(l);
            Vec v = product_state(l, {1, Q::minus, Q::minus, 0}).amplitudes() -
                    I * product_state(l, {1, Q::plus, Q::plus, 0}).amplitudes();
            v.normalize();
            return {StateVector(l, v), plaq_q(1, Q::minus, Q::minus, 0)};
        }
        default: break;
    }
    const int N = (l.size() + 1) / 2;
    require_chain(l, N);
    ChainConfig c = chain_config(kind, N, a.i, a.j);
    return {product_state(l, c.kets()), c.charges()};
}

// ---- Peierls ladder --------------------------------------------------------

struct PeierlsLadderParams {
    int N = 2;
    std::vector<double> positions;  // equilibrium positions, units of the reference spacing
    double J_x = 1.0;               // dipolar tunneling at unit distance, x leg
    double J_y = 1.0;
    double omega_d = 2.0;           // rung tunneling is omega_d/2 e^{i phi_i}
    std::vector<double> phi;
    bool nearest_neighbor_only = false;
    int n_max = 1;

    // equally spaced ions with phase gradient giving flux Phi per plaquette
    static PeierlsLadderParams with_flux(int N, double flux, double J = 1.0, double omega_d = 2.0) {
        PeierlsLadderParams p;
        p.N = N;
        p.J_x = p.J_y = J;
        p.omega_d = omega_d;
        for (int i = 0; i < N; ++i) {
            p.positions.push_back(double(i));
            p.phi.push_back(flux * i);
        }
        return p;
    }
};

// mode (i, leg) at factor 2i + leg, leg 0 = x, 1 = y
inline SpaceLayout ladder_layout(int N, int n_max) {
    std::vector<Factor> f;
    for (int i = 1; i <= N; ++i) {
        f.push_back(mode(n_max, "x" + std::to_string(i)));
        f.push_back(mode(n_max, "y" + std::to_string(i)));
    }
    return compose_space(std::move(f));
}

inline OperatorSum ladder_terms(const PeierlsLadderParams& p, const SpaceLayout& l) {
    if (int(p.positions.size()) != p.N || int(p.phi.size()) != p.N)
        throw invalid_parameter("ladder needs N positions and N phases");
    for (int i = 1; i < p.N; ++i)
        if (!(p.positions[i] > p.positions[i - 1])) throw invalid_parameter("positions must be strictly ordered");
    if (l.size() != 2 * p.N) throw invalid_parameter("ladder layout must have 2N modes");
    for (int k = 0; k < l.size(); ++k)
        if (!l.is_mode(k)) throw invalid_parameter("ladder layout has only modes");
    OperatorSum h(l);
    auto a = [&](int k) { return local::annihilation(std::get<ModeSpec>(l.factor(k)).n_max); };
    for (int i = 0; i < p.N; ++i) {
        for (int j = i + 1; j < p.N; ++j) {
            if (p.nearest_neighbor_only && j != i + 1) continue;
            const double r = std::abs(p.positions[j] - p.positions[i]);
            const double dip = 1.0 / (r * r * r);
            for (int leg = 0; leg < 2; ++leg) {
                const double J = (leg ? p.J_y : p.J_x) * dip;
                const int fi = 2 * i + leg, fj = 2 * j + leg;
                h.add(J, {{fj, a(fj).adjoint()}, {fi, a(fi)}});
                h.add(J, {{fi, a(fi).adjoint()}, {fj, a(fj)}});
            }
        }
        const cplx rung = 0.5 * p.omega_d * std::exp(I * p.phi[i]);
        h.add(rung, {{2 * i + 1, a(2 * i + 1).adjoint()}, {2 * i, a(2 * i)}});
        h.add(std::conj(rung), {{2 * i, a(2 * i).adjoint()}, {2 * i + 1, a(2 * i + 1)}});
    }
    return h;
}

inline LinearOperator build_peierls_ladder(const PeierlsLadderParams& p, const SpaceLayout& l) {
    return ladder_terms(p, l).to_operator(true);
}

// product of the four tunneling amplitudes around plaquette (i, i+1), counterclockwise
inline cplx plaquette_loop_phase(const PeierlsLadderParams& p, int i) {
    const double r = std::abs(p.positions[i + 1] - p.positions[i]);
    const double dip = 1.0 / (r * r * r);
    const cplx up = 0.5 * p.omega_d * std::exp(I * p.phi[i + 1]);
    const cplx down = 0.5 * p.omega_d * std::exp(-I * p.phi[i]);
    cplx loop = (p.J_x * dip) * up * (p.J_y * dip) * down;
    return loop / std::abs(loop);
}

}  // namespace z2forge
