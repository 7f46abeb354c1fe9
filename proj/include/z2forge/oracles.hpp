#pragma once

#include "hilbert.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace z2forge {

// ---- Bessel functions of integer order -----------------------------------

namespace detail {

// J_n(x) by power series; only used for small x where it converges in a few terms
inline double bessel_series(int n, double x) {
    const double hx = 0.5 * x;
    double term = std::exp(n * std::log(hx) - std::lgamma(n + 1.0));
    double sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= -hx * hx / (double(k) * double(n + k));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

}  // namespace detail

// J_0(x) .. J_nmax(x) for x > 0 by Miller's downward recurrence,
// normalised with J_0 + 2 sum_k J_2k = 1
inline std::vector<double> bessel_j_table(int nmax, double x) {
    std::vector<double> out(std::size_t(nmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double ax = std::abs(x);
    int start = std::max(nmax, int(ax)) + 20 + int(std::sqrt(60.0 * std::max(nmax, int(ax)) + 60.0));
    start += start % 2;  // even start keeps the normalisation sum aligned
    std::vector<double> j(std::size_t(start) + 2, 0.0);
    double jp1 = 0.0, jc = 1e-300, norm = 0.0;
    for (int k = start; k >= 1; --k) {
        const double jm1 = (2.0 * k / ax) * jc - jp1;
        jp1 = jc;
        jc = jm1;
        j[std::size_t(k) - 1] = jc;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * jc;
        if (std::abs(jc) > 1e250) {
            const double s = 1e-250;
            for (int m = k - 1; m <= start && m < int(j.size()); ++m) j[std::size_t(m)] *= s;
            jp1 *= s, jc *= s, norm *= s;
        }
    }
    norm += j[0];
    for (int n = 0; n <= nmax; ++n) {
        double v = j[std::size_t(n)] / norm;
        if (x < 0 && (n % 2)) v = -v;
        out[std::size_t(n)] = v;
    }
    return out;
}

inline double bessel_j(int n, double x) {
    if (std::abs(n) > 1000 || std::abs(x) > 1000.0) throw invalid_parameter("bessel_j: order or argument out of range");
    double sign = 1.0;
    if (n < 0) {
        n = -n;
        if (n % 2) sign = -sign;
    }
    if (x < 0) {
        x = -x;
        if (n % 2) sign = -sign;
    }
    if (x == 0.0) return n == 0 ? sign : 0.0;
    if (x < 1e-2 || (x < 1.0 && n > 40)) return sign * detail::bessel_series(n, x);
    return sign * bessel_j_table(n, x)[std::size_t(n)];
}

// ---- single link --------------------------------------------------------

struct LinkOracleParams {
    double t_link = 1.0;
    double h = 0.0;
    double omega0() const { return std::sqrt(t_link * t_link + h * h); }
    double omega0_tilde() const { return std::sqrt(4 * t_link * t_link + h * h); }
};

struct LinkObservables {
    double n1, n2, sx;
};

inline LinkObservables rabi_link(double t, const LinkOracleParams& p) {
    const double w = p.omega0();
    const double n2 = w > 0 ? (p.t_link * p.t_link / (w * w)) * std::pow(std::sin(w * t), 2) : 0.0;
    return {1.0 - n2, n2, 2.0 * n2 - 1.0};
}

inline double lambda_two_boson(double t, const LinkOracleParams& p) {
    const double w = p.omega0_tilde();
    if (w == 0) return 1.0;
    return 1.0 - (8.0 * p.t_link * p.t_link / (w * w)) * std::pow(std::sin(w * t), 2);
}

inline double noon_fidelity_times(const LinkOracleParams& p) {
    if (p.omega0_tilde() == 0) throw invalid_parameter("noon time undefined for zero couplings");
    return pi / (2.0 * p.omega0_tilde());
}

// ---- plaquette ----------------------------------------------------------

// populations of (L1, B, L2, D) under the spin-1 precession; initial amplitudes in that order
inline std::array<double, 4> plaquette_spin1(double t, double t_link, double h,
                                             std::array<cplx, 4> c0 = {1.0, 0.0, 0.0, 0.0}) {
    Eigen::Matrix3cd Sx, Sz;
    const double r = 1.0 / std::sqrt(2.0);
    Sx << 0, r, 0, r, 0, r, 0, r, 0;
    Sz << -1, 0, 0, 0, 0, 0, 0, 0, 1;
    const double bx = 2.0 * t_link, bz = 2.0 * h;
    const double b = std::hypot(bx, bz);
    Eigen::Matrix3cd U = Eigen::Matrix3cd::Identity();
    if (b > 0) {
        const Eigen::Matrix3cd n = (bx * Sx + bz * Sz) / b;
        // spin-1 rotation: exp(-i th n.S) = 1 - i sin(th) n.S - (1 - cos th)(n.S)^2
        U = Eigen::Matrix3cd::Identity() - I * std::sin(b * t) * n - (1.0 - std::cos(b * t)) * (n * n);
    }
    Eigen::Vector3cd c(c0[0], c0[1], c0[2]);
    Eigen::Vector3cd ct = U * c;
    return {std::norm(ct(0)), std::norm(ct(1)), std::norm(ct(2)), std::norm(c0[3])};
}

inline double plaquette_bell_time(double t_link, double delta2) {
    if (t_link == 0) throw invalid_parameter("plaquette_bell_time needs nonzero tunneling");
    return pi * delta2 / (4.0 * t_link * t_link);
}

// ---- Wannier-Stark ------------------------------------------------------

struct WSParams {
    int N = 16;
    double t_link = 1.0;
    double h = 0.4;
    int r0 = 0;     // pair separation
    double P = 0.0; // total momentum
    double gamma() const { return t_link / h; }
};

inline constexpr double ws_guard_threshold = 1e-6;

struct WSSingle {
    double n;            // occupation of the requested site
    double correlator;   // <sx_{i-1} sx_i>
    double dispersion;   // standard deviation of the boson position
    double tail;         // weight the infinite-chain solution puts outside [1, N]
    bool valid() const { return tail <= ws_guard_threshold; }
};

// weight of J_k(x)^2 for site offsets k that fall outside the chain
inline double ws_tail_weight(double x, int N, int center) {
    const int kmax = int(std::abs(x)) + 40;
    double inside = 0.0;
    for (int k = -kmax; k <= kmax; ++k) {
        int site = center + k;
        if (site >= 1 && site <= N) inside += std::pow(bessel_j(k, x), 2);
    }
    return std::max(0.0, 1.0 - inside);
}

inline double ws_argument(double t, const WSParams& p) {
    if (p.h == 0) return 2.0 * p.t_link * t;  // ballistic limit
    return 2.0 * p.gamma() * std::sin(p.h * t);
}

inline WSSingle ws_single(double t, int i, const WSParams& p) {
    const int c = p.N / 2;
    const double x = ws_argument(t, p);
    const double n = std::pow(bessel_j(i - c, x), 2);
    const double sigma = p.h == 0 ? std::sqrt(2.0) * p.t_link * t
                                  : std::sqrt(2.0) * (p.t_link / p.h) * std::abs(std::sin(p.h * t));
    return {n, 1.0 - 2.0 * n, sigma, ws_tail_weight(x, p.N, c)};
}

inline std::vector<double> ws_single_profile(double t, const WSParams& p) {
    std::vector<double> n(std::size_t(p.N));
    const double x = ws_argument(t, p);
    for (int i = 1; i <= p.N; ++i) n[std::size_t(i) - 1] = std::pow(bessel_j(i - p.N / 2, x), 2);
    return n;
}

// c_i = (-1)^{i-m} J_{i-m}(gamma) over sites [lo, hi]
inline std::vector<double> ws_eigenstate(int m, double gamma, int lo, int hi) {
    std::vector<double> c;
    for (int i = lo; i <= hi; ++i) c.push_back((((i - m) % 2) ? -1.0 : 1.0) * bessel_j(i - m, gamma));
    return c;
}

// ||(H - 2hm) c|| on the interior of [lo, hi] for H = t(hop) + 2h i
inline double ws_eigenstate_residual(int m, double t_link, double h, int lo, int hi) {
    auto c = ws_eigenstate(m, t_link / h, lo, hi);
    double r2 = 0;
    for (int i = lo + 1; i < hi; ++i) {
        const std::size_t k = std::size_t(i - lo);
        double v = t_link * (c[k - 1] + c[k + 1]) + 2 * h * i * c[k] - 2 * h * m * c[k];
        r2 += v * v;
    }
    return std::sqrt(r2);
}

inline double ws_two_boson(double t, int i, const WSParams& p) {
    if (p.r0 % 2 || p.N % 2) throw invalid_parameter("pair formula needs even N and even r0");
    const double x = ws_argument(t, p);
    const int c = p.N / 2, hr = p.r0 / 2;
    return std::pow(bessel_j(i - c - hr, x) + bessel_j(i - c + hr, x), 2);
}

// relative-coordinate amplitudes c(r), r in [lo, hi]
inline std::vector<double> two_body_bound_state(int m, double P, const WSParams& p, int lo, int hi) {
    const double gP = 2.0 * p.t_link * std::cos(P / 2.0) / p.h;
    std::vector<double> c;
    for (int r = lo; r <= hi; ++r) c.push_back((((r + m) % 2) ? -1.0 : 1.0) * bessel_j(r - m, gP));
    return c;
}

inline double two_body_residual(int m, double P, const WSParams& p, int lo, int hi) {
    auto c = two_body_bound_state(m, P, p, lo, hi);
    const double tP = 2.0 * p.t_link * std::cos(P / 2.0);
    double r2 = 0;
    for (int r = lo + 1; r < hi; ++r) {
        const std::size_t k = std::size_t(r - lo);
        double v = tP * (c[k - 1] + c[k + 1]) + 2 * p.h * r * c[k] - 2 * p.h * m * c[k];
        r2 += v * v;
    }
    return std::sqrt(r2);
}

}  // namespace z2forge
