#pragma once

#include "gauge.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <string>
#include <vector>

namespace z2forge {

enum class Method { automatic, eigen, krylov, rk4 };

struct PropagationConfig {
    Method method = Method::automatic;
    double dt = 0.0;                // rk4 step; 0 lets the caller's default apply
    std::int64_t eigen_cap = 4096;  // largest dimension diagonalised densely
    double norm_tolerance = 1e-8;   // per-step drift allowed before aborting
    int krylov_dim = 30;
    double krylov_tol = 1e-13;
};

// Named real channels sampled on a common time grid.
class TimeSeries {
public:
    std::vector<double> times;

    void push(const std::string& name, double v) {
        auto [it, fresh] = channels_.try_emplace(name);
        if (fresh) order_.push_back(name);
        it->second.push_back(v);
    }

    const std::vector<double>& operator[](const std::string& name) const {
        auto it = channels_.find(name);
        if (it == channels_.end()) throw invalid_parameter("no channel named " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return channels_.count(name) > 0; }
    const std::vector<std::string>& names() const { return order_; }

    bool consistent() const {
        for (auto& [k, v] : channels_)
            if (v.size() != times.size()) return false;
        return true;
    }

private:
    std::map<std::string, std::vector<double>> channels_;
    std::vector<std::string> order_;
};

inline void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw invalid_parameter("time grid is empty");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw invalid_parameter("time grid must be strictly increasing");
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(std::size_t(std::max(n, 1)));
    for (int k = 0; k < n; ++k) g[std::size_t(k)] = n > 1 ? a + (b - a) * k / (n - 1) : a;
    return g;
}

// ---- Krylov -----------------------------------------------------------------

// exp(-i H tau) v by Lanczos with full reorthogonalisation. Substeps when the
// a-posteriori error estimate exceeds tol.
template <class Apply>
Vec lanczos_expmv(Apply&& apply, const Vec& v0, double tau, int m_max, double tol) {
    Vec v = v0;
    const Eigen::Index n = v.size();
    const int m = int(std::min<Eigen::Index>(m_max, n));
    double done = 0.0, step = tau;
    std::vector<Vec> V(std::size_t(m) + 1, Vec(n));
    Vec w(n);
    int tries = 0;
    // coefficients of exp(-i T s) e_1 in the Krylov basis, plus the residual estimate
    auto project = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, int K, double s, bool exhausted, Vec& y) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(K, K);
        for (int k = 0; k < K; ++k) {
            T(k, k) = a(k);
            if (k + 1 < K) T(k, k + 1) = T(k + 1, k) = b(k);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::MatrixXd& Q = es.eigenvectors();
        y = Vec::Zero(K);
        for (int k = 0; k < K; ++k) y += Q.col(k).cast<cplx>() * (std::exp(-I * es.eigenvalues()(k) * s) * Q(0, k));
        return exhausted ? 0.0 : b(K - 1) * std::abs(y(K - 1));
    };
    while (std::abs(tau - done) > 1e-15 * std::max(1.0, std::abs(tau))) {
        if (++tries > 100000) throw numerical_failure("Krylov propagation did not converge");
        if (std::abs(step) > std::abs(tau - done)) step = tau - done;
        const double beta0 = v.norm();
        if (beta0 == 0) return v;
        V[0] = v / beta0;
        Eigen::VectorXd alpha(m), beta(m);
        int K = 0;
        bool exhausted = false;
        Vec y;
        double err = 0.0;
        for (int k = 0; k < m; ++k) {
            apply(V[std::size_t(k)], w);
            alpha(k) = std::real(V[std::size_t(k)].dot(w));
            for (int pass = 0; pass < 2; ++pass)
                for (int j = 0; j <= k; ++j) w -= V[std::size_t(j)].dot(w) * V[std::size_t(j)];
            beta(k) = w.norm();
            K = k + 1;
            if (beta(k) < 1e-12 * std::max(1.0, std::abs(alpha(k))) || K == n) {
                exhausted = true;
                break;
            }
            V[std::size_t(k) + 1] = w / beta(k);
            if (K >= 3 && K < m) {
                err = project(alpha, beta, K, step, false, y);
                if (err <= tol) break;
            }
        }
        // retry with shorter steps until the residual estimate is small
        while (true) {
            err = project(alpha, beta, K, step, exhausted, y);
            if (err <= tol || std::abs(step) < 1e-300) {
                Vec out = Vec::Zero(n);
                for (int k = 0; k < K; ++k) out += y(k) * V[std::size_t(k)];
                v = beta0 * out;
                done += step;
                if (err < 0.1 * tol) step *= 1.5;
                break;
            }
            step *= 0.5;
        }
    }
    return v;
}

// ---- static propagation -------------------------------------------------

// Calls obs(t, psi) at every grid time. H is any Hermitian matrix (sparse or dense).
template <class Matrix, class Observer>
void evolve_static_matrix(const Matrix& H, const Vec& psi0, const std::vector<double>& grid, Observer&& obs,
                          const PropagationConfig& cfg = {}) {
    check_grid(grid);
    const std::int64_t n = psi0.size();
    if (H.rows() != n) throw invalid_parameter("Hamiltonian and state dimensions differ");
    Method m = cfg.method;
    if (m == Method::automatic) m = n <= cfg.eigen_cap ? Method::eigen : Method::krylov;
    if (m == Method::eigen) {
        Mat Hd = Mat(H);
        if ((Hd - Hd.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, Hd.cwiseAbs().maxCoeff()))
            throw invalid_parameter("evolve_static needs a Hermitian Hamiltonian");
        Eigen::SelfAdjointEigenSolver<Mat> es(Hd);
        const Vec c = es.eigenvectors().adjoint() * psi0;
        Vec ct(n), psi(n);
        for (double t : grid) {
            for (std::int64_t k = 0; k < n; ++k) ct(k) = std::exp(-I * es.eigenvalues()(k) * t) * c(k);
            psi.noalias() = es.eigenvectors() * ct;
            obs(t, static_cast<const Vec&>(psi));
        }
        return;
    }
    if (m != Method::krylov) throw invalid_parameter("static propagation supports eigen or krylov");
    auto apply = [&](const Vec& x, Vec& y) { y.noalias() = H * x; };
    Vec psi = psi0;
    double t = 0.0;
    for (double tg : grid) {
        if (tg != t) psi = lanczos_expmv(apply, psi, tg - t, cfg.krylov_dim, cfg.krylov_tol);
        t = tg;
        const double drift = std::abs(psi.norm() - 1.0);
        if (drift > 1e-10) throw numerical_failure("norm drift " + std::to_string(drift) + " in Krylov propagation");
        obs(t, static_cast<const Vec&>(psi));
    }
}

template <class Observer>
void evolve_static(const LinearOperator& H, const StateVector& psi0, const std::vector<double>& grid, Observer&& obs,
                   const PropagationConfig& cfg = {}) {
    if (H.layout() != psi0.layout()) throw invalid_parameter("layout mismatch");
    if (!H.hermitian()) throw invalid_parameter("evolve_static needs a Hermitian Hamiltonian");
    auto wrap = [&](double t, const Vec& v) { obs(t, StateVector(psi0.layout(), v)); };
    if (H.dim() < dense_threshold || (cfg.method != Method::krylov && H.dim() <= cfg.eigen_cap))
        evolve_static_matrix(H.dense(), psi0.amplitudes(), grid, wrap, cfg);
    else
        evolve_static_matrix(H.sparse(), psi0.amplitudes(), grid, wrap, cfg);
}

inline std::vector<StateVector> evolve_static(const LinearOperator& H, const StateVector& psi0,
                                              const std::vector<double>& grid, const PropagationConfig& cfg = {}) {
    std::vector<StateVector> out;
    evolve_static(H, psi0, grid, [&](double, const StateVector& s) { out.push_back(s); }, cfg);
    return out;
}

// ---- time-dependent propagation -----------------------------------------

struct RK4Stats {
    long steps = 0;
    double max_drift = 0.0;  // largest per-step norm drift before renormalisation
};

// Fixed-step classical RK4 for i dpsi/dt = H(t) psi. apply(t, in, out) writes H(t) in.
// Each grid interval is split into equal steps no longer than dt.
template <class Apply, class Observer>
RK4Stats evolve_time_dependent(Apply&& apply, Vec psi, const std::vector<double>& grid, double dt, Observer&& obs,
                               double t0 = 0.0, double norm_tolerance = 1e-6) {
    check_grid(grid);
    if (!(dt > 0)) throw invalid_parameter("time step must be positive");
    if (grid.front() < t0) throw invalid_parameter("grid starts before the initial time");
    const Eigen::Index n = psi.size();
    Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
    RK4Stats st;
    double t = t0;
    for (double tg : grid) {
        const double span = tg - t;
        const long nsteps = span > 0 ? long(std::ceil(span / dt - 1e-9)) : 0;
        const double h = nsteps ? span / double(nsteps) : 0.0;
        for (long s = 0; s < nsteps; ++s) {
            apply(t, psi, k1);
            k1 *= -I;
            tmp = psi + (0.5 * h) * k1;
            apply(t + 0.5 * h, tmp, k2);
            k2 *= -I;
            tmp = psi + (0.5 * h) * k2;
            apply(t + 0.5 * h, tmp, k3);
            k3 *= -I;
            tmp = psi + h * k3;
            apply(t + h, tmp, k4);
            k4 *= -I;
            psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double nrm = psi.norm();
            const double drift = std::abs(nrm - 1.0);
            st.max_drift = std::max(st.max_drift, drift);
            if (!(drift <= norm_tolerance))
                throw numerical_failure("RK4 norm drift " + std::to_string(drift) + " at t=" + std::to_string(t) +
                                        "; reduce the step");
            psi /= nrm;
            t += h;
            ++st.steps;
        }
        t = tg;
        obs(t, static_cast<const Vec&>(psi));
    }
    return st;
}

// ---- figure metrics --------------------------------------------------------

struct Exchange {
    double dt_ex;
    double f_max;
};

// global maximum of a sampled fidelity curve, refined by a parabola through its neighbours
inline Exchange find_exchange_duration(const std::vector<double>& times, const std::vector<double>& fid) {
    if (times.empty() || times.size() != fid.size()) throw invalid_parameter("fidelity trajectory is empty or ragged");
    std::size_t k = std::size_t(std::max_element(fid.begin(), fid.end()) - fid.begin());
    if (k == 0 || k + 1 == fid.size()) return {times[k], fid[k]};
    const double x0 = times[k - 1], x1 = times[k], x2 = times[k + 1];
    const double y0 = fid[k - 1], y1 = fid[k], y2 = fid[k + 1];
    const double d0 = (y1 - y0) / (x1 - x0), d1 = (y2 - y1) / (x2 - x1);
    const double a = (d1 - d0) / (x2 - x0);
    if (a >= 0) return {x1, y1};
    const double b = d0 - a * (x0 + x1);
    double xs = -b / (2 * a);
    xs = std::clamp(xs, x0, x2);
    const double ys = y0 + d0 * (xs - x0) + a * (xs - x0) * (xs - x1);
    return {xs, std::min(1.0, std::max(ys, y1))};
}

inline Exchange find_exchange_duration(const std::vector<double>& times, const std::vector<StateVector>& traj,
                                       const StateVector& target) {
    std::vector<double> f;
    f.reserve(traj.size());
    for (const auto& s : traj) f.push_back(fidelity(s, target));
    return find_exchange_duration(times, f);
}

// C = (max_t sx(t) - sx(0)) / 2
inline double contrast(const std::vector<double>& sx) {
    if (sx.empty()) throw invalid_parameter("empty sx channel");
    return (*std::max_element(sx.begin(), sx.end()) - sx.front()) / 2.0;
}

// ---- link observables --------------------------------------------------------

// n1, n2, field-axis spin and the averaged Gauss generators on a link layout
struct LinkProbe {
    LinearOperator n1, n2, sx, g_avg;

    LinkProbe(const SpaceLayout& l, Convention c) {
        n1 = number(l, 0);
        n2 = number(l, 2);
        sx = pauli(l, 1, field_axis(c));
        auto [g1, g2] = gauss_generators_link(l, c);
        g_avg = 0.5 * (g1 + g2);
    }

    void record(TimeSeries& ts, const StateVector& s) const {
        ts.push("n1", expectation(s, n1).real());
        ts.push("n2", expectation(s, n2).real());
        ts.push("sx", expectation(s, sx).real());
        ts.push("gauss", expectation(s, g_avg).real());
    }
};

}  // namespace z2forge
