#pragma once

#include "evolve.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace z2forge {

// ---- MPO -------------------------------------------------------------------

// W[a][b] is a d x d local operator (empty matrix = zero) between bond states a -> b
struct MPOSite {
    int wl = 1, wr = 1, d = 1;
    std::vector<Mat> W;  // row-major over (a, b)

    MPOSite() = default;
    MPOSite(int wl_, int wr_, int d_) : wl(wl_), wr(wr_), d(d_), W(std::size_t(wl_ * wr_)) {}
    Mat& at(int a, int b) { return W[std::size_t(a * wr + b)]; }
    const Mat& at(int a, int b) const { return W[std::size_t(a * wr + b)]; }
    bool has(int a, int b) const { return at(a, b).size() != 0; }
    void add(int a, int b, const Mat& m) {
        Mat& w = at(a, b);
        if (w.size() == 0)
            w = m;
        else
            w += m;
    }
};

struct MPO {
    std::vector<MPOSite> sites;
    int size() const { return int(sites.size()); }
    int max_bond() const {
        int m = 1;
        for (auto& s : sites) m = std::max({m, s.wl, s.wr});
        return m;
    }
};

// Finite-state-machine MPO of the gauge chain. Bond states: 0 start, 1 done,
// 2/3 a or a^dagger placed on a site, waiting for the link (2/3 again after the link, carrying sz).
inline MPO chain_to_mpo(const ChainParams& p) {
    p.check();
    const int N = p.N, db = p.n_max + 1;
    const Mat a = local::annihilation(p.n_max), ad = a.adjoint(), nb = local::number(p.n_max);
    const Mat Ib = Mat::Identity(db, db), Iq = Mat::Identity(2, 2);
    const Mat sz = local::pauli('z'), sx = local::pauli('x');
    MPO m;
    for (int i = 1; i <= N; ++i) {
        const bool first = i == 1, last = i == N;
        const int wl = first ? 1 : 4, wr = last ? 1 : 4;
        MPOSite w(wl, wr, db);
        // left index: first site only has "start"; right index: last site only has "done"
        auto L = [&](int s) { return first ? (s == 0 ? 0 : -1) : s; };
        auto R = [&](int s) { return last ? (s == 1 ? 0 : -1) : s; };
        auto put = [&](int ls, int rs, const Mat& op) {
            const int x = L(ls), y = R(rs);
            if (x >= 0 && y >= 0) w.add(x, y, op);
        };
        put(0, 0, Ib);
        put(1, 1, Ib);
        const double mu = p.mu * ((i % 2) ? -1.0 : 1.0);
        put(0, 1, mu * nb);  // zero matrix keeps the FSM edge even when mu = 0
        put(0, 2, a);
        put(0, 3, ad);
        if (i > 1) {
            put(2, 1, ad);  // closes t a^dagger_{i} sz a_{i-1}
            put(3, 1, a);   // closes t* a_{i} sz a^dagger_{i-1}
        }
        m.sites.push_back(std::move(w));
        if (last) break;
        MPOSite q(4, 4, 2);
        q.add(0, 0, Iq);
        q.add(1, 1, Iq);
        q.add(0, 1, p.h * sx);
        q.add(2, 2, p.t[std::size_t(i - 1)] * sz);
        q.add(3, 3, std::conj(p.t[std::size_t(i - 1)]) * sz);
        m.sites.push_back(std::move(q));
    }
    return m;
}

// ---- MPS -------------------------------------------------------------------

// Conserved-charge bookkeeping per site. Local state s adds dq[s] to the charge
// counted from the left. A restricted site (a gauge link) has no free index: for a
// left charge of parity p its local state must be allowed[p].
struct SiteRule {
    std::vector<int> dq;
    std::array<Vec, 2> allowed;
    bool restricted() const { return allowed[0].size() > 0; }
    const Vec& allowed_for(int q) const { return allowed[std::size_t(((q % 2) + 2) % 2)]; }
};

struct MPSState {
    std::vector<std::vector<Mat>> A;  // A[k][s] : D_{k} x D_{k+1}
    // q[k][b]: charge to the left of bond k (bond k sits left of site k); q[0] = {0}
    std::vector<std::vector<int>> q;
    std::vector<SiteRule> rules;
    int chi = 1;
    int center = 0;

    int size() const { return int(A.size()); }
    int phys(int k) const { return int(A[std::size_t(k)].size()); }
    int bond_left(int k) const { return int(A[std::size_t(k)][0].rows()); }
    int bond_right(int k) const { return int(A[std::size_t(k)][0].cols()); }
    int max_bond() const {
        int m = 1;
        for (int k = 0; k < size(); ++k) m = std::max(m, bond_right(k));
        return m;
    }
};

namespace detail {

// (Dl*d) x Dr matrix with row index s*Dl + l
inline Mat stack_rows(const std::vector<Mat>& A) {
    const Eigen::Index dl = A[0].rows(), dr = A[0].cols();
    Mat M(dl * Eigen::Index(A.size()), dr);
    for (std::size_t s = 0; s < A.size(); ++s) M.middleRows(Eigen::Index(s) * dl, dl) = A[s];
    return M;
}
inline std::vector<Mat> unstack_rows(const Mat& M, int d) {
    const Eigen::Index dl = M.rows() / d;
    std::vector<Mat> A(static_cast<std::size_t>(d), Mat());
    for (int s = 0; s < d; ++s) A[std::size_t(s)] = M.middleRows(Eigen::Index(s) * dl, dl);
    return A;
}
// Dl x (d*Dr) with column index s*Dr + r
inline Mat stack_cols(const std::vector<Mat>& A) {
    const Eigen::Index dl = A[0].rows(), dr = A[0].cols();
    Mat M(dl, dr * Eigen::Index(A.size()));
    for (std::size_t s = 0; s < A.size(); ++s) M.middleCols(Eigen::Index(s) * dr, dr) = A[s];
    return M;
}
inline std::vector<Mat> unstack_cols(const Mat& M, int d) {
    const Eigen::Index dr = M.cols() / d;
    std::vector<Mat> A(static_cast<std::size_t>(d), Mat());
    for (int s = 0; s < d; ++s) A[std::size_t(s)] = M.middleCols(Eigen::Index(s) * dr, dr);
    return A;
}

inline Vec flatten(const std::vector<Mat>& A) {
    const Eigen::Index n = A[0].size();
    Vec v(n * Eigen::Index(A.size()));
    for (std::size_t s = 0; s < A.size(); ++s) v.segment(Eigen::Index(s) * n, n) = Eigen::Map<const Vec>(A[s].data(), n);
    return v;
}
inline std::vector<Mat> unflatten(const Vec& v, int d, Eigen::Index dl, Eigen::Index dr) {
    std::vector<Mat> A(static_cast<std::size_t>(d), Mat());
    for (int s = 0; s < d; ++s) A[std::size_t(s)] = Eigen::Map<const Mat>(v.data() + Eigen::Index(s) * dl * dr, dl, dr);
    return A;
}

// thin QR with the full column count kept: M = Q R, Q^dagger Q = 1
inline std::pair<Mat, Mat> thin_qr(const Mat& M) {
    Eigen::HouseholderQR<Mat> qr(M);
    const Eigen::Index k = std::min(M.rows(), M.cols());
    Mat Q = qr.householderQ() * Mat::Identity(M.rows(), k);
    Mat R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    return {Q, R};
}

// A row (left grouping) or column (right grouping) of a charge block: bond index b and
// local state s, or s < 0 for the allowed vector of a restricted site
struct Slot {
    int b, s;
};

// (bond-left, local) pairs whose total charge is v
inline std::vector<Slot> left_slots(const MPSState& m, int k, int v) {
    const SiteRule& r = m.rules[std::size_t(k)];
    const auto& ql = m.q[std::size_t(k)];
    std::vector<Slot> out;
    if (r.restricted()) {
        for (int a = 0; a < int(ql.size()); ++a)
            if (ql[std::size_t(a)] == v) out.push_back({a, -1});
        return out;
    }
    for (int s = 0; s < int(r.dq.size()); ++s)
        for (int a = 0; a < int(ql.size()); ++a)
            if (ql[std::size_t(a)] + r.dq[std::size_t(s)] == v) out.push_back({a, s});
    return out;
}

// (local, bond-right) pairs that leave charge v on the left bond
inline std::vector<Slot> right_slots(const MPSState& m, int k, int v) {
    const SiteRule& r = m.rules[std::size_t(k)];
    const auto& qr = m.q[std::size_t(k) + 1];
    std::vector<Slot> out;
    if (r.restricted()) {
        for (int b = 0; b < int(qr.size()); ++b)
            if (qr[std::size_t(b)] == v) out.push_back({b, -1});
        return out;
    }
    for (int s = 0; s < int(r.dq.size()); ++s)
        for (int b = 0; b < int(qr.size()); ++b)
            if (qr[std::size_t(b)] - r.dq[std::size_t(s)] == v) out.push_back({b, s});
    return out;
}

inline std::vector<int> distinct(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// block of T[s](row, col) with rows from left slots and the given columns
inline Mat gather_left(const std::vector<Mat>& T, const SiteRule& r, int v, const std::vector<Slot>& rows,
                       const std::vector<int>& cols) {
    Mat M(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto [a, s] = rows[i];
            if (s >= 0) {
                M(Eigen::Index(i), Eigen::Index(j)) = T[std::size_t(s)](a, cols[j]);
            } else {
                const Vec& u = r.allowed_for(v);
                cplx acc = 0;
                for (Eigen::Index t = 0; t < u.size(); ++t) acc += std::conj(u(t)) * T[std::size_t(t)](a, cols[j]);
                M(Eigen::Index(i), Eigen::Index(j)) = acc;
            }
        }
    return M;
}

inline void scatter_left(std::vector<Mat>& T, const SiteRule& r, int v, const std::vector<Slot>& rows,
                         const std::vector<int>& cols, const Mat& M) {
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto [a, s] = rows[i];
            const cplx x = M(Eigen::Index(i), Eigen::Index(j));
            if (s >= 0) {
                T[std::size_t(s)](a, cols[j]) = x;
            } else {
                const Vec& u = r.allowed_for(v);
                for (Eigen::Index t = 0; t < u.size(); ++t) T[std::size_t(t)](a, cols[j]) = u(t) * x;
            }
        }
}

// rows are left bond indices, columns right slots
inline Mat gather_right(const std::vector<Mat>& T, const SiteRule& r, int v, const std::vector<int>& rows,
                        const std::vector<Slot>& cols) {
    Mat M(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto [b, s] = cols[j];
            if (s >= 0) {
                M(Eigen::Index(i), Eigen::Index(j)) = T[std::size_t(s)](rows[i], b);
            } else {
                const Vec& u = r.allowed_for(v);
                cplx acc = 0;
                for (Eigen::Index t = 0; t < u.size(); ++t) acc += std::conj(u(t)) * T[std::size_t(t)](rows[i], b);
                M(Eigen::Index(i), Eigen::Index(j)) = acc;
            }
        }
    return M;
}

inline void scatter_right(std::vector<Mat>& T, const SiteRule& r, int v, const std::vector<int>& rows,
                          const std::vector<Slot>& cols, const Mat& M) {
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto [b, s] = cols[j];
            const cplx x = M(Eigen::Index(i), Eigen::Index(j));
            if (s >= 0) {
                T[std::size_t(s)](rows[i], b) = x;
            } else {
                const Vec& u = r.allowed_for(v);
                for (Eigen::Index t = 0; t < u.size(); ++t) T[std::size_t(t)](rows[i], b) = u(t) * x;
            }
        }
}

inline std::vector<int> indices_with(const std::vector<int>& labels, int v) {
    std::vector<int> out;
    for (int i = 0; i < int(labels.size()); ++i)
        if (labels[std::size_t(i)] == v) out.push_back(i);
    return out;
}

struct Factor {
    std::vector<Mat> Q;       // orthonormal site tensor
    Mat F;                    // remainder pushed to the neighbour
    std::vector<int> labels;  // charges of the (possibly reduced) shared bond
};

// A[k] = Q F with Q left-orthonormal, block diagonal in the charges. A block with more
// bond indices than states is reduced to its rank, which changes the bond exactly.
inline Factor left_qr(const MPSState& m, int k) {
    const auto& A = m.A[std::size_t(k)];
    const SiteRule& r = m.rules[std::size_t(k)];
    const auto& qb = m.q[std::size_t(k) + 1];
    const Eigen::Index dl = A[0].rows(), dr = A[0].cols();
    const auto vals = distinct(qb);
    bool reduce = false;
    for (int v : vals) reduce |= left_slots(m, k, v).size() < indices_with(qb, v).size();
    Factor out;
    std::vector<std::vector<int>> newcols;
    if (!reduce) {
        out.labels = qb;
        for (int v : vals) newcols.push_back(indices_with(qb, v));
    } else {
        for (int v : vals) {
            const std::size_t kv = std::min(left_slots(m, k, v).size(), indices_with(qb, v).size());
            std::vector<int> c;
            for (std::size_t i = 0; i < kv; ++i) c.push_back(int(out.labels.size())), out.labels.push_back(v);
            newcols.push_back(c);
        }
    }
    const Eigen::Index nd = Eigen::Index(out.labels.size());
    out.Q.assign(A.size(), Mat::Zero(dl, nd));
    out.F = Mat::Zero(nd, dr);
    for (std::size_t g = 0; g < vals.size(); ++g) {
        const int v = vals[g];
        const auto cols = indices_with(qb, v);
        const auto rows = left_slots(m, k, v);
        if (newcols[g].empty()) continue;
        auto [Qv, Rv] = thin_qr(gather_left(A, r, v, rows, cols));
        scatter_left(out.Q, r, v, rows, newcols[g], Qv);
        for (std::size_t i = 0; i < newcols[g].size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) out.F(newcols[g][i], cols[j]) = Rv(Eigen::Index(i), Eigen::Index(j));
    }
    return out;
}

// A[k] = F Q with Q right-orthonormal
inline Factor right_qr(const MPSState& m, int k) {
    const auto& A = m.A[std::size_t(k)];
    const SiteRule& r = m.rules[std::size_t(k)];
    const auto& qb = m.q[std::size_t(k)];
    const Eigen::Index dl = A[0].rows(), dr = A[0].cols();
    const auto vals = distinct(qb);
    bool reduce = false;
    for (int v : vals) reduce |= right_slots(m, k, v).size() < indices_with(qb, v).size();
    Factor out;
    std::vector<std::vector<int>> newrows;
    if (!reduce) {
        out.labels = qb;
        for (int v : vals) newrows.push_back(indices_with(qb, v));
    } else {
        for (int v : vals) {
            const std::size_t kv = std::min(right_slots(m, k, v).size(), indices_with(qb, v).size());
            std::vector<int> c;
            for (std::size_t i = 0; i < kv; ++i) c.push_back(int(out.labels.size())), out.labels.push_back(v);
            newrows.push_back(c);
        }
    }
    const Eigen::Index nd = Eigen::Index(out.labels.size());
    out.Q.assign(A.size(), Mat::Zero(nd, dr));
    out.F = Mat::Zero(dl, nd);
    for (std::size_t g = 0; g < vals.size(); ++g) {
        const int v = vals[g];
        const auto rows = indices_with(qb, v);
        const auto cols = right_slots(m, k, v);
        if (newrows[g].empty()) continue;
        auto [Qh, Rh] = thin_qr(gather_right(A, r, v, rows, cols).adjoint());  // M = Rh^dag Qh^dag
        scatter_right(out.Q, r, v, newrows[g], cols, Qh.adjoint());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < newrows[g].size(); ++j)
                out.F(rows[i], newrows[g][j]) = std::conj(Rh(Eigen::Index(j), Eigen::Index(i)));
    }
    return out;
}

// bond matrix C between bonds with equal labels on both sides
inline void project_bond(const std::vector<int>& q, Mat& C) {
    for (Eigen::Index i = 0; i < C.rows(); ++i)
        for (Eigen::Index j = 0; j < C.cols(); ++j)
            if (q[std::size_t(i)] != q[std::size_t(j)]) C(i, j) = 0;
}

}  // namespace detail

// trivial charges: every label zero, no restricted sites
inline void set_trivial_charges(MPSState& m) {
    m.rules.assign(std::size_t(m.size()), SiteRule{});
    m.q.assign(std::size_t(m.size()) + 1, {});
    m.q[0] = {0};
    for (int k = 0; k < m.size(); ++k) {
        m.rules[std::size_t(k)].dq.assign(std::size_t(m.phys(k)), 0);
        m.q[std::size_t(k) + 1].assign(std::size_t(m.bond_right(k)), 0);
    }
}

// throws unless labels and tensors fit together
inline void check_charges(const MPSState& m) {
    if (int(m.q.size()) != m.size() + 1 || int(m.rules.size()) != m.size())
        throw invalid_parameter("MPS charge labels missing");
    for (int k = 0; k < m.size(); ++k) {
        if (int(m.q[std::size_t(k)].size()) != m.bond_left(k) || int(m.q[std::size_t(k) + 1].size()) != m.bond_right(k))
            throw invalid_parameter("MPS charge labels do not match bond dimensions");
        if (int(m.rules[std::size_t(k)].dq.size()) != m.phys(k)) throw invalid_parameter("MPS site rule has wrong dimension");
    }
}

// product state from per-site local vectors
inline MPSState product_mps(const std::vector<Vec>& locals, int chi = 1) {
    MPSState m;
    m.chi = chi;
    for (const Vec& v : locals) {
        std::vector<Mat> t(std::size_t(v.size()), Mat::Zero(1, 1));
        for (Eigen::Index s = 0; s < v.size(); ++s) t[std::size_t(s)](0, 0) = v(s);
        m.A.push_back(std::move(t));
    }
    m.center = 0;
    set_trivial_charges(m);
    return m;
}

inline bool is_product_kind(StateKind k) {
    switch (k) {
        case StateKind::chain_single:
        case StateKind::chain_pair:
        case StateKind::chain_vacuum_halffilled:
        case StateKind::chain_meson:
        case StateKind::chain_string: return true;
        default: return false;
    }
}

inline MPSState product_mps(StateKind kind, const ChainParams& p, int i = 1, int j = 1, int chi = 1) {
    p.check();
    if (!is_product_kind(kind)) throw invalid_parameter("state kind has no product form on a chain");
    const ChainConfig c = chain_config(kind, p.N, i, j);
    const SpaceLayout l = chain_layout(p.N, p.n_max);
    std::vector<Vec> loc;
    const auto kets = c.kets();
    for (int k = 0; k < l.size(); ++k) loc.push_back(local_ket(l, k, kets[std::size_t(k)]));
    MPSState m = product_mps(loc, chi);
    // boson number to the left is conserved; a link's sx is then fixed by Gauss' law
    // through the parity of that number
    int nl = 0;
    for (int k = 0; k < l.size(); ++k) {
        SiteRule& r = m.rules[std::size_t(k)];
        if (k % 2 == 0) {
            const int i = k / 2;
            for (int s = 0; s < m.phys(k); ++s) r.dq[std::size_t(s)] = s;
            nl += c.n[std::size_t(i)];
        } else {
            const Vec& v0 = loc[std::size_t(k)];
            Vec flipped = local::pauli('z') * v0;
            r.allowed[std::size_t(nl % 2)] = v0;
            r.allowed[std::size_t(1 - nl % 2)] = flipped;
        }
        m.q[std::size_t(k) + 1] = {nl};
    }
    return m;
}

// dense amplitudes, last site fastest
inline Vec to_dense(const MPSState& m) {
    Mat cur = Mat::Identity(1, 1);  // rows: left configurations, cols: bond
    for (int k = 0; k < m.size(); ++k) {
        const int d = m.phys(k);
        Mat nxt(cur.rows() * d, m.bond_right(k));
        for (Eigen::Index r = 0; r < cur.rows(); ++r)
            for (int s = 0; s < d; ++s) nxt.row(r * d + s) = cur.row(r) * m.A[std::size_t(k)][std::size_t(s)];
        cur = std::move(nxt);
    }
    return cur.col(0);
}

inline Mat mpo_to_dense(const MPO& w) {
    // rows/cols: configuration pairs; accumulate per right bond state
    std::vector<Mat> cur{Mat::Identity(1, 1)};
    for (const auto& s : w.sites) {
        std::vector<Mat> nxt(std::size_t(s.wr));
        for (int b = 0; b < s.wr; ++b) {
            Mat acc = Mat::Zero(cur[0].rows() * s.d, cur[0].cols() * s.d);
            for (int a = 0; a < s.wl; ++a)
                if (s.has(a, b)) acc += kron(cur[std::size_t(a)], s.at(a, b));
            nxt[std::size_t(b)] = std::move(acc);
        }
        cur = std::move(nxt);
    }
    return cur[0];
}

// ---- canonical forms ----------------------------------------------------------

inline void left_orthonormalize_site(MPSState& m, int k) {
    auto f = detail::left_qr(m, k);
    m.A[std::size_t(k)] = std::move(f.Q);
    for (auto& B : m.A[std::size_t(k) + 1]) B = f.F * B;
    m.q[std::size_t(k) + 1] = std::move(f.labels);
}

inline void right_orthonormalize_site(MPSState& m, int k) {
    auto f = detail::right_qr(m, k);
    m.A[std::size_t(k)] = std::move(f.Q);
    for (auto& B : m.A[std::size_t(k) - 1]) B = B * f.F;
    m.q[std::size_t(k)] = std::move(f.labels);
}

inline void move_center(MPSState& m, int target) {
    if (m.rules.empty()) set_trivial_charges(m);
    while (m.center < target) left_orthonormalize_site(m, m.center++);
    while (m.center > target) right_orthonormalize_site(m, m.center--);
}

// full sweeps until no charge block needs reducing, then the centre goes to target
inline void canonicalize(MPSState& m, int target = 0) {
    check_charges(m);
    std::vector<int> dims;
    for (;;) {
        m.center = 0;
        move_center(m, m.size() - 1);
        move_center(m, 0);
        std::vector<int> now;
        for (int k = 0; k < m.size(); ++k) now.push_back(m.bond_right(k));
        if (now == dims) break;
        dims = std::move(now);
    }
    move_center(m, target);
}

inline double norm(const MPSState& m) {
    Mat E = Mat::Identity(1, 1);
    for (const auto& site : m.A) {
        Mat n = Mat::Zero(site[0].cols(), site[0].cols());
        for (const auto& As : site) n += As.adjoint() * E * As;
        E = std::move(n);
    }
    return std::sqrt(std::abs(E(0, 0)));
}

inline cplx overlap(const MPSState& bra, const MPSState& ket) {
    if (bra.size() != ket.size()) throw invalid_parameter("MPS lengths differ");
    Mat E = Mat::Identity(1, 1);
    for (int k = 0; k < ket.size(); ++k) {
        Mat n = Mat::Zero(bra.bond_right(k), ket.bond_right(k));
        for (int s = 0; s < ket.phys(k); ++s) n += bra.A[std::size_t(k)][std::size_t(s)].adjoint() * E * ket.A[std::size_t(k)][std::size_t(s)];
        E = std::move(n);
    }
    return E(0, 0);
}

// largest deviation from the gauge conditions around the centre
inline double canonical_error(const MPSState& m) {
    double err = 0;
    for (int k = 0; k < m.size(); ++k) {
        if (k == m.center) continue;
        Mat g;
        if (k < m.center) {
            g = Mat::Zero(m.bond_right(k), m.bond_right(k));
            for (const auto& As : m.A[std::size_t(k)]) g += As.adjoint() * As;
        } else {
            g = Mat::Zero(m.bond_left(k), m.bond_left(k));
            for (const auto& As : m.A[std::size_t(k)]) g += As * As.adjoint();
        }
        err = std::max(err, (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    return err;
}

// ---- environments ----------------------------------------------------------

using Env = std::vector<Mat>;  // one matrix per MPO bond state

inline Env extend_left(const Env& L, const std::vector<Mat>& A, const MPOSite& w) {
    const Eigen::Index dr = A[0].cols();
    std::vector<std::vector<Mat>> LA(std::size_t(w.wl));
    for (int a = 0; a < w.wl; ++a) {
        if (L[std::size_t(a)].size() == 0) continue;
        for (int s = 0; s < w.d; ++s) LA[std::size_t(a)].push_back(L[std::size_t(a)] * A[std::size_t(s)]);
    }
    Env out(std::size_t(w.wr));
    for (int b = 0; b < w.wr; ++b) {
        Mat acc = Mat::Zero(dr, dr);
        bool any = false;
        for (int sp = 0; sp < w.d; ++sp) {
            Mat tmp;
            for (int a = 0; a < w.wl; ++a) {
                if (!w.has(a, b) || LA[std::size_t(a)].empty()) continue;
                const Mat& op = w.at(a, b);
                for (int s = 0; s < w.d; ++s) {
                    if (op(sp, s) == cplx(0)) continue;
                    if (tmp.size() == 0) tmp = Mat::Zero(LA[std::size_t(a)][0].rows(), dr);
                    tmp += op(sp, s) * LA[std::size_t(a)][std::size_t(s)];
                }
            }
            if (tmp.size()) {
                acc.noalias() += A[std::size_t(sp)].adjoint() * tmp;
                any = true;
            }
        }
        if (any) out[std::size_t(b)] = std::move(acc);
    }
    return out;
}

inline Env extend_right(const Env& R, const std::vector<Mat>& A, const MPOSite& w) {
    const Eigen::Index dl = A[0].rows();
    std::vector<std::vector<Mat>> AR(std::size_t(w.wr));
    for (int b = 0; b < w.wr; ++b) {
        if (R[std::size_t(b)].size() == 0) continue;
        for (int s = 0; s < w.d; ++s) AR[std::size_t(b)].push_back(A[std::size_t(s)] * R[std::size_t(b)]);
    }
    Env out(std::size_t(w.wl));
    for (int a = 0; a < w.wl; ++a) {
        Mat acc = Mat::Zero(dl, dl);
        bool any = false;
        for (int sp = 0; sp < w.d; ++sp) {
            Mat tmp;
            for (int b = 0; b < w.wr; ++b) {
                if (!w.has(a, b) || AR[std::size_t(b)].empty()) continue;
                const Mat& op = w.at(a, b);
                for (int s = 0; s < w.d; ++s) {
                    if (op(sp, s) == cplx(0)) continue;
                    if (tmp.size() == 0) tmp = Mat::Zero(dl, AR[std::size_t(b)][0].cols());
                    tmp += op(sp, s) * AR[std::size_t(b)][std::size_t(s)];
                }
            }
            if (tmp.size()) {
                acc.noalias() += tmp * A[std::size_t(sp)].adjoint();
                any = true;
            }
        }
        if (any) out[std::size_t(a)] = std::move(acc);
    }
    return out;
}

// effective one-site Hamiltonian on A (bra/ket environments L[a](bra,ket), R[b](ket,bra))
inline std::vector<Mat> apply_site(const Env& L, const MPOSite& w, const Env& R, const std::vector<Mat>& A) {
    const Eigen::Index dl = A[0].rows(), dr = A[0].cols();
    std::vector<std::vector<Mat>> LA(std::size_t(w.wl));
    for (int a = 0; a < w.wl; ++a) {
        if (L[std::size_t(a)].size() == 0) continue;
        for (int s = 0; s < w.d; ++s) LA[std::size_t(a)].push_back(L[std::size_t(a)] * A[std::size_t(s)]);
    }
    std::vector<Mat> out(std::size_t(w.d), Mat::Zero(dl, dr));
    Mat Y(dl, dr);
    for (int b = 0; b < w.wr; ++b) {
        if (R[std::size_t(b)].size() == 0) continue;
        for (int sp = 0; sp < w.d; ++sp) {
            bool any = false;
            for (int a = 0; a < w.wl; ++a) {
                if (!w.has(a, b) || LA[std::size_t(a)].empty()) continue;
                const Mat& op = w.at(a, b);
                for (int s = 0; s < w.d; ++s) {
                    if (op(sp, s) == cplx(0)) continue;
                    if (!any) Y.setZero();
                    any = true;
                    Y += op(sp, s) * LA[std::size_t(a)][std::size_t(s)];
                }
            }
            if (any) out[std::size_t(sp)].noalias() += Y * R[std::size_t(b)];
        }
    }
    return out;
}

inline Mat apply_bond(const Env& L, const Env& R, const Mat& C) {
    Mat out = Mat::Zero(C.rows(), C.cols());
    for (std::size_t a = 0; a < L.size(); ++a)
        if (L[a].size() && R[a].size()) out.noalias() += L[a] * C * R[a];
    return out;
}

inline double expectation(const MPSState& m, const MPO& w) {
    Env L{Mat::Identity(1, 1)};
    for (int k = 0; k < m.size(); ++k) L = extend_left(L, m.A[std::size_t(k)], w.sites[std::size_t(k)]);
    return L[0](0, 0).real() / std::pow(norm(m), 2);
}

// ---- subspace padding ----------------------------------------------------------

// Grows every bond towards chi with directions generated by the MPO itself, so the
// extra (zero-weight) basis states lie in the symmetry sectors the dynamics can reach.
// The represented state is unchanged.
inline void pad_bonds(MPSState& m, const MPO& w, int chi, int max_sweeps = 0, double tol = 1e-12) {
    if (chi < 1) throw invalid_parameter("bond dimension must be >= 1");
    const int N = m.size();
    if (w.size() != N) throw invalid_parameter("MPO and MPS lengths differ");
    check_charges(m);
    m.chi = chi;
    if (max_sweeps <= 0) max_sweeps = 2 * N;
    canonicalize(m, 0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool grew = false;
        std::vector<int> before;
        for (int k = 0; k < N; ++k) before.push_back(m.bond_right(k));
        Env L{Mat::Identity(1, 1)};
        for (int k = 0; k + 1 < N; ++k) {
            const int d = m.phys(k);
            const SiteRule& rule = m.rules[std::size_t(k)];
            auto f = detail::left_qr(m, k);
            auto& Q = f.Q;
            const Mat& R = f.F;
            m.q[std::size_t(k) + 1] = f.labels;
            const Eigen::Index dl = Q[0].rows(), dr = Q[0].cols();
            const Eigen::Index room = chi - dr;
            auto& labels = m.q[std::size_t(k) + 1];
            Mat Rn = R;
            if (room > 0) {
                // Zero-weight bond states (earlier padding) get a small uniform seed over their
                // allowed entries so the expansion keeps reaching further; only the candidates see it.
                std::vector<Mat> seed = m.A[std::size_t(k)];
                {
                    const auto& ql = m.q[std::size_t(k)];
                    const auto& qr = m.q[std::size_t(k) + 1];
                    for (Eigen::Index j = 0; j < dl; ++j) {
                        double w2 = 0;
                        for (const auto& T : seed) w2 += T.row(j).squaredNorm();
                        if (w2 > 1e-28) continue;
                        const int v = ql[std::size_t(j)];
                        for (int s = 0; s < d; ++s)
                            for (Eigen::Index b = 0; b < Eigen::Index(qr.size()); ++b) {
                                if (rule.restricted()) {
                                    if (qr[std::size_t(b)] == v) seed[std::size_t(s)](j, b) = 1e-6 * rule.allowed_for(v)(s);
                                } else if (qr[std::size_t(b)] == v + rule.dq[std::size_t(s)]) {
                                    seed[std::size_t(s)](j, b) = 1e-6;
                                }
                            }
                    }
                }
                // candidates sum_a,s' L[a] A[s'] W[a][b](s,s') for every b, side by side
                const MPOSite& ws = w.sites[std::size_t(k)];
                std::vector<Mat> P(std::size_t(d), Mat::Zero(dl, 0));
                for (int b = 0; b < ws.wr; ++b) {
                    std::vector<Mat> blk(std::size_t(d), Mat::Zero(dl, dr));
                    bool any = false;
                    for (int a = 0; a < ws.wl; ++a) {
                        if (!ws.has(a, b) || L[std::size_t(a)].size() == 0) continue;
                        for (int sp = 0; sp < d; ++sp)
                            for (int s = 0; s < d; ++s) {
                                const cplx c = ws.at(a, b)(sp, s);
                                if (c == cplx(0)) continue;
                                blk[std::size_t(sp)] += c * (L[std::size_t(a)] * seed[std::size_t(s)]);
                                any = true;
                            }
                    }
                    if (!any) continue;
                    for (int s = 0; s < d; ++s) {
                        Mat t(dl, P[std::size_t(s)].cols() + dr);
                        t << P[std::size_t(s)], blk[std::size_t(s)];
                        P[std::size_t(s)] = std::move(t);
                    }
                }
                // per charge block: directions orthogonal to the kept basis, by weight
                struct Cand {
                    double sv;
                    int label;
                    Vec u;
                };
                std::vector<Cand> cands;
                std::vector<int> all_cols(std::size_t(P[0].cols()));
                for (int j = 0; j < int(all_cols.size()); ++j) all_cols[std::size_t(j)] = j;
                std::vector<int> targets;
                for (int a : m.q[std::size_t(k)])
                    for (int x : rule.restricted() ? std::vector<int>{0} : rule.dq) targets.push_back(a + x);
                for (int v : detail::distinct(targets)) {
                    const auto rows = detail::left_slots(m, k, v);
                    const auto have = detail::indices_with(labels, v);
                    if (rows.size() <= have.size() || all_cols.empty()) continue;
                    Mat Pv = detail::gather_left(P, rule, v, rows, all_cols);
                    const Mat Qv = detail::gather_left(Q, rule, v, rows, have);
                    if (Qv.cols() > 0) Pv -= Qv * (Qv.adjoint() * Pv);
                    if (Pv.norm() <= tol) continue;
                    Eigen::JacobiSVD<Mat> svd(Pv, Eigen::ComputeThinU);
                    const auto& sv = svd.singularValues();
                    const Eigen::Index lim = std::min<Eigen::Index>(sv.size(), Eigen::Index(rows.size() - have.size()));
                    for (Eigen::Index i = 0; i < lim; ++i) cands.push_back({sv(i), v, svd.matrixU().col(i)});
                }
                std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.sv > y.sv; });
                const double top = cands.empty() ? 0.0 : cands[0].sv;
                std::vector<Cand> chosen;
                for (auto& c : cands) {
                    if (Eigen::Index(chosen.size()) >= room || c.sv <= tol * std::max(1.0, top)) break;
                    chosen.push_back(std::move(c));
                }
                if (!chosen.empty()) {
                    const Eigen::Index add = Eigen::Index(chosen.size());
                    for (auto& T : Q) T.conservativeResize(Eigen::NoChange, dr + add);
                    for (auto& T : Q) T.rightCols(add).setZero();
                    std::vector<int> new_labels;
                    for (auto& c : chosen) new_labels.push_back(c.label);
                    std::vector<int> old_labels = labels;
                    labels.insert(labels.end(), new_labels.begin(), new_labels.end());
                    for (int v : detail::distinct(new_labels)) {
                        const auto rows = detail::left_slots(m, k, v);
                        const auto have = detail::indices_with(old_labels, v);
                        std::vector<int> cols;
                        Mat U(Eigen::Index(rows.size()), 0);
                        for (std::size_t i = 0; i < chosen.size(); ++i)
                            if (chosen[i].label == v) {
                                cols.push_back(int(dr) + int(i));
                                U.conservativeResize(Eigen::NoChange, U.cols() + 1);
                                U.rightCols(1) = chosen[i].u;
                            }
                        const Mat Qv = detail::gather_left(Q, rule, v, rows, have);
                        if (Qv.cols() > 0) U -= Qv * (Qv.adjoint() * U);  // round-off
                        U = detail::thin_qr(U).first;
                        detail::scatter_left(Q, rule, v, rows, cols, U);
                    }
                    Rn = Mat::Zero(dr + add, R.cols());
                    Rn.topRows(dr) = R;
                    grew = true;
                }
            }
            m.A[std::size_t(k)] = std::move(Q);
            for (auto& B : m.A[std::size_t(k) + 1]) B = Rn * B;
            L = extend_left(L, m.A[std::size_t(k)], w.sites[std::size_t(k)]);
        }
        m.center = N - 1;
        canonicalize(m, 0);
        std::vector<int> after;
        for (int k = 0; k < N; ++k) after.push_back(m.bond_right(k));
        if (!grew || after == before) break;
    }
}

// ---- one-site TDVP -------------------------------------------------------------

struct TDVPConfig {
    double dt = 0.05;
    double t_total = 1.0;
    int chi = 32;
    double krylov_tol = 1e-12;
    int krylov_dim = 30;
    int order = 2;  // 2: symmetric sweep; 4: triple-jump composition of it

    void check() const {
        if (order != 2 && order != 4) throw invalid_parameter("TDVP order must be 2 or 4");
        if (!(dt > 0)) throw invalid_parameter("TDVP time step must be positive");
        if (!(t_total >= 0)) throw invalid_parameter("TDVP total time must be non-negative");
        if (chi < 1) throw invalid_parameter("bond dimension must be >= 1");
    }
};

// Evolves in place by one symmetric (left-right-left) step of size dt; the centre must be at 0
// and ends at 0.
inline void tdvp_step(MPSState& m, const MPO& w, double dt, const TDVPConfig& cfg) {
    const int N = m.size();
    if (m.center != 0) move_center(m, 0);
    // right environments R[k] for sites > k
    std::vector<Env> Rv(std::size_t(N) + 1), Lv(std::size_t(N) + 1);
    Rv[std::size_t(N)] = Env{Mat::Identity(1, 1)};
    for (int k = N - 1; k >= 1; --k)
        Rv[std::size_t(k)] = extend_right(Rv[std::size_t(k) + 1], m.A[std::size_t(k)], w.sites[std::size_t(k)]);
    Lv[0] = Env{Mat::Identity(1, 1)};
    const double half = 0.5 * dt;

    auto evolve_site = [&](int k, double tau) {
        auto& A = m.A[std::size_t(k)];
        const int d = int(A.size());
        const Eigen::Index dl = A[0].rows(), dr = A[0].cols();
        const Env& L = Lv[std::size_t(k)];
        const Env& R = Rv[std::size_t(k) + 1];
        const MPOSite& ws = w.sites[std::size_t(k)];
        auto ap = [&](const Vec& x, Vec& y) { y = detail::flatten(apply_site(L, ws, R, detail::unflatten(x, d, dl, dr))); };
        A = detail::unflatten(lanczos_expmv(ap, detail::flatten(A), tau, cfg.krylov_dim, cfg.krylov_tol), d, dl, dr);
    };
    auto evolve_bond = [&](const Env& L, const Env& R, const Mat& C, double tau) {
        const Eigen::Index r = C.rows(), c = C.cols();
        auto ap = [&](const Vec& x, Vec& y) {
            const Mat X = Eigen::Map<const Mat>(x.data(), r, c);
            const Mat Y = apply_bond(L, R, X);
            y = Eigen::Map<const Vec>(Y.data(), Y.size());
        };
        const Vec v = lanczos_expmv(ap, Eigen::Map<const Vec>(C.data(), C.size()), tau, cfg.krylov_dim, cfg.krylov_tol);
        return Mat(Eigen::Map<const Mat>(v.data(), r, c));
    };

    // left to right
    for (int k = 0; k < N; ++k) {
        evolve_site(k, half);
        if (k == N - 1) break;
        auto f = detail::left_qr(m, k);
        if (f.labels != m.q[std::size_t(k) + 1]) throw numerical_failure("bond structure changed during TDVP");
        m.A[std::size_t(k)] = std::move(f.Q);
        Lv[std::size_t(k) + 1] = extend_left(Lv[std::size_t(k)], m.A[std::size_t(k)], w.sites[std::size_t(k)]);
        Mat C = evolve_bond(Lv[std::size_t(k) + 1], Rv[std::size_t(k) + 1], f.F, -half);
        detail::project_bond(m.q[std::size_t(k) + 1], C);
        for (auto& B : m.A[std::size_t(k) + 1]) B = C * B;
    }
    // right to left
    for (int k = N - 1; k >= 0; --k) {
        evolve_site(k, half);
        if (k == 0) break;
        auto f = detail::right_qr(m, k);
        if (f.labels != m.q[std::size_t(k)]) throw numerical_failure("bond structure changed during TDVP");
        m.A[std::size_t(k)] = std::move(f.Q);
        Rv[std::size_t(k)] = extend_right(Rv[std::size_t(k) + 1], m.A[std::size_t(k)], w.sites[std::size_t(k)]);
        Mat C = evolve_bond(Lv[std::size_t(k)], Rv[std::size_t(k)], f.F, -half);
        detail::project_bond(m.q[std::size_t(k)], C);
        for (auto& B : m.A[std::size_t(k) - 1]) B = B * C;
    }
    m.center = 0;
    // keep the norm at one; drift beyond 1e-8 signals a failed local integration
    const Mat& c0 = m.A[0][0];
    double n2 = 0;
    for (const auto& As : m.A[0]) n2 += As.squaredNorm();
    (void)c0;
    const double drift = std::abs(std::sqrt(n2) - 1.0);
    if (drift > 1e-8) throw numerical_failure("TDVP norm drift " + std::to_string(drift));
    for (auto& As : m.A[0]) As /= std::sqrt(n2);
}

// Calls obs(t, state) at t = 0, dt, 2 dt, ... up to t_total.
template <class Observer>
void tdvp_evolve(MPSState& m, const MPO& w, const TDVPConfig& cfg, Observer&& obs) {
    cfg.check();
    if (m.rules.empty()) set_trivial_charges(m);
    check_charges(m);
    if (m.max_bond() > cfg.chi) throw invalid_parameter("initial bond dimension exceeds chi");
    if (m.center != 0) move_center(m, 0);
    const long steps = long(std::llround(cfg.t_total / cfg.dt));
    obs(0.0, static_cast<const MPSState&>(m));
    // Yoshida weights; the symmetric step is time reversible so the composition is fourth order
    const double g1 = 1.0 / (2.0 - std::cbrt(2.0)), g2 = 1.0 - 2.0 * g1;
    for (long s = 1; s <= steps; ++s) {
        if (cfg.order == 4) {
            tdvp_step(m, w, g1 * cfg.dt, cfg);
            tdvp_step(m, w, g2 * cfg.dt, cfg);
            tdvp_step(m, w, g1 * cfg.dt, cfg);
        } else {
            tdvp_step(m, w, cfg.dt, cfg);
        }
        obs(double(s) * cfg.dt, static_cast<const MPSState&>(m));
    }
}

inline std::vector<MPSState> tdvp_evolve(MPSState m, const MPO& w, const TDVPConfig& cfg) {
    std::vector<MPSState> out;
    tdvp_evolve(m, w, cfg, [&](double, const MPSState& s) { out.push_back(s); });
    return out;
}

// ---- measurements ----------------------------------------------------------------

// <prod_k O_k> for operators on a set of sites (absent sites carry the identity)
inline cplx expectation_product(const MPSState& m, const std::vector<std::pair<int, Mat>>& ops) {
    std::vector<const Mat*> at(std::size_t(m.size()), nullptr);
    for (const auto& [k, o] : ops) {
        if (k < 0 || k >= m.size()) throw invalid_parameter("site out of range");
        if (o.rows() != m.phys(k)) throw invalid_parameter("operator dimension mismatch");
        at[std::size_t(k)] = &o;
    }
    int lo = m.size(), hi = -1;
    for (const auto& [k, o] : ops) lo = std::min(lo, k), hi = std::max(hi, k);
    if (hi < 0) return norm(m) * norm(m);
    // exploit the canonical form: left of lo and right of hi contract to the identity
    // only when the centre lies inside [lo, hi]; otherwise contract everything
    int a = 0, b = m.size() - 1;
    if (m.center >= lo && m.center <= hi && canonical_error(m) < 1e-8) a = lo, b = hi;
    Mat E = Mat::Identity(m.bond_left(a), m.bond_left(a));
    for (int k = a; k <= b; ++k) {
        const auto& A = m.A[std::size_t(k)];
        Mat n = Mat::Zero(A[0].cols(), A[0].cols());
        const int d = int(A.size());
        if (!at[std::size_t(k)]) {
            for (int s = 0; s < d; ++s) n += A[std::size_t(s)].adjoint() * E * A[std::size_t(s)];
        } else {
            const Mat& O = *at[std::size_t(k)];
            for (int s = 0; s < d; ++s) {
                Mat EA = E * A[std::size_t(s)];
                for (int sp = 0; sp < d; ++sp)
                    if (O(sp, s) != cplx(0)) n += O(sp, s) * (A[std::size_t(sp)].adjoint() * EA);
            }
        }
        E = std::move(n);
    }
    return E.trace();
}

// single-site expectations for every site via a moving centre (O(N D^3))
inline std::vector<double> local_expectations(MPSState m, const std::vector<Mat>& op_per_site) {
    if (int(op_per_site.size()) != m.size()) throw invalid_parameter("one operator per site required");
    move_center(m, 0);
    std::vector<double> out(std::size_t(m.size()), 0.0);
    for (int k = 0; k < m.size(); ++k) {
        const Mat& O = op_per_site[std::size_t(k)];
        if (O.size()) {
            cplx v = 0;
            const auto& A = m.A[std::size_t(k)];
            for (int s = 0; s < m.phys(k); ++s)
                for (int sp = 0; sp < m.phys(k); ++sp)
                    if (O(sp, s) != cplx(0)) v += O(sp, s) * (A[std::size_t(sp)].adjoint() * A[std::size_t(s)]).trace();
            out[std::size_t(k)] = v.real();
        }
        if (k + 1 < m.size()) left_orthonormalize_site(m, k), m.center = k + 1;
    }
    return out;
}

// von Neumann entropy (nats) of the bipartition after site k (0-based)
inline double entropy_cut(MPSState m, int k) {
    if (k < 0 || k + 1 >= m.size()) throw invalid_parameter("cut out of range");
    move_center(m, k);
    Eigen::JacobiSVD<Mat> svd(detail::stack_rows(m.A[std::size_t(k)]));
    Eigen::VectorXd s = svd.singularValues();
    s /= s.norm();
    return entropy_from_singular_values(s);
}

inline std::vector<double> entropy_profile(MPSState m) {
    std::vector<double> out;
    move_center(m, 0);
    for (int k = 0; k + 1 < m.size(); ++k) {
        Eigen::JacobiSVD<Mat> svd(detail::stack_rows(m.A[std::size_t(k)]));
        Eigen::VectorXd s = svd.singularValues();
        s /= s.norm();
        out.push_back(entropy_from_singular_values(s));
        left_orthonormalize_site(m, k);
        m.center = k + 1;
    }
    return out;
}

inline double fidelity(const MPSState& a, const MPSState& b) {
    return std::norm(overlap(a, b)) / (std::pow(norm(a), 2) * std::pow(norm(b), 2));
}

// chain helpers: occupations n_i, link sx_l, Gauss generators G_i
struct ChainMeasure {
    std::vector<double> n, sx, gauss;
};

inline ChainMeasure measure_chain(const MPSState& m, int N) {
    if (m.size() != 2 * N - 1) throw invalid_parameter("MPS does not describe an N-site chain");
    std::vector<Mat> ops(std::size_t(m.size()));
    for (int i = 1; i <= N; ++i) ops[std::size_t(chain_site_factor(i))] = local::number(m.phys(chain_site_factor(i)) - 1);
    for (int l = 1; l < N; ++l) ops[std::size_t(chain_link_factor(l))] = local::pauli('x');
    const auto v = local_expectations(m, ops);
    ChainMeasure r;
    for (int i = 1; i <= N; ++i) r.n.push_back(v[std::size_t(chain_site_factor(i))]);
    for (int l = 1; l < N; ++l) r.sx.push_back(v[std::size_t(chain_link_factor(l))]);
    MPSState c = m;
    for (int i = 1; i <= N; ++i) {
        const int f = chain_site_factor(i);
        std::vector<std::pair<int, Mat>> g{{f, local::parity(m.phys(f) - 1)}};
        if (i > 1) g.emplace_back(chain_link_factor(i - 1), local::pauli('x'));
        if (i < N) g.emplace_back(chain_link_factor(i), local::pauli('x'));
        move_center(c, f);
        r.gauss.push_back(expectation_product(c, g).real());
    }
    return r;
}

// ---- checkpoints ------------------------------------------------------------------

inline constexpr char mps_magic[8] = {'Z', '2', 'F', 'M', 'P', 'S', '\0', '\0'};
inline constexpr std::uint32_t mps_format_version = 1;

inline void save_checkpoint(const MPSState& m, const std::string& path, double time = 0.0) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw invalid_parameter("cannot open checkpoint for writing: " + path);
    auto put = [&](const auto& x) { f.write(reinterpret_cast<const char*>(&x), sizeof(x)); };
    f.write(mps_magic, 8);
    put(mps_format_version);
    put(std::int32_t(m.size()));
    put(std::int32_t(m.chi));
    put(std::int32_t(m.center));
    put(time);
    for (const auto& site : m.A) {
        put(std::int32_t(site.size()));
        put(std::int32_t(site[0].rows()));
        put(std::int32_t(site[0].cols()));
        for (const auto& As : site) f.write(reinterpret_cast<const char*>(As.data()), std::streamsize(sizeof(cplx) * As.size()));
    }
    // charge bookkeeping: bond labels, then per site dq and the two allowed vectors
    MPSState c = m;
    if (c.rules.empty()) set_trivial_charges(c);
    for (const auto& qb : c.q) {
        put(std::int32_t(qb.size()));
        for (int x : qb) put(std::int32_t(x));
    }
    for (const auto& r : c.rules) {
        for (int x : r.dq) put(std::int32_t(x));
        put(std::int32_t(r.restricted()));
        if (r.restricted())
            for (const auto& v : r.allowed) f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(sizeof(cplx) * v.size()));
    }
    if (!f) throw numerical_failure("checkpoint write failed: " + path);
}

inline MPSState load_checkpoint(const std::string& path, double* time = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw invalid_parameter("cannot open checkpoint: " + path);
    auto get = [&](auto& x) {
        f.read(reinterpret_cast<char*>(&x), sizeof(x));
        if (!f) throw invalid_parameter("truncated checkpoint: " + path);
    };
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, mps_magic, 8) != 0) throw invalid_parameter("not an MPS checkpoint: " + path);
    std::uint32_t ver;
    get(ver);
    if (ver != mps_format_version) throw invalid_parameter("unsupported checkpoint version " + std::to_string(ver));
    std::int32_t n, chi, center;
    double t;
    get(n), get(chi), get(center), get(t);
    if (time) *time = t;
    MPSState m;
    m.chi = chi;
    m.center = center;
    for (int k = 0; k < n; ++k) {
        std::int32_t d, dl, dr;
        get(d), get(dl), get(dr);
        if (d < 1 || dl < 1 || dr < 1) throw invalid_parameter("corrupt checkpoint header");
        std::vector<Mat> site(std::size_t(d), Mat(dl, dr));
        for (auto& As : site) {
            f.read(reinterpret_cast<char*>(As.data()), std::streamsize(sizeof(cplx) * As.size()));
            if (!f) throw invalid_parameter("truncated checkpoint: " + path);
        }
        m.A.push_back(std::move(site));
    }
    m.q.resize(std::size_t(n) + 1);
    for (auto& qb : m.q) {
        std::int32_t len;
        get(len);
        if (len < 1 || len > (1 << 24)) throw invalid_parameter("corrupt checkpoint labels");
        qb.resize(std::size_t(len));
        for (auto& x : qb) {
            std::int32_t v;
            get(v);
            x = v;
        }
    }
    m.rules.resize(std::size_t(n));
    for (int k = 0; k < n; ++k) {
        auto& r = m.rules[std::size_t(k)];
        r.dq.resize(std::size_t(m.phys(k)));
        for (auto& x : r.dq) {
            std::int32_t v;
            get(v);
            x = v;
        }
        std::int32_t restricted;
        get(restricted);
        if (restricted)
            for (auto& v : r.allowed) {
                v.resize(m.phys(k));
                f.read(reinterpret_cast<char*>(v.data()), std::streamsize(sizeof(cplx) * v.size()));
                if (!f) throw invalid_parameter("truncated checkpoint: " + path);
            }
    }
    check_charges(m);
    return m;
}

}  // namespace z2forge
