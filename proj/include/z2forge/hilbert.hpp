#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace z2forge {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

// bad input: CLI maps this to exit code 3
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// integrator or solver gave up: exit code 4
struct numerical_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModeSpec {
    int n_max = 1;
    std::string label;
    int dim() const { return n_max + 1; }
};

struct QubitSpec {
    std::string label;
    static constexpr int dim() { return 2; }
};

using Factor = std::variant<ModeSpec, QubitSpec>;

inline Factor mode(int n_max, std::string label = {}) { return ModeSpec{n_max, std::move(label)}; }
inline Factor qubit(std::string label = {}) { return QubitSpec{std::move(label)}; }

class SpaceLayout {
public:
    SpaceLayout() = default;

    explicit SpaceLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
        if (factors_.empty()) throw invalid_parameter("layout needs at least one factor");
        dims_.reserve(factors_.size());
        for (const auto& f : factors_) {
            int d = std::visit([](const auto& x) { return x.dim(); }, f);
            if (std::holds_alternative<ModeSpec>(f) && std::get<ModeSpec>(f).n_max < 1)
                throw invalid_parameter("mode cutoff n_max must be >= 1");
            dims_.push_back(d);
        }
        // last factor varies fastest
        strides_.assign(dims_.size(), 1);
        for (int k = int(dims_.size()) - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * dims_[k + 1];
        dim_ = strides_[0] * dims_[0];
    }

    std::int64_t dim() const { return dim_; }
    int size() const { return int(factors_.size()); }
    int factor_dim(int k) const { return dims_.at(k); }
    std::int64_t stride(int k) const { return strides_.at(k); }
    const Factor& factor(int k) const { return factors_.at(k); }
    bool is_mode(int k) const { return std::holds_alternative<ModeSpec>(factors_.at(k)); }
    bool is_qubit(int k) const { return std::holds_alternative<QubitSpec>(factors_.at(k)); }
    const std::vector<int>& dims() const { return dims_; }

    int digit(std::int64_t index, int k) const { return int((index / strides_[k]) % dims_[k]); }

    std::int64_t index_of(const std::vector<int>& digits) const {
        std::int64_t idx = 0;
        for (std::size_t k = 0; k < digits.size(); ++k) idx += strides_[k] * digits[k];
        return idx;
    }

    bool operator==(const SpaceLayout& o) const { return dims_ == o.dims_; }
    bool operator!=(const SpaceLayout& o) const { return !(*this == o); }

private:
    std::vector<Factor> factors_;
    std::vector<int> dims_;
    std::vector<std::int64_t> strides_;
    std::int64_t dim_ = 0;
};

inline SpaceLayout compose_space(std::vector<Factor> factors) { return SpaceLayout(std::move(factors)); }

// below this dimension operators keep a dense copy and apply through it
inline constexpr std::int64_t dense_threshold = 64;

class LinearOperator {
public:
    LinearOperator() = default;
    LinearOperator(SpaceLayout layout, SpMat m, bool hermitian = false)
        : layout_(std::move(layout)), m_(std::move(m)) {
        if (m_.rows() != layout_.dim() || m_.cols() != layout_.dim())
            throw invalid_parameter("operator dimension does not match layout");
        m_.makeCompressed();
        if (layout_.dim() < dense_threshold) dense_ = Mat(m_);
        if (hermitian) mark_hermitian();
    }

    static LinearOperator zero(const SpaceLayout& l) { return {l, SpMat(l.dim(), l.dim()), true}; }

    static LinearOperator identity(const SpaceLayout& l) {
        SpMat m(l.dim(), l.dim());
        m.setIdentity();
        return {l, m, true};
    }

    const SpaceLayout& layout() const { return layout_; }
    const SpMat& sparse() const { return m_; }
    Mat dense() const { return dense_.size() ? dense_ : Mat(m_); }
    std::int64_t dim() const { return layout_.dim(); }
    bool hermitian() const { return hermitian_; }

    // throws when the claim fails at 1e-12
    void mark_hermitian() {
        if (hermiticity_defect() > 1e-12) throw invalid_parameter("operator flagged Hermitian is not");
        hermitian_ = true;
    }

    double hermiticity_defect() const {
        SpMat d = m_ - SpMat(m_.adjoint());
        double r = 0;
        for (int k = 0; k < d.outerSize(); ++k)
            for (SpMat::InnerIterator it(d, k); it; ++it) r = std::max(r, std::abs(it.value()));
        return r;
    }

    Vec apply(const Vec& v) const {
        if (dense_.size()) return dense_ * v;
        return m_ * v;
    }

    void apply(const Vec& v, Vec& out) const {
        if (dense_.size())
            out.noalias() = dense_ * v;
        else
            out.noalias() = m_ * v;
    }

    LinearOperator adjoint() const { return {layout_, SpMat(m_.adjoint()), hermitian_}; }

    friend LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) {
        check(a, b);
        LinearOperator r(a.layout_, SpMat(a.m_ + b.m_));
        r.hermitian_ = a.hermitian_ && b.hermitian_;
        return r;
    }
    friend LinearOperator operator-(const LinearOperator& a, const LinearOperator& b) {
        check(a, b);
        LinearOperator r(a.layout_, SpMat(a.m_ - b.m_));
        r.hermitian_ = a.hermitian_ && b.hermitian_;
        return r;
    }
    friend LinearOperator operator*(const LinearOperator& a, const LinearOperator& b) {
        check(a, b);
        return {a.layout_, SpMat(a.m_ * b.m_)};
    }
    friend LinearOperator operator*(cplx s, const LinearOperator& a) {
        LinearOperator r(a.layout_, SpMat(s * a.m_));
        r.hermitian_ = a.hermitian_ && std::abs(s.imag()) == 0.0;
        return r;
    }
    friend LinearOperator operator*(double s, const LinearOperator& a) { return cplx(s, 0.0) * a; }
    LinearOperator& operator+=(const LinearOperator& b) { return *this = *this + b; }

    // largest entry magnitude; used as the commutator-norm proxy in checks
    double max_abs() const {
        double r = 0;
        for (int k = 0; k < m_.outerSize(); ++k)
            for (SpMat::InnerIterator it(m_, k); it; ++it) r = std::max(r, std::abs(it.value()));
        return r;
    }

    cplx element(std::int64_t row, std::int64_t col) const { return m_.coeff(row, col); }

private:
    static void check(const LinearOperator& a, const LinearOperator& b) {
        if (a.layout_ != b.layout_) throw invalid_parameter("layout mismatch between operators");
    }

    SpaceLayout layout_;
    SpMat m_;
    Mat dense_;
    bool hermitian_ = false;
};

inline LinearOperator commutator(const LinearOperator& a, const LinearOperator& b) { return a * b - b * a; }

// place a local matrix on factor k with identities elsewhere
inline LinearOperator embed(const SpaceLayout& layout, int k, const Mat& local, bool hermitian = false) {
    if (k < 0 || k >= layout.size()) throw invalid_parameter("factor index out of range");
    if (local.rows() != layout.factor_dim(k)) throw invalid_parameter("local operator has wrong dimension");
    const std::int64_t n = layout.dim(), s = layout.stride(k);
    const int d = layout.factor_dim(k);
    std::vector<Eigen::Triplet<cplx>> trip;
    std::int64_t nnz_local = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (local(i, j) != cplx(0)) ++nnz_local;
    trip.reserve(std::size_t(n / d * nnz_local));
    for (std::int64_t col = 0; col < n; ++col) {
        int j = layout.digit(col, k);
        std::int64_t base = col - j * s;
        for (int i = 0; i < d; ++i)
            if (local(i, j) != cplx(0)) trip.emplace_back(base + i * s, col, local(i, j));
    }
    SpMat m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return {layout, std::move(m), hermitian};
}

namespace local {

inline Mat annihilation(int n_max) {
    Mat a = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

inline Mat number(int n_max) {
    Mat m = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) m(n, n) = double(n);
    return m;
}

inline Mat parity(int n_max) {
    Mat m = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) m(n, n) = (n % 2) ? -1.0 : 1.0;
    return m;
}

// basis (down, up): sigma_z = diag(-1, +1)
inline Mat pauli(char axis) {
    Mat s(2, 2);
    switch (axis) {
        case 'x': s << 0, 1, 1, 0; break;
        case 'y': s << 0, cplx(0, 1), cplx(0, -1), 0; break;
        case 'z': s << -1, 0, 0, 1; break;
        default: throw invalid_parameter(std::string("unknown Pauli axis ") + axis);
    }
    return s;
}

// |up><down|
inline Mat sigma_plus() {
    Mat s = Mat::Zero(2, 2);
    s(1, 0) = 1;
    return s;
}

}  // namespace local

inline const ModeSpec& require_mode(const SpaceLayout& l, int k) {
    if (k < 0 || k >= l.size()) throw invalid_parameter("factor index out of range");
    if (!l.is_mode(k)) throw invalid_parameter("factor " + std::to_string(k) + " is a qubit, not a mode");
    return std::get<ModeSpec>(l.factor(k));
}

inline void require_qubit(const SpaceLayout& l, int k) {
    if (k < 0 || k >= l.size()) throw invalid_parameter("factor index out of range");
    if (!l.is_qubit(k)) throw invalid_parameter("factor " + std::to_string(k) + " is a mode, not a qubit");
}

inline LinearOperator annihilation(const SpaceLayout& l, int k) {
    return embed(l, k, local::annihilation(require_mode(l, k).n_max));
}

inline LinearOperator creation(const SpaceLayout& l, int k) {
    return embed(l, k, local::annihilation(require_mode(l, k).n_max).adjoint());
}

inline LinearOperator number(const SpaceLayout& l, int k) {
    return embed(l, k, local::number(require_mode(l, k).n_max), true);
}

inline LinearOperator parity(const SpaceLayout& l, int k) {
    return embed(l, k, local::parity(require_mode(l, k).n_max), true);
}

inline LinearOperator pauli(const SpaceLayout& l, int k, char axis) {
    require_qubit(l, k);
    return embed(l, k, local::pauli(axis), true);
}

class StateVector {
public:
    StateVector() = default;
    StateVector(SpaceLayout layout, Vec amp) : layout_(std::move(layout)), amp_(std::move(amp)) {
        if (amp_.size() != layout_.dim()) throw invalid_parameter("amplitude vector length does not match layout");
    }

    const SpaceLayout& layout() const { return layout_; }
    const Vec& amplitudes() const { return amp_; }
    Vec& amplitudes() { return amp_; }
    double norm() const { return amp_.norm(); }
    void normalize() { amp_.normalize(); }

private:
    SpaceLayout layout_;
    Vec amp_;
};

enum class QubitKet { down, up, plus, minus };

// per-factor ket: Fock index for modes, QubitKet for qubits
using LocalKet = std::variant<int, QubitKet>;

inline Vec local_ket(const SpaceLayout& l, int k, const LocalKet& ket) {
    Vec v = Vec::Zero(l.factor_dim(k));
    if (l.is_mode(k)) {
        if (!std::holds_alternative<int>(ket)) throw invalid_parameter("mode factor needs a Fock index");
        int n = std::get<int>(ket);
        if (n < 0 || n > std::get<ModeSpec>(l.factor(k)).n_max)
            throw invalid_parameter("occupation " + std::to_string(n) + " exceeds cutoff");
        v(n) = 1;
    } else {
        if (!std::holds_alternative<QubitKet>(ket)) throw invalid_parameter("qubit factor needs a qubit ket");
        const double r = 1 / std::sqrt(2.0);
        switch (std::get<QubitKet>(ket)) {
            case QubitKet::down: v(0) = 1; break;
            case QubitKet::up: v(1) = 1; break;
            case QubitKet::plus: v << r, r; break;
            case QubitKet::minus: v << -r, r; break;  // (|up> - |down>)/sqrt2
        }
    }
    return v;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline Vec kron(const Vec& a, const Vec& b) {
    Vec r(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) r.segment(i * b.size(), b.size()) = a(i) * b;
    return r;
}

inline StateVector product_state(const SpaceLayout& l, const std::vector<LocalKet>& kets) {
    if (int(kets.size()) != l.size()) throw invalid_parameter("one ket per factor required");
    Vec v = local_ket(l, 0, kets[0]);
    for (int k = 1; k < l.size(); ++k) v = kron(v, local_ket(l, k, kets[k]));
    v.normalize();
    return {l, std::move(v)};
}

inline cplx expectation(const StateVector& psi, const LinearOperator& op) {
    if (psi.layout() != op.layout()) throw invalid_parameter("layout mismatch in expectation");
    return psi.amplitudes().dot(op.apply(psi.amplitudes()));
}

inline double fidelity(const StateVector& psi, const StateVector& phi) {
    if (psi.layout() != phi.layout()) throw invalid_parameter("layout mismatch in fidelity");
    return std::norm(phi.amplitudes().dot(psi.amplitudes()));
}

// von Neumann entropy (nats) from Schmidt coefficients
inline double entropy_from_singular_values(const Eigen::VectorXd& s) {
    double e = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        double p = s(i) * s(i);
        if (p > 1e-300) e -= p * std::log(p);
    }
    return e;
}

inline double entanglement_entropy(const StateVector& psi, int left_block) {
    const auto& l = psi.layout();
    if (left_block <= 0 || left_block >= l.size()) throw invalid_parameter("bipartition must be nontrivial");
    const std::int64_t cols = l.stride(left_block - 1);
    const std::int64_t rows = l.dim() / cols;
    // row-major reshape: left factors index rows
    Mat m = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        psi.amplitudes().data(), rows, cols);
    // squared singular values from the smaller Gram matrix (robust for tiny Schmidt weights)
    const Mat g = rows <= cols ? Mat(m * m.adjoint()) : Mat(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    Eigen::VectorXd sv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return entropy_from_singular_values(sv);
}

// Sum of products of local operators. Builders produce these so large chains can be
// compiled only on the subspace reachable from an initial state.
struct LocalOp {
    int factor;
    Mat m;
};

struct Term {
    cplx coef;
    std::vector<LocalOp> ops;
};

class OperatorSum {
public:
    OperatorSum() = default;
    explicit OperatorSum(SpaceLayout layout) : layout_(std::move(layout)) {}

    const SpaceLayout& layout() const { return layout_; }
    const std::vector<Term>& terms() const { return terms_; }

    OperatorSum& add(cplx coef, std::vector<LocalOp> ops) {
        if (coef == cplx(0)) return *this;
        for (const auto& o : ops) {
            if (o.factor < 0 || o.factor >= layout_.size()) throw invalid_parameter("term factor out of range");
            if (o.m.rows() != layout_.factor_dim(o.factor)) throw invalid_parameter("term local dimension mismatch");
        }
        terms_.push_back({coef, std::move(ops)});
        return *this;
    }

    // column `col` of the operator as (row, value) pairs, duplicates not merged
    template <class Sink>
    void column(std::int64_t col, Sink&& sink) const {
        for (const auto& t : terms_) {
            std::int64_t row = col;
            cplx amp = t.coef;
            bool alive = true;
            // single-branch walk: every local matrix used here has at most one
            // nonzero per column; general matrices go through the branching path
            for (auto it = t.ops.rbegin(); it != t.ops.rend() && alive; ++it) {
                const int k = it->factor;
                const int j = layout_.digit(row, k);
                int hit = -1;
                for (int i = 0; i < it->m.rows(); ++i)
                    if (it->m(i, j) != cplx(0)) {
                        if (hit >= 0) { hit = -2; break; }
                        hit = i;
                    }
                if (hit == -1) { alive = false; break; }
                if (hit == -2) { branch(t, col, sink); alive = false; amp = 0; break; }
                amp *= it->m(hit, j);
                row += (std::int64_t(hit) - j) * layout_.stride(k);
            }
            if (alive && amp != cplx(0)) sink(row, amp);
        }
    }

    LinearOperator to_operator(bool hermitian = false) const {
        const std::int64_t n = layout_.dim();
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(std::size_t(n) * std::max<std::size_t>(1, terms_.size() / 2));
        for (std::int64_t c = 0; c < n; ++c)
            column(c, [&](std::int64_t r, cplx v) { trip.emplace_back(r, c, v); });
        SpMat m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        m.prune(cplx(0));
        return {layout_, std::move(m), hermitian};
    }

private:
    template <class Sink>
    void branch(const Term& t, std::int64_t col, Sink&& sink) const {
        std::vector<std::pair<std::int64_t, cplx>> cur{{col, t.coef}}, next;
        for (auto it = t.ops.rbegin(); it != t.ops.rend(); ++it) {
            next.clear();
            const int k = it->factor;
            for (auto [row, amp] : cur) {
                const int j = layout_.digit(row, k);
                for (int i = 0; i < it->m.rows(); ++i)
                    if (it->m(i, j) != cplx(0))
                        next.emplace_back(row + (std::int64_t(i) - j) * layout_.stride(k), amp * it->m(i, j));
            }
            std::swap(cur, next);
        }
        for (auto [row, amp] : cur) sink(row, amp);
    }

    SpaceLayout layout_;
    std::vector<Term> terms_;
};

// Basis states connected to a seed support by repeated operator action.
struct Subspace {
    std::vector<std::int64_t> basis;  // sorted full-space indices

    std::int64_t size() const { return std::int64_t(basis.size()); }

    std::int64_t position(std::int64_t full) const {
        auto it = std::lower_bound(basis.begin(), basis.end(), full);
        return (it != basis.end() && *it == full) ? std::int64_t(it - basis.begin()) : -1;
    }

    Vec restrict(const Vec& full) const {
        Vec r(size());
        for (std::int64_t i = 0; i < size(); ++i) r(i) = full(basis[i]);
        return r;
    }

    Vec lift(const Vec& sub, std::int64_t full_dim) const {
        Vec r = Vec::Zero(full_dim);
        for (std::int64_t i = 0; i < size(); ++i) r(basis[i]) = sub(i);
        return r;
    }
};

inline Subspace reachable_subspace(const OperatorSum& h, const Vec& seed, double tol = 0.0) {
    std::vector<std::int64_t> frontier;
    std::vector<char> seen(std::size_t(h.layout().dim()), 0);
    for (Eigen::Index i = 0; i < seed.size(); ++i)
        if (std::abs(seed(i)) > tol) {
            seen[i] = 1;
            frontier.push_back(i);
        }
    std::vector<std::int64_t> all = frontier;
    while (!frontier.empty()) {
        std::vector<std::int64_t> next;
        for (auto c : frontier)
            h.column(c, [&](std::int64_t r, cplx) {
                if (!seen[r]) {
                    seen[r] = 1;
                    next.push_back(r);
                }
            });
        all.insert(all.end(), next.begin(), next.end());
        frontier.swap(next);
    }
    std::sort(all.begin(), all.end());
    return {std::move(all)};
}

inline SpMat compile_on(const OperatorSum& h, const Subspace& s) {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (std::int64_t c = 0; c < s.size(); ++c)
        h.column(s.basis[c], [&](std::int64_t r, cplx v) {
            std::int64_t p = s.position(r);
            if (p < 0) throw invalid_parameter("subspace is not closed under the operator");
            trip.emplace_back(p, c, v);
        });
    SpMat m(s.size(), s.size());
    m.setFromTriplets(trip.begin(), trip.end());
    m.prune(cplx(0));
    return m;
}

}  // namespace z2forge
