#pragma once

// Scenario runner behind the z2forge tool. Kept header-only so tests can drive it directly.

#include "z2forge.hpp"

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace z2forge::cli {

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode : int { ok = 0, usage = 1, unknown_scenario_code = 2, invalid_code = 3, numerical_code = 4 };

struct unknown_scenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- parameters -------------------------------------------------------------

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& key, std::string v) {
    v = trim(v);
    if (!v.empty() && v[0] == '+') v.erase(0, 1);
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
        throw invalid_parameter("parameter " + key + ": '" + v + "' is not a number");
    return x;
}

class Params {
public:
    std::map<std::string, std::string> values;

    bool has(const std::string& k) const { return values.count(k) > 0; }

    const std::string& str(const std::string& k) const {
        auto it = values.find(k);
        if (it == values.end()) throw invalid_parameter("missing parameter " + k);
        return it->second;
    }
    double num(const std::string& k) const { return parse_number(k, str(k)); }
    int integer(const std::string& k) const {
        const double v = num(k);
        if (v != std::floor(v) || std::abs(v) > 1e9) throw invalid_parameter("parameter " + k + " must be an integer");
        return int(v);
    }
    bool flag(const std::string& k) const {
        const std::string v = str(k);
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw invalid_parameter("parameter " + k + " must be a boolean");
    }
};

// "a,b,c" or "from:to:step" (inclusive), sorted ascending without duplicates
inline std::vector<double> parse_values(const std::string& spec) {
    std::vector<double> v;
    const std::string s = trim(spec);
    if (s.find(':') != std::string::npos) {
        std::vector<double> f;
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ':')) f.push_back(parse_number("sweep.values", part));
        if (f.size() != 3 || !(f[2] > 0) || f[1] < f[0]) throw invalid_parameter("sweep range must be from:to:step");
        const long n = long(std::floor((f[1] - f[0]) / f[2] + 1e-9));
        if (n > 100000) throw invalid_parameter("sweep range too long");
        for (long k = 0; k <= n; ++k) v.push_back(f[0] + double(k) * f[2]);
    } else {
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (trim(part).empty()) continue;
            v.push_back(parse_number("sweep.values", part));
        }
    }
    if (v.empty()) throw invalid_parameter("sweep values are empty");
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// ---- result tables ------------------------------------------------------------

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> notes;  // scalar summaries

    explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}

    void add(std::vector<double> r) {
        if (r.size() != columns.size()) throw std::logic_error("row width differs from the column count");
        rows.push_back(std::move(r));
    }
    void note(const std::string& k, double v) { notes.emplace_back(k, v); }

    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == name) return c;
        throw invalid_parameter("no column named " + name);
    }
    double note_value(const std::string& k) const {
        for (auto& [n, v] : notes)
            if (n == k) return v;
        throw invalid_parameter("no note named " + k);
    }
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---- scenario catalog -----------------------------------------------------------

struct RunOptions {
    int workers = 0;  // 0: hardware concurrency
    bool full_scale = false;
    std::ostream* progress = nullptr;
};

struct Scenario {
    std::string name;
    std::string figure;
    std::string summary;
    std::string time_unit;  // "1/t" for ideal models, "s" for hardware
    double budget_s = 60;
    std::map<std::string, std::string> defaults;
    std::map<std::string, std::string> full_scale;  // applied over defaults with --full-scale
    std::function<Table(const Params&)> run;
    std::function<void(const Params&, std::vector<std::string>&)> check;  // regime warnings
};

namespace detail {

inline TrapPreset preset_named(const std::string& s) {
    if (s == "raman") return raman_preset();
    if (s == "quadrupole") return quadrupole_preset();
    if (s == "quadrupole_ls") return quadrupole_ls_preset();
    throw invalid_parameter("unknown preset " + s + " (raman, quadrupole, quadrupole_ls)");
}

inline Convention convention_named(const std::string& s) {
    if (s == "z") return Convention::z_cond;
    if (s == "x") return Convention::x_cond;
    throw invalid_parameter("convention must be z or x");
}

inline int positive(const Params& P, const std::string& k, int lo = 1) {
    const int v = P.integer(k);
    if (v < lo) throw invalid_parameter(k + " must be >= " + std::to_string(lo));
    return v;
}

inline double hw_step(const Params& P, std::initializer_list<double> rates) {
    const double dt = P.num("dt_ns") * 1e-9;
    if (dt < 0) throw invalid_parameter("dt_ns must be >= 0");
    return dt > 0 ? dt : default_step(rates);
}

inline std::vector<double> time_grid(const Params& P) {
    const double te = P.num("t_end");
    const int n = positive(P, "points", 2);
    if (!(te > 0)) throw invalid_parameter("t_end must be positive");
    return linspace(0.0, te, n);
}

// ---- ideal link --------------------------------------------------------------

inline Table link_rabi(const Params& P) {
    const int nm = positive(P, "n_max");
    const LinkParams lp{cplx(P.num("t"), 0.0), P.num("h"), convention_named(P.str("convention"))};
    const SpaceLayout l = link_layout(nm);
    const LinearOperator H = build_link_hamiltonian(lp, l);
    const LinkProbe probe(l, lp.convention);
    const auto psi0 = make_state(StateKind::link_L, l, {1, 1, lp.convention}).psi;
    const LinkOracleParams op{std::abs(lp.t_link), lp.h};
    Table T({"time", "n1", "n2", "sx", "gauss", "n2_exact", "sx_exact"});
    evolve_static(H, psi0, time_grid(P), [&](double t, const StateVector& s) {
        const auto ex = rabi_link(t, op);
        T.add({t, expectation(s, probe.n1).real(), expectation(s, probe.n2).real(), expectation(s, probe.sx).real(),
               expectation(s, probe.g_avg).real(), ex.n2, ex.sx});
    });
    return T;
}

inline Table link_noon(const Params& P) {
    const int nm = positive(P, "n_max", 2);
    const LinkParams lp{cplx(P.num("t"), 0.0), P.num("h"), convention_named(P.str("convention"))};
    const SpaceLayout l = link_layout(nm);
    const LinearOperator H = build_link_hamiltonian(lp, l);
    const LinkProbe probe(l, lp.convention);
    const StateArgs a{1, 1, lp.convention};
    const auto psi0 = make_state(StateKind::link_C, l, a).psi;
    const auto noon = make_state(StateKind::noon_target, l, a).psi;
    const LinkOracleParams op{std::abs(lp.t_link), lp.h};
    Table T({"time", "n1", "n2", "sx", "gauss", "sx_exact", "noon_fidelity"});
    evolve_static(H, psi0, time_grid(P), [&](double t, const StateVector& s) {
        T.add({t, expectation(s, probe.n1).real(), expectation(s, probe.n2).real(), expectation(s, probe.sx).real(),
               expectation(s, probe.g_avg).real(), lambda_two_boson(t, op), fidelity(s, noon)});
    });
    if (op.omega0_tilde() > 0) {
        const double tn = noon_fidelity_times(op);
        double f = 0;
        evolve_static(H, psi0, {tn}, [&](double, const StateVector& s) { f = fidelity(s, noon); });
        T.note("noon_time", tn);
        T.note("noon_fidelity_at_time", f);
    }
    return T;
}

// ---- hardware link ----------------------------------------------------------------

inline Table scan_table(const ScanResult& r) {
    Table T({"fwhm_s", "fidelity", "n1", "n2", "sx", "gauss"});
    for (std::size_t k = 0; k < r.time.size(); ++k)
        T.add({r.time[k], r.fidelity[k], r.n1[k], r.n2[k], r.sx[k], r.gauge[k]});
    T.note("dt_ex_s", r.ex.dt_ex);
    T.note("rate_hz", r.rate_hz());
    T.note("infidelity", r.infidelity());
    T.note("gauge_max", r.gauge_max);
    T.note("gauge_at_ex", r.gauge_at_ex);
    T.note("contrast", r.contrast());
    return T;
}

struct LSSetup {
    TrapPreset p;
    double omega12, delta, t_link;
};

inline LSSetup ls_setup(const Params& P) {
    LSSetup s{preset_named(P.str("preset")), 0, 0, 0};
    s.delta = s.p.omega_x - s.p.omega_z;
    if (P.has("omega_mhz")) {
        // optical-qubit variant: both beams at Rabi frequency Omega, detuned by Delta
        if (!(s.p.detuning > 0)) throw invalid_parameter("omega_mhz needs a preset with a single-photon detuning");
        const double om = two_pi * P.num("omega_mhz") * 1e6;
        s.omega12 = om * om / (2.0 * s.p.detuning);
    } else {
        s.omega12 = two_pi * P.num("omega12_mhz") * 1e6;
    }
    s.t_link = effective_link_params(Scheme::LS, s.p, {s.omega12}).t_link.real();
    return s;
}

inline ScanResult ls_scan(const Params& P, double h_over_t) {
    const LSSetup s = ls_setup(P);
    if (!(s.t_link > 0)) throw invalid_parameter("light-shift scan needs a nonzero coupling");
    LSDrive d(s.p, positive(P, "n_max"), s.omega12, s.delta);
    d.h = h_over_t * s.t_link;
    d.dE_ac = two_pi * P.num("de_ac_khz") * 1e3;
    const double rise = P.num("rise_us") * 1e-6;
    const auto grid = fwhm_grid(rise, P.num("span") * pi / (2 * s.t_link), positive(P, "points", 2));
    return single_pulse_scan(d, Convention::z_cond, rise, grid,
                             hw_step(P, {s.p.omega_x + s.p.omega_z + s.delta, s.omega12}));
}

inline ScanResult ms_scan(const Params& P, double h_over_t) {
    const TrapPreset p = preset_named(P.str("preset"));
    const double om = two_pi * P.num("omega_mhz") * 1e6, delta = p.omega_x - p.omega_z;
    const double tl = effective_link_params(Scheme::MS, p, {om}).t_link.real();
    if (!(tl > 0)) throw invalid_parameter("bichromatic scan needs a nonzero Rabi frequency");
    MSDrive d(p, positive(P, "n_max"), om, delta, 2.0 * h_over_t * tl);
    const double rise = P.num("rise_us") * 1e-6;
    const auto grid = fwhm_grid(rise, P.num("span") * pi / (2 * tl), positive(P, "points", 2));
    return single_pulse_scan(d, Convention::x_cond, rise, grid, hw_step(P, {p.omega_x + p.omega_z + delta, om}));
}

struct SDFSetup {
    TrapPreset p;
    double omega, delta, t_formula;
    int pulses;
};

inline SDFSetup sdf_setup(const Params& P) {
    SDFSetup s{preset_named(P.str("preset")), two_pi * P.num("omega_mhz") * 1e6, two_pi * P.num("delta_khz") * 1e3, 0, 0};
    if (!(s.delta > 0) || !(s.omega > 0)) throw invalid_parameter("force scheme needs positive omega and delta");
    s.t_formula = std::abs(effective_link_params(Scheme::SDF, s.p, {s.omega, s.delta}).t_link);
    s.pulses = P.integer("n_pulses");
    if (s.pulses <= 0) s.pulses = int(std::ceil(P.num("span") * pi / (2 * s.t_formula) / (two_pi / s.delta)));
    return s;
}

inline ScanResult sdf_train(const Params& P, double h_field) {
    const SDFSetup s = sdf_setup(P);
    SDFDrive d(s.p, positive(P, "n_max"), s.omega, s.delta, P.flag("carriers"));
    return sdf_pulse_train(d, P.num("rise_us") * 1e-6, s.pulses,
                           hw_step(P, {s.p.omega_x + s.delta, s.p.omega_z + s.delta, s.omega}), h_field, 1,
                           two_pi * P.num("carrier_rabi_khz") * 1e3);
}

// Trotter error h t (2pi/delta)^2 in cycles, with t the measured rate
inline double sdf_trotter_error(double rate_hz, double h_over_t, double delta) {
    const double t = two_pi * rate_hz;
    return make_trotter_schedule(1, delta, h_over_t * t, t, 0.0).trotter_error;
}

inline Table ls_full(const Params& P) {
    const ScanResult r = ls_scan(P, P.num("h_over_t"));
    Table T = scan_table(r);
    T.note("t_link_hz", ls_setup(P).t_link / two_pi);
    return T;
}

inline Table ls_sweep_point(const Params& P) {
    const ScanResult r = ls_scan(P, P.num("h_over_t"));
    Table T({"dt_ex_s", "rate_hz", "infidelity", "gauge_max", "rate_linear_hz"});
    T.add({r.ex.dt_ex, r.rate_hz(), r.infidelity(), r.gauge_max, ls_setup(P).t_link / two_pi});
    return T;
}

inline Table ms_sweep_point(const Params& P) {
    const ScanResult r = ms_scan(P, P.num("h_over_t"));
    const TrapPreset p = preset_named(P.str("preset"));
    const double tl = effective_link_params(Scheme::MS, p, {two_pi * P.num("omega_mhz") * 1e6}).t_link.real();
    Table T({"dt_ex_s", "rate_hz", "infidelity", "gauge_max", "rate_linear_hz"});
    T.add({r.ex.dt_ex, r.rate_hz(), r.infidelity(), r.gauge_max, tl / two_pi});
    return T;
}

inline Table field_point(const ScanResult& r, double ht) {
    Table T({"contrast", "contrast_exact", "gauge_max"});
    T.add({r.contrast(), 1.0 / (1.0 + ht * ht), r.gauge_max});
    return T;
}

inline Table ls_field_point(const Params& P) { return field_point(ls_scan(P, P.num("h_over_t")), P.num("h_over_t")); }
inline Table ms_field_point(const Params& P) { return field_point(ms_scan(P, P.num("h_over_t")), P.num("h_over_t")); }

inline Table sdf_trotter(const Params& P) {
    const double ht = P.num("h_over_t");
    double t_ref = 0;
    ScanResult r;
    if (ht == 0.0) {
        r = sdf_train(P, 0.0);
        t_ref = two_pi * r.rate_hz();
    } else {
        // the field is scaled by the tunneling actually realised, measured without field
        t_ref = two_pi * sdf_train(P, 0.0).rate_hz();
        r = sdf_train(P, ht * t_ref);
    }
    Table T = scan_table(r);
    T.columns[0] = "time_s";
    const SDFSetup s = sdf_setup(P);
    T.note("rate_formula_hz", s.t_formula / two_pi);
    T.note("n_pulses", s.pulses);
    T.note("trotter_error", sdf_trotter_error(t_ref / two_pi, ht, s.delta));
    return T;
}

inline Table sdf_sweep_point(const Params& P) {
    const ScanResult r = sdf_train(P, 0.0);
    const SDFSetup s = sdf_setup(P);
    Table T({"dt_ex_s", "rate_hz", "infidelity", "gauge_at_ex", "gauge_max", "rate_formula_hz"});
    T.add({r.ex.dt_ex, r.rate_hz(), r.infidelity(), r.gauge_at_ex, r.gauge_max, s.t_formula / two_pi});
    return T;
}

inline Table sdf_field_point(const Params& P) {
    const double ht = P.num("h_over_t");
    const double rate0 = sdf_train(P, 0.0).rate_hz();
    const ScanResult r = ht == 0.0 ? sdf_train(P, 0.0) : sdf_train(P, ht * two_pi * rate0);
    Table T({"contrast", "contrast_exact", "gauge_max", "trotter_error"});
    T.add({r.contrast(), 1.0 / (1.0 + ht * ht), r.gauge_max, sdf_trotter_error(rate0, ht, sdf_setup(P).delta)});
    return T;
}

inline Table spectator_point(const Params& P) {
    const TrapPreset p = preset_named(P.str("preset"));
    const double om = two_pi * P.num("omega_mhz") * 1e6;
    const double eta = std::max(p.eta_x, p.eta_z);
    const double eps = P.num("eps");
    const double g = 0.5 * om * eta * eta;
    const double D = spectator_min_detuning(om, eta, eps);
    Table T({"coupling_khz", "min_detuning_khz", "detuning_over_coupling"});
    T.add({g / two_pi * 1e-3, D / two_pi * 1e-3, g > 0 ? D / g : 0.0});
    return T;
}

// ---- plaquette and ladder ------------------------------------------------------------

inline Table plaquette_bell(const Params& P) {
    const int nm = positive(P, "n_max");
    const double t = P.num("t");
    const PlaquetteParams pp{cplx(t, 0), cplx(t, 0), P.num("h"), P.num("delta1"), P.num("delta2")};
    const SpaceLayout l = plaquette_layout(nm);
    const LinearOperator H = build_plaquette_hamiltonian(pp, l);
    const auto psi0 = make_state(StateKind::plaquette_L1, l).psi;
    const auto bell = make_state(StateKind::bell_target, l).psi;
    const auto L1 = psi0, L2 = make_state(StateKind::plaquette_L2, l).psi;
    auto [g1, g2] = gauss_generators_plaquette(l);
    const LinearOperator G = 0.5 * (g1 + g2);
    Table T({"time", "bell_fidelity", "p_L1", "p_L2", "gauss"});
    double best = -1, best_t = 0;
    evolve_static(H, psi0, time_grid(P), [&](double tt, const StateVector& s) {
        const double f = fidelity(s, bell);
        if (f > best) best = f, best_t = tt;
        T.add({tt, f, fidelity(s, L1), fidelity(s, L2), expectation(s, G).real()});
    });
    const double tb = plaquette_bell_time(t, pp.delta2);
    double fb = 0;
    evolve_static(H, psi0, {std::abs(tb)}, [&](double, const StateVector& s) { fb = fidelity(s, bell); });
    T.note("bell_time", std::abs(tb));
    T.note("bell_fidelity_at_time", fb);
    T.note("best_fidelity", best);
    T.note("best_time", best_t);
    return T;
}

inline Table ladder_interference(const Params& P) {
    const int N = positive(P, "N", 2);
    auto lp = PeierlsLadderParams::with_flux(N, P.num("flux_pi") * pi, P.num("J"), P.num("omega_d"));
    lp.nearest_neighbor_only = P.flag("nearest_neighbor_only");
    lp.n_max = positive(P, "n_max");
    const SpaceLayout l = ladder_layout(N, lp.n_max);
    const LinearOperator H = build_peierls_ladder(lp, l);
    std::vector<LocalKet> k(std::size_t(2 * N), LocalKet(0));
    k[0] = LocalKet(1);
    const StateVector psi0 = product_state(l, k);
    std::vector<std::string> cols{"time"};
    std::vector<LinearOperator> ns;
    for (int i = 1; i <= N; ++i)
        for (int leg = 0; leg < 2; ++leg) {
            cols.push_back(std::string(leg ? "n_y" : "n_x") + std::to_string(i));
            ns.push_back(number(l, 2 * (i - 1) + leg));
        }
    Table T(cols);
    double opp = 0;
    evolve_static(H, psi0, time_grid(P), [&](double t, const StateVector& s) {
        std::vector<double> r{t};
        for (auto& n : ns) r.push_back(expectation(s, n).real());
        opp = std::max(opp, r.back());
        T.add(std::move(r));
    });
    T.note("max_opposite_corner", opp);
    return T;
}

// ---- chain ----------------------------------------------------------------------

inline std::vector<std::string> chain_columns(int N, bool links) {
    std::vector<std::string> c{"time"};
    for (int i = 1; i <= N; ++i) c.push_back("n_" + std::to_string(i));
    if (links)
        for (int l = 1; l < N; ++l) c.push_back("sx_" + std::to_string(l));
    return c;
}

inline TDVPConfig tdvp_config(const Params& P) {
    TDVPConfig c;
    c.dt = P.num("dt");
    c.t_total = P.num("t_end");
    c.chi = positive(P, "chi");
    c.order = P.integer("order");
    c.check();
    return c;
}

// occupations along a TDVP run, every `every` steps
template <class Extra>
void chain_tdvp(const Params& P, const ChainParams& cp, MPSState m, Extra&& extra) {
    const TDVPConfig cfg = tdvp_config(P);
    const int every = positive(P, "sample_every");
    const MPO W = chain_to_mpo(cp);
    pad_bonds(m, W, cfg.chi);
    long step = 0;
    tdvp_evolve(m, W, cfg, [&](double t, const MPSState& s) {
        if (step++ % every == 0) extra(t, measure_chain(s, cp.N));
    });
}

inline Table ws_single_run(const Params& P) {
    const int N = positive(P, "N", 2);
    const double h = P.num("h"), t = P.num("t");
    const int nm = positive(P, "n_max");
    int site = P.integer("site");
    if (site == 0) site = N / 2;
    const ChainParams cp = ChainParams::uniform(N, t, h, 0.0, nm);
    WSParams wp;
    wp.N = N, wp.t_link = t, wp.h = h;
    std::vector<std::string> cols = chain_columns(N, false);
    for (auto c : {"oracle", "guard_ok"}) cols.push_back(c);
    Table T(cols);
    double worst = 0, worst_g = 0;
    auto row = [&](double tt, const std::vector<double>& n) {
        const auto o = ws_single(tt, site, wp);
        std::vector<double> r{tt};
        r.insert(r.end(), n.begin(), n.end());
        r.push_back(o.n);
        r.push_back(o.valid() ? 1.0 : 0.0);
        const double d = std::abs(o.n - n[std::size_t(site) - 1]);
        worst = std::max(worst, d);
        if (o.valid()) worst_g = std::max(worst_g, d);
        T.add(std::move(r));
    };
    const std::string method = P.str("method");
    if (method == "ed") {
        const SpaceLayout l = chain_layout(N, nm);
        const OperatorSum ops = chain_terms(cp, l);
        const auto st = make_state(StateKind::chain_single, l, {N / 2, 1});
        const Subspace sub = reachable_subspace(ops, st.psi.amplitudes());
        const SpMat Hs = compile_on(ops, sub);
        std::vector<LinearOperator> ns;
        for (int i = 1; i <= N; ++i) ns.push_back(number(l, chain_site_factor(i)));
        const int steps = int(std::llround(P.num("t_end") / P.num("dt")));
        const Vec x0 = sub.restrict(st.psi.amplitudes());
        double refocus = 0;
        const double tr = h != 0 ? two_pi / h : 0.0;
        evolve_static_matrix(Hs, x0, linspace(0, steps * P.num("dt"), steps + 1), [&](double tt, const Vec& x) {
            const StateVector s(l, sub.lift(x, l.dim()));
            std::vector<double> n;
            for (auto& op : ns) n.push_back(expectation(s, op).real());
            row(tt, n);
        });
        if (tr > 0) {
            evolve_static_matrix(Hs, x0, {tr}, [&](double, const Vec& x) { refocus = std::norm(x0.dot(x)); });
            T.note("refocus_time", tr);
            T.note("refocus_fidelity", refocus);
        }
    } else if (method == "tdvp") {
        chain_tdvp(P, cp, product_mps(StateKind::chain_single, cp, N / 2, 1), [&](double tt, const ChainMeasure& m) { row(tt, m.n); });
    } else {
        throw invalid_parameter("method must be ed or tdvp");
    }
    T.note("site", site);
    T.note("max_deviation", worst);
    T.note("max_deviation_guarded", worst_g);
    return T;
}

inline Table ws_pair_run(const Params& P) {
    const int N = positive(P, "N", 2);
    const int r0 = positive(P, "r0");
    const double h = P.num("h"), t = P.num("t");
    int site = P.integer("site");
    if (site == 0) site = N / 4;
    const int i = N / 2 - r0 / 2, j = N / 2 + r0 / 2;
    if (i < 1 || j > N) throw invalid_parameter("pair separation does not fit the chain");
    const ChainParams cp = ChainParams::uniform(N, t, h, 0.0, positive(P, "n_max"));
    WSParams wp;
    wp.N = N, wp.t_link = t, wp.h = h, wp.r0 = r0;
    std::vector<std::string> cols = chain_columns(N, false);
    cols.push_back("oracle");
    Table T(cols);
    double worst = 0;
    chain_tdvp(P, cp, product_mps(StateKind::chain_pair, cp, i, j), [&](double tt, const ChainMeasure& m) {
        const double o = ws_two_boson(tt, site, wp);
        std::vector<double> r{tt};
        r.insert(r.end(), m.n.begin(), m.n.end());
        r.push_back(o);
        worst = std::max(worst, std::abs(o - m.n[std::size_t(site) - 1]));
        T.add(std::move(r));
    });
    T.note("site", site);
    T.note("max_deviation", worst);
    return T;
}

// largest |sx_l - sx_l'| over link pairs mirrored about the string centre
inline double mirror_asymmetry(const std::vector<double>& sx, int si, int sj) {
    const int s = 2 * si + 2 * sj;  // links l and s - l are mirror images
    double a = 0;
    for (int l = 1; l <= int(sx.size()); ++l) {
        const int m = s - l;
        if (m >= 1 && m <= int(sx.size())) a = std::max(a, std::abs(sx[std::size_t(l) - 1] - sx[std::size_t(m) - 1]));
    }
    return a;
}

inline Table string_breaking(const Params& P) {
    const int N = positive(P, "N", 2);
    const int si = positive(P, "string_i"), sj = positive(P, "string_j");
    const ChainParams cp = ChainParams::uniform(N, P.num("t"), P.num("h"), P.num("mu"), positive(P, "n_max"));
    const auto q0 = chain_config(StateKind::chain_string, N, si, sj).charges();
    std::vector<std::string> cols = chain_columns(N, true);
    for (auto c : {"total_n", "gauss_dev", "asymmetry"}) cols.push_back(c);
    Table T(cols);
    double ndev = 0, gdev = 0, asym = 0, mid0 = 0, mid1 = 0;
    const int mid = si + sj;  // central string link
    chain_tdvp(P, cp, product_mps(StateKind::chain_string, cp, si, sj), [&](double tt, const ChainMeasure& m) {
        double tot = 0, g = 0;
        for (double x : m.n) tot += x;
        for (int i = 0; i < N; ++i) g = std::max(g, std::abs(m.gauss[std::size_t(i)] - (q0[std::size_t(i)] ? -1.0 : 1.0)));
        const double a = mirror_asymmetry(m.sx, si, sj);
        std::vector<double> r{tt};
        r.insert(r.end(), m.n.begin(), m.n.end());
        r.insert(r.end(), m.sx.begin(), m.sx.end());
        r.push_back(tot);
        r.push_back(g);
        r.push_back(a);
        ndev = std::max(ndev, std::abs(tot - 0.5 * N));
        gdev = std::max(gdev, g);
        asym = std::max(asym, a);
        if (T.rows.empty()) mid0 = m.sx[std::size_t(mid) - 1];
        mid1 = m.sx[std::size_t(mid) - 1];
        T.add(std::move(r));
    });
    T.note("max_total_n_deviation", ndev);
    T.note("max_gauss_deviation", gdev);
    T.note("max_asymmetry", asym);
    T.note("mid_sx_initial", mid0);
    T.note("mid_sx_final", mid1);
    return T;
}

// ---- regime checks (warnings only) ---------------------------------------------------

inline void warn_if(std::vector<std::string>& w, bool cond, const std::string& msg) {
    if (cond) w.push_back(msg);
}

inline void check_sideband(const Params& P, double omega, std::vector<std::string>& w) {
    const TrapPreset p = preset_named(P.str("preset"));
    const double eta = std::max(p.eta_x, p.eta_z);
    warn_if(w, eta * omega > 0.1 * std::min(p.omega_x, p.omega_z),
            "resolved-sideband condition eta*Omega << omega_trap is not met");
}

inline void check_ls(const Params& P, std::vector<std::string>& w) {
    const LSSetup s = ls_setup(P);
    const double om = std::abs(s.omega12);
    warn_if(w, om > 0.1 * s.delta, "delta >> |Omega12| is violated (delta/|Omega12| = " + format_number(s.delta / om) + ")");
    warn_if(w, om > 0.1 * 4 * s.delta, "parametric condition |Omega_d| << 4|omega_x - omega_z| is violated");
    check_sideband(P, om, w);
}

inline void check_ms(const Params& P, std::vector<std::string>& w) {
    const TrapPreset p = preset_named(P.str("preset"));
    const double om = std::abs(two_pi * P.num("omega_mhz") * 1e6), delta = p.omega_x - p.omega_z;
    warn_if(w, om > 0.1 * delta, "delta >> |Omega| is violated for the bichromatic drive");
    check_sideband(P, om, w);
}

inline void check_sdf(const Params& P, std::vector<std::string>& w) {
    const TrapPreset p = preset_named(P.str("preset"));
    const double om = std::abs(two_pi * P.num("omega_mhz") * 1e6), delta = std::abs(two_pi * P.num("delta_khz") * 1e3);
    const double eta = std::max(p.eta_x, p.eta_z);
    warn_if(w, delta > 0 && eta * om / delta > 0.3,
            "eta*Omega/delta = " + format_number(eta * om / delta) + ": third-order force terms are not small");
}

inline void check_plaquette(const Params& P, std::vector<std::string>& w) {
    const double t = std::abs(P.num("t")), d2 = std::abs(P.num("delta2"));
    warn_if(w, t > 0 && d2 < 5 * t, "|delta2| >> t is not met; the second-order Bell dynamics is not isolated");
}

inline void check_n_max(const Params& P, std::vector<std::string>&) {
    if (P.has("n_max") && P.integer("n_max") < 1) throw invalid_parameter("n_max must be >= 1");
}

}  // namespace detail

inline const std::vector<Scenario>& catalog() {
    static const std::vector<Scenario> cat = [] {
        using namespace detail;
        std::vector<Scenario> c;
        const std::map<std::string, std::string> ls_base{
            {"preset", "raman"}, {"omega12_mhz", "1.1"}, {"n_max", "7"},   {"rise_us", "10"}, {"span", "2.5"},
            {"points", "150"},   {"h_over_t", "0"},      {"de_ac_khz", "0"}, {"dt_ns", "0"}};
        const std::map<std::string, std::string> ms_base{
            {"preset", "raman"}, {"omega_mhz", "0.5"}, {"n_max", "7"}, {"rise_us", "10"}, {"span", "2.5"},
            {"points", "151"},   {"h_over_t", "0"},    {"dt_ns", "0"}};
        const std::map<std::string, std::string> sdf_base{
            {"preset", "quadrupole"}, {"omega_mhz", "0.5303300858899106"}, {"delta_khz", "75"}, {"n_max", "5"},
            {"rise_us", "3.6"},       {"n_pulses", "0"}, {"span", "2.5"}, {"carriers", "true"},
            {"carrier_rabi_khz", "0"}, {"h_over_t", "0"}, {"dt_ns", "0"}};
        auto with = [](std::map<std::string, std::string> m, std::map<std::string, std::string> extra) {
            for (auto& [k, v] : extra) m[k] = v;
            return m;
        };

        c.push_back({"link-rabi-ideal", "Fig. 4", "single boson on an ideal link from |L>", "1/t", 1,
                     {{"t", "1"}, {"h", "0"}, {"n_max", "1"}, {"convention", "z"}, {"t_end", "10"}, {"points", "200"}},
                     {}, link_rabi, check_n_max});
        c.push_back({"link-noon", "Fig. 5", "two bosons on an ideal link from |C>, NOON fidelity", "1/t", 1,
                     {{"t", "1"}, {"h", "0"}, {"n_max", "2"}, {"convention", "z"}, {"t_end", "5"}, {"points", "200"}},
                     {}, link_noon, check_n_max});
        c.push_back({"ls-full", "Fig. 7", "light-shift link, full trapped-ion Hamiltonian, shaped pulses", "s", 120,
                     ls_base, {}, ls_full, check_ls});
        c.push_back({"ls-sweep", "Fig. 8", "light-shift exchange rate, infidelity and Gauss value vs Omega12", "s", 900,
                     with(ls_base, {{"sweep.axis", "omega12_mhz"}, {"sweep.values", "0.5:1.1:0.1"}}), {},
                     ls_sweep_point, check_ls});
        c.push_back({"ms-sweep-raman", "Fig. 9", "bichromatic link vs Omega, Raman qubit", "s", 600,
                     with(ms_base, {{"sweep.axis", "omega_mhz"}, {"sweep.values", "0.1:0.8:0.05"}}), {},
                     ms_sweep_point, check_ms});
        c.push_back({"ms-sweep-qdp", "Fig. 9", "bichromatic link vs Omega, optical qubit", "s", 600,
                     with(ms_base, {{"preset", "quadrupole"}, {"sweep.axis", "omega_mhz"}, {"sweep.values", "0.1:0.8:0.05"}}),
                     {}, ms_sweep_point, check_ms});
        c.push_back({"ls-field-sweep", "Fig. 8 (field)", "light-shift contrast vs h/t", "s", 600,
                     with(ls_base, {{"span", "1.3"}, {"points", "60"}, {"sweep.axis", "h_over_t"}, {"sweep.values", "0,0.5,1,2,3"}}),
                     {}, ls_field_point, check_ls});
        c.push_back({"ms-field-sweep", "Fig. 9 (field)", "bichromatic contrast vs h/t", "s", 600,
                     with(ms_base, {{"omega_mhz", "0.2"}, {"span", "1.3"}, {"points", "60"}, {"sweep.axis", "h_over_t"},
                                    {"sweep.values", "0,0.5,1,2,3"}}),
                     {}, ms_field_point, check_ms});
        c.push_back({"sdf-trotter", "Figs. 11-13", "orthogonal-force pulse train with Trotterised field", "s", 300,
                     sdf_base, {}, sdf_trotter, check_sdf});
        c.push_back({"sdf-sweep", "Fig. 12", "orthogonal-force exchange rate vs Omega", "s", 900,
                     with(sdf_base, {{"sweep.axis", "omega_mhz"}, {"sweep.values", "0.35,0.4,0.45,0.5,0.5303300858899106"}}),
                     {}, sdf_sweep_point, check_sdf});
        c.push_back({"sdf-field-sweep", "Fig. 13", "orthogonal-force contrast vs h/t with Trotter error", "s", 900,
                     with(sdf_base, {{"sweep.axis", "h_over_t"}, {"sweep.values", "0,0.5,1,2,3"}}), {}, sdf_field_point,
                     check_sdf});
        c.push_back({"qdp-ls-appendix", "Fig. 19", "light-shift link on the optical qubit vs per-beam Rabi frequency", "s",
                     900,
                     with(ls_base, {{"preset", "quadrupole_ls"}, {"omega12_mhz", "0"}, {"omega_mhz", "0.7"},
                                    {"sweep.axis", "omega_mhz"}, {"sweep.values", "0.5:0.8:0.1"}, {"points", "60"}}),
                     {}, ls_sweep_point, check_ls});
        c.push_back({"spectator-detuning", "Fig. 10", "smallest spectator-mode detuning for a leakage bound", "s", 60,
                     {{"preset", "raman"}, {"omega_mhz", "1.1"}, {"eps", "0.1"}, {"sweep.axis", "omega_mhz"},
                      {"sweep.values", "0.2:1.2:0.2"}},
                     {}, spectator_point, nullptr});
        c.push_back({"plaquette-bell", "Fig. 11", "two-link plaquette, gauge-field Bell state", "1/t", 5,
                     {{"t", "1"}, {"h", "0"}, {"delta1", "0"}, {"delta2", "10"}, {"n_max", "1"}, {"t_end", "25"},
                      {"points", "501"}},
                     {}, plaquette_bell, check_plaquette});
        c.push_back({"ladder-peierls-interference", "Fig. 3d", "synthetic flux ladder, single phonon interference", "1/J",
                     1,
                     {{"N", "2"}, {"flux_pi", "1"}, {"J", "1"}, {"omega_d", "2"}, {"nearest_neighbor_only", "true"},
                      {"n_max", "1"}, {"t_end", "20"}, {"points", "401"}},
                     {}, ladder_interference, check_n_max});
        c.push_back({"chain-ws-single", "Figs. 12-13", "single boson Wannier-Stark breathing on a chain", "1/t", 600,
                     {{"N", "16"}, {"t", "1"}, {"h", "0.4"}, {"n_max", "1"}, {"method", "tdvp"}, {"chi", "100"},
                      {"dt", "0.05"}, {"t_end", "12"}, {"order", "2"}, {"site", "0"}, {"sample_every", "1"}},
                     {}, ws_single_run, check_n_max});
        c.push_back({"chain-ws-pair", "Figs. 14-15", "boson pair Wannier-Stark dynamics on a chain", "1/t", 1800,
                     {{"N", "32"}, {"t", "1"}, {"h", "0.3"}, {"r0", "16"}, {"n_max", "1"}, {"chi", "100"}, {"dt", "0.05"},
                      {"t_end", "12"}, {"order", "2"}, {"site", "0"}, {"sample_every", "1"}},
                     {}, ws_pair_run, check_n_max});
        c.push_back({"chain-string-breaking", "Figs. 16-17", "half-filled chain, string breaking from a meson string",
                     "1/t", 3600,
                     {{"N", "20"}, {"t", "1"}, {"h", "0.2"}, {"mu", "0.2"}, {"n_max", "1"}, {"chi", "32"}, {"dt", "0.05"},
                      {"t_end", "2"}, {"order", "2"}, {"string_i", "3"}, {"string_j", "7"}, {"sample_every", "1"}},
                     {{"N", "80"}, {"chi", "64"}, {"t_end", "10"}, {"string_i", "18"}, {"string_j", "22"},
                      {"sample_every", "4"}},
                     string_breaking, check_n_max});
        return c;
    }();
    return cat;
}

inline const Scenario& find_scenario(const std::string& name) {
    for (const auto& s : catalog())
        if (s.name == name) return s;
    throw unknown_scenario("unknown scenario '" + name + "' (see `z2forge list`)");
}

// ---- configuration ------------------------------------------------------------------

struct ScenarioConfig {
    std::string scenario;
    std::map<std::string, std::string> overrides;  // from the file, then --set
    std::string out_dir = ".";
};

// key = value lines; '#' starts a comment. `scenario` and `out` are reserved keys.
inline ScenarioConfig parse_config(std::istream& in, ScenarioConfig c = {}) {
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw invalid_parameter("config line " + std::to_string(no) + ": expected key = value");
        const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (k.empty()) throw invalid_parameter("config line " + std::to_string(no) + ": empty key");
        if (k == "scenario")
            c.scenario = v;
        else if (k == "out")
            c.out_dir = v;
        else
            c.overrides[k] = v;
    }
    return c;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig c = {}) {
    std::ifstream f(path);
    if (!f) throw invalid_parameter("cannot read config " + path);
    return parse_config(f, std::move(c));
}

inline void apply_set(ScenarioConfig& c, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || trim(kv.substr(0, eq)).empty())
        throw invalid_parameter("--set expects key=value, got '" + kv + "'");
    const std::string k = trim(kv.substr(0, eq)), v = trim(kv.substr(eq + 1));
    if (k == "scenario")
        c.scenario = v;
    else if (k == "out")
        c.out_dir = v;
    else
        c.overrides[k] = v;
}

struct Resolved {
    const Scenario* scenario = nullptr;
    Params params;  // without sweep keys
    std::string sweep_axis;
    std::vector<double> sweep_values;
    bool full_scale = false;
};

inline Resolved resolve(const ScenarioConfig& c, bool full_scale = false) {
    if (c.scenario.empty()) throw invalid_parameter("no scenario given");
    Resolved r;
    r.scenario = &find_scenario(c.scenario);
    r.full_scale = full_scale;
    std::map<std::string, std::string> v = r.scenario->defaults;
    if (full_scale)
        for (auto& [k, x] : r.scenario->full_scale) v[k] = x;
    for (auto& [k, x] : c.overrides) {
        if (!v.count(k) && k != "sweep.axis" && k != "sweep.values" && k != "columns")
            throw invalid_parameter("unknown parameter '" + k + "' for scenario " + c.scenario);
        v[k] = x;
    }
    if (v.count("sweep.axis") || v.count("sweep.values")) {
        const std::string axis = v.count("sweep.axis") ? trim(v["sweep.axis"]) : "";
        if (!axis.empty() && axis != "none") {
            if (!v.count(axis) || axis.rfind("sweep.", 0) == 0)
                throw invalid_parameter("sweep axis '" + axis + "' is not a parameter of " + c.scenario);
            if (!v.count("sweep.values")) throw invalid_parameter("sweep axis given without sweep.values");
            r.sweep_axis = axis;
            r.sweep_values = parse_values(v["sweep.values"]);
        }
        v.erase("sweep.axis");
        v.erase("sweep.values");
    }
    r.params.values = std::move(v);
    return r;
}

// Warnings for regime violations; throws invalid_parameter on malformed values.
inline std::vector<std::string> validate(const ScenarioConfig& c, bool full_scale = false) {
    const Resolved r = resolve(c, full_scale);
    std::vector<std::string> w;
    // every numeric-looking default must still parse after overrides
    for (auto& [k, def] : r.scenario->defaults) {
        if (k.rfind("sweep.", 0) == 0 || !r.params.has(k)) continue;
        bool numeric = true;
        try {
            parse_number(k, def);
        } catch (const invalid_parameter&) {
            numeric = false;
        }
        if (numeric) r.params.num(k);
    }
    detail::check_n_max(r.params, w);
    auto points = r.sweep_values.empty() ? std::vector<double>{0.0} : r.sweep_values;
    for (double x : points) {
        Params p = r.params;
        if (!r.sweep_axis.empty()) p.values[r.sweep_axis] = format_number(x);
        std::vector<std::string> pw;
        if (r.scenario->check) r.scenario->check(p, pw);
        for (auto& m : pw) {
            std::string msg = r.sweep_axis.empty() ? m : r.sweep_axis + "=" + format_number(x) + ": " + m;
            if (std::find(w.begin(), w.end(), msg) == w.end()) w.push_back(msg);
        }
    }
    return w;
}

// ---- running ----------------------------------------------------------------------

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const Resolved& r) {
    std::string s = std::string(tool_version) + "\n" + r.scenario->name + "\n";
    for (auto& [k, v] : r.params.values) s += k + "=" + v + "\n";
    if (!r.sweep_axis.empty()) {
        s += "sweep.axis=" + r.sweep_axis + "\nsweep.values=";
        for (double x : r.sweep_values) s += format_number(x) + ",";
        s += "\n";
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

struct RunResult {
    Table table;
    std::string hash;
};

// Sweep points run on a worker pool; rows come out ordered by sweep value.
inline RunResult run(const Resolved& r, const RunOptions& opt = {}) {
    RunResult out;
    out.hash = config_hash(r);
    if (r.sweep_axis.empty()) {
        out.table = r.scenario->run(r.params);
    } else {
        const std::size_t n = r.sweep_values.size();
        std::vector<std::optional<Table>> parts(n);
        std::vector<std::exception_ptr> errs(n);
        std::atomic<std::size_t> next{0};
        int workers = opt.workers > 0 ? opt.workers : int(std::max(1u, std::thread::hardware_concurrency()));
        workers = int(std::min<std::size_t>(std::size_t(workers), n));
        auto work = [&] {
            for (std::size_t k; (k = next.fetch_add(1)) < n;) {
                try {
                    Params p = r.params;
                    p.values[r.sweep_axis] = format_number(r.sweep_values[k]);
                    parts[k] = r.scenario->run(p);
                } catch (...) {
                    errs[k] = std::current_exception();
                }
            }
        };
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
        std::vector<std::string> cols{r.sweep_axis};
        cols.insert(cols.end(), parts[0]->columns.begin(), parts[0]->columns.end());
        Table t(cols);
        for (std::size_t k = 0; k < n; ++k) {
            for (auto& row : parts[k]->rows) {
                std::vector<double> full{r.sweep_values[k]};
                full.insert(full.end(), row.begin(), row.end());
                t.add(std::move(full));
            }
            for (auto& [name, v] : parts[k]->notes)
                t.note(r.sweep_axis + "=" + format_number(r.sweep_values[k]) + ":" + name, v);
        }
        out.table = std::move(t);
    }
    if (r.params.has("columns")) {
        // keep the leading axis/time column plus the requested ones
        std::vector<std::size_t> keep{0};
        std::stringstream ss(r.params.str("columns"));
        std::string c;
        while (std::getline(ss, c, ','))
            if (!trim(c).empty()) keep.push_back(out.table.column(trim(c)));
        Table t;
        for (auto k : keep) t.columns.push_back(out.table.columns[k]);
        for (auto& row : out.table.rows) {
            std::vector<double> x;
            for (auto k : keep) x.push_back(row[k]);
            t.add(std::move(x));
        }
        t.notes = out.table.notes;
        out.table = std::move(t);
    }
    return out;
}

inline std::string csv_text(const Resolved& r, const RunResult& res) {
    std::ostringstream o;
    o << "# scenario: " << r.scenario->name << "\n";
    o << "# figure: " << r.scenario->figure << "\n";
    o << "# tool_version: " << tool_version << "\n";
    o << "# config_hash: " << res.hash << "\n";
    o << "# time_unit: " << r.scenario->time_unit << "\n";
    for (auto& [k, v] : r.params.values) o << "# param " << k << " = " << v << "\n";
    if (!r.sweep_axis.empty()) o << "# sweep " << r.sweep_axis << "\n";
    for (auto& [k, v] : res.table.notes) o << "# note " << k << " = " << format_number(v) << "\n";
    const auto& cols = res.table.columns;
    for (std::size_t c = 0; c < cols.size(); ++c) o << (c ? "," : "") << cols[c];
    o << "\n";
    for (auto& row : res.table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) o << (c ? "," : "") << format_number(row[c]);
        o << "\n";
    }
    return o.str();
}

inline std::string meta_text(const Resolved& r, const RunResult& res) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario->name;
    j["figure"] = r.scenario->figure;
    j["tool_version"] = tool_version;
    j["config_hash"] = res.hash;
    j["time_unit"] = r.scenario->time_unit;
    j["full_scale"] = r.full_scale;
    nlohmann::ordered_json p = nlohmann::ordered_json::object();
    for (auto& [k, v] : r.params.values) p[k] = v;
    j["parameters"] = p;
    if (!r.sweep_axis.empty()) {
        j["sweep"] = {{"axis", r.sweep_axis}, {"values", r.sweep_values}};
    }
    j["columns"] = res.table.columns;
    j["rows"] = res.table.rows.size();
    nlohmann::ordered_json n = nlohmann::ordered_json::object();
    for (auto& [k, v] : res.table.notes) n[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_number(v));
    j["notes"] = n;
    return j.dump(2) + "\n";
}

inline void write_outputs(const Resolved& r, const RunResult& res, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base = fs::path(dir) / r.scenario->name;
    std::ofstream csv(base.string() + ".csv", std::ios::binary);
    std::ofstream meta(base.string() + ".meta.json", std::ios::binary);
    if (!csv || !meta) throw invalid_parameter("cannot write outputs to " + dir);
    csv << csv_text(r, res);
    meta << meta_text(r, res);
}

// Maps exceptions to exit codes with a diagnostic on err.
template <class F>
int guarded(F&& f, std::ostream& err = std::cerr) {
    try {
        return f();
    } catch (const unknown_scenario& e) {
        err << "error: " << e.what() << "\n";
        return unknown_scenario_code;
    } catch (const invalid_parameter& e) {
        err << "invalid parameter: " << e.what() << "\n";
        return invalid_code;
    } catch (const numerical_failure& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_code;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_code;
    }
}

}  // namespace z2forge::cli
