#ifndef LZSIM_APP_HPP
#define LZSIM_APP_HPP

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "output.hpp"

namespace lzsim {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;
inline constexpr int exit_all_failed = 4;

/// Everything a sweep produces: certified probability, end-of-window observables, invariant
/// residuals, and an optional time series.
struct Outcome {
    lz::SurvivalResult survival;
    lz::SweepProtocol window;  ///< protocol with the window actually used
    double lambda1 = NAN, lambda2 = NAN;
    std::optional<double> xi_n, xi_s;
    double n1 = NAN, n2 = NAN;
    json residuals = json::object();
    Table series;
    lz::ManyBodyState final_state;  ///< exact only
};

namespace detail {

inline lz::SweepProtocol window_of(const RunConfig& c, const lz::SweepProtocol& p, double half_window) {
    if (c.window_given) return p;
    lz::SweepProtocol q = p;
    q.t_start = -half_window;
    q.t_end = half_window;
    return q;
}

inline Table exact_series(const lz::TrajectoryRecord& rec) {
    Table t{{"t", "Lx", "Ly", "Lz", "var_x", "var_y", "var_z", "lambda1", "lambda2", "n1", "n2", "norm"}, {}};
    for (const auto& s : rec.samples)
        t.rows.push_back({cell(s.t), cell(s.L[0]), cell(s.L[1]), cell(s.L[2]), cell(s.var[0]), cell(s.var[1]),
                          cell(s.var[2]), cell(s.lambda1), cell(s.lambda2), cell(s.n1), cell(s.n2), cell(s.norm)});
    return t;
}

}  // namespace detail

inline Outcome run_exact(const RunConfig& c, const lz::SweepProtocol& p, double sample_dt) {
    Outcome o;
    lz::ExactResult last;
    lz::SweepProtocol last_q;
    auto eval = [&](const lz::SweepProtocol& q) {
        last = lz::propagate_schrodinger(lz::sweep_initial_state(q, c.readout), q, sample_dt);
        last_q = q;
        lz::SurvivalResult r;
        r.P = std::clamp(lz::many_body_survival(last.final_state, q, c.readout), 0.0, 1.0);
        return r;
    };
    o.survival = lz::certify_window(p, c.window, eval);
    o.window = last_q;
    const auto& x = last.record.samples.back();
    o.lambda1 = x.lambda1;
    o.lambda2 = x.lambda2;
    o.n1 = x.n1;
    o.n2 = x.n2;
    o.xi_n = lz::final_squeezing_number(last.final_state, last_q, c.readout);
    o.xi_s = lz::squeezing_spectroscopic_from(x.var[2], x.L, p.N);
    o.residuals = {{"norm_drift", last.norm_drift}, {"max_norm_drift", last.record.max_norm_drift},
                   {"steps_accepted", last.stats.accepted}, {"steps_rejected", last.stats.rejected}};
    o.series = detail::exact_series(last.record);
    o.final_state = std::move(last.final_state);
    return o;
}

inline Outcome run_meanfield(const RunConfig& c, const lz::SweepProtocol& p, double gamma, double sample_dt) {
    Outcome o;
    lz::MeanFieldResult last;
    lz::SweepProtocol last_q;
    auto eval = [&](const lz::SweepProtocol& q) {
        const lz::Vec3 s0 = lz::mean_field_initial_bloch(q, c.readout);
        last = gamma == 0.0 ? lz::propagate_gpe(lz::MeanFieldState::from_bloch(s0), q, sample_dt)
                            : lz::propagate_bloch_noisy(s0, q, gamma, sample_dt);
        last_q = q;
        lz::SurvivalResult r;
        r.P = std::clamp(lz::mean_field_survival(last.final_bloch, q, c.readout, gamma == 0.0), 0.0, 1.0);
        return r;
    };
    o.survival = lz::certify_window(p, c.window, eval);
    o.window = last_q;
    const auto ev = lz::spdm_from_bloch(last.final_bloch).eigenvalues();
    o.lambda1 = ev.first;
    o.lambda2 = ev.second;
    o.n1 = p.N * (0.5 - last.final_bloch[2]);
    o.n2 = p.N * (0.5 + last.final_bloch[2]);
    const auto& tr = last.trajectory;
    o.residuals = {{"norm_drift", std::abs(tr.norm.back() - tr.norm.front())},
                   {"steps_accepted", last.stats.accepted}, {"steps_rejected", last.stats.rejected}};
    o.series.header = {"t", "sx", "sy", "sz", "norm", "lambda1", "lambda2"};
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const auto e = lz::spdm_from_bloch(tr.s[i]).eigenvalues();
        o.series.rows.push_back({cell(tr.t[i]), cell(tr.s[i][0]), cell(tr.s[i][1]), cell(tr.s[i][2]), cell(tr.norm[i]),
                                 cell(e.first), cell(e.second)});
    }
    return o;
}

inline Table ensemble_series(const std::vector<lz::EnsembleMoments>& series) {
    Table t{{"t", "Lx", "Ly", "Lz", "dLx", "dLy", "dLz", "lambda1", "lambda2", "xi_N"}, {}};
    for (const auto& m : series)
        t.rows.push_back({cell(m.t), cell(m.mean[0]), cell(m.mean[1]), cell(m.mean[2]), cell(m.dev[0]), cell(m.dev[1]),
                          cell(m.dev[2]), cell(m.lambda1), cell(m.lambda2), cell(m.xi_n)});
    return t;
}

/// With record = false only the probability and final moments are computed (scan rows).
inline Outcome run_ensemble(const RunConfig& c, const lz::SweepProtocol& p, double sample_dt, int workers,
                            bool record) {
    Outcome o;
    lz::EnsemblePlzOptions opt;
    opt.ensemble.workers = workers;
    opt.ensemble.member_tol = c.member_tol;
    opt.window = c.window;
    opt.window.max_doublings = std::max(c.window.max_doublings, 6);
    opt.readout = c.readout;
    const auto sw = lz::ensemble_sweep(p, c.M, c.seed, opt);
    o.survival = sw.survival;
    o.window = detail::window_of(c, p, sw.survival.half_window);
    o.lambda1 = sw.final_moments.lambda1;
    o.lambda2 = sw.final_moments.lambda2;
    o.xi_n = sw.final_xi_n;
    o.n1 = p.N * sw.final_moments.spdm.rho11;
    o.n2 = p.N * sw.final_moments.spdm.rho22;
    o.residuals = {{"failed_members", sw.survival.failed_members}};
    if (record) {
        const auto ens = lz::orient_ensemble(lz::sample_initial_ensemble(p.N, c.M, c.seed),
                                             lz::mean_field_initial_bloch(o.window, c.readout));
        lz::EnsembleOptions eo{workers, c.member_tol, sample_dt};
        o.series = ensemble_series(lz::propagate_ensemble(ens, o.window, eo).series);
    }
    return o;
}

inline Outcome run_master(const RunConfig& c, const lz::SweepProtocol& p, double gamma, double sample_dt) {
    Outcome o;
    lz::MasterResult last;
    lz::SweepProtocol last_q;
    auto eval = [&](const lz::SweepProtocol& q) {
        last = lz::propagate_master(lz::DensityMatrix::pure(lz::sweep_initial_state(q, c.readout)), q, gamma, sample_dt);
        last_q = q;
        lz::SurvivalResult r;
        r.P = std::clamp(lz::master_survival(last.final_state, q, c.readout), 0.0, 1.0);
        return r;
    };
    o.survival = lz::certify_window(p, c.window, eval);
    o.window = last_q;
    const auto& x = last.samples.back();
    o.lambda1 = x.lambda1;
    o.lambda2 = x.lambda2;
    o.n1 = x.n1;
    o.n2 = x.n2;
    o.xi_n = lz::squeezing_number_from(x.var[2], x.n1, x.n2, p.N);
    o.xi_s = lz::squeezing_spectroscopic_from(x.var[2], x.L, p.N);
    o.residuals = {{"trace_drift", last.trace_drift}, {"min_eigenvalue", last.min_eigenvalue},
                   {"max_hermiticity_error", last.max_hermiticity_error},
                   {"steps_accepted", last.stats.accepted}, {"steps_rejected", last.stats.rejected}};
    o.series.header = {"t", "Lx", "Ly", "Lz", "var_x", "var_y", "var_z", "lambda1", "lambda2", "purity", "n1", "n2", "trace"};
    for (const auto& s : last.samples)
        o.series.rows.push_back({cell(s.t), cell(s.L[0]), cell(s.L[1]), cell(s.L[2]), cell(s.var[0]), cell(s.var[1]),
                                 cell(s.var[2]), cell(s.lambda1), cell(s.lambda2), cell(s.purity), cell(s.n1),
                                 cell(s.n2), cell(s.trace)});
    return o;
}

inline Outcome run_method(const RunConfig& c, const lz::SweepProtocol& p, double gamma, double sample_dt, int workers,
                          bool record) {
    if (c.method == "exact") return run_exact(c, p, sample_dt);
    if (c.method == "meanfield") return run_meanfield(c, p, gamma, sample_dt);
    if (c.method == "ensemble") return run_ensemble(c, p, sample_dt, workers, record);
    return run_master(c, p, gamma, sample_dt);
}

inline json summary_header(const RunConfig& c) { return {{"schema", schema_version}, {"config", c.echo}, {"seed", c.seed}}; }

inline json outcome_json(const Outcome& o) {
    return {{"P_LZ", o.survival.P},
            {"std_error", o.survival.std_error},
            {"window", {{"t_start", o.window.t_start}, {"t_end", o.window.t_end}, {"doublings", o.survival.doublings},
                        {"last_change", o.survival.last_change}}},
            {"final", {{"lambda1", finite_or_null(o.lambda1)}, {"lambda2", finite_or_null(o.lambda2)},
                       {"n1", finite_or_null(o.n1)}, {"n2", finite_or_null(o.n2)}, {"xi_N", optional_json(o.xi_n)},
                       {"xi_S", optional_json(o.xi_s)}}},
            {"residuals", o.residuals}};
}

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------------------------
// Subcommands

inline int run_sweep(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = run_method(c, c.protocol, c.gamma, c.sample_dt, lz::resolve_workers(c.workers), true);
    write_csv(fs::path(c.out) / "trajectory.csv", c.echo, o.series);
    json s = summary_header(c);
    s.update(outcome_json(o));
    s["wall_time_s"] = elapsed_since(t0);
    write_json(fs::path(c.out) / "summary.json", s);
    return exit_ok;
}

struct ScanPoint {
    double alpha, g, gamma;
    int N, initial_mode;
};

inline std::vector<ScanPoint> scan_points(const RunConfig& c) {
    auto or_default = [](const auto& axis, auto v) {
        using T = std::decay_t<decltype(v)>;
        return axis.empty() ? std::vector<T>{v} : std::vector<T>(axis.begin(), axis.end());
    };
    const auto& p = c.protocol;
    std::vector<ScanPoint> pts;
    for (int N : or_default(c.scan.N, p.N))
        for (double g : or_default(c.scan.g, p.g))
            for (double alpha : or_default(c.scan.alpha, p.alpha))
                for (double gamma : or_default(c.scan.gamma, c.gamma))
                    for (int mode : or_default(c.scan.initial_mode, p.initial_mode))
                        pts.push_back({alpha, g, gamma, N, mode});
    return pts;
}

inline int run_scan(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pts = scan_points(c);
    const int workers = lz::resolve_workers(c.workers);
    // With several points in flight each point runs single-threaded.
    const int inner = pts.size() > 1 ? 1 : workers;
    auto eval = [&](std::size_t i) -> std::vector<std::string> {
        const auto& pt = pts[i];
        std::vector<std::string> row{cell(pt.alpha), cell(pt.g), cell(pt.N), cell(pt.gamma), cell(pt.initial_mode)};
        std::string status = "ok", message;
        Outcome o;
        try {
            lz::SweepProtocol q = c.protocol;
            q.alpha = pt.alpha;
            q.g = pt.g;
            q.N = pt.N;
            q.initial_mode = pt.initial_mode;
            if (!c.window_given) q = lz::with_default_window(q);
            q.validate();
            o = run_method(c, q, pt.gamma, 0.0, inner, false);
        } catch (const lz::InvalidArgument& e) {
            status = "invalid";
            message = e.what();
        } catch (const lz::NotConverged& e) {
            status = "not_converged";
            message = e.what();
        } catch (const lz::Error& e) {
            status = "numerical_error";
            message = e.what();
        } catch (const std::exception& e) {
            status = "error";
            message = e.what();
        }
        const bool ok = status == "ok";
        const double nan = NAN;
        row.push_back(status);
        row.push_back(cell(ok ? o.survival.P : nan));
        row.push_back(cell(ok ? o.survival.std_error : nan));
        row.push_back(cell(ok ? o.lambda1 : nan));
        row.push_back(cell(ok ? o.lambda2 : nan));
        row.push_back(cell(ok ? o.xi_n : std::nullopt));
        row.push_back(cell(ok ? o.window.t_end : nan));
        row.push_back(cell(message));
        return row;
    };
    Table t{{"alpha", "g", "N", "gamma", "initial_mode", "status", "P_LZ", "std_error", "lambda1", "lambda2", "xi_N",
             "half_window", "message"},
            lz::parallel_map(pts.size(), workers, eval)};
    int ok = 0;
    for (const auto& r : t.rows) ok += r[5] == "ok";
    write_csv(fs::path(c.out) / "scan.csv", c.echo, t);
    json s = summary_header(c);
    s["points"] = pts.size();
    s["succeeded"] = ok;
    s["failed"] = static_cast<int>(pts.size()) - ok;
    s["wall_time_s"] = elapsed_since(t0);
    write_json(fs::path(c.out) / "summary.json", s);
    return ok > 0 ? exit_ok : exit_all_failed;
}

inline int run_spectrum(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& p = c.protocol;
    double lo = c.spectrum.eps_min, hi = c.spectrum.eps_max;
    if (lo == 0 && hi == 0) {
        hi = 2 * p.J + std::abs(p.g);
        lo = -hi;
    }
    const int n = c.spectrum.n_eps;
    std::vector<double> eps(n);
    for (int i = 0; i < n; ++i) eps[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    const auto levels = lz::many_body_spectrum(p, eps);
    Table t{{"eps", "kind", "index", "energy", "energy_per_particle", "stability"}, {}};
    for (int i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < levels[i].size(); ++k)
            t.rows.push_back({cell(eps[i]), "level", cell(static_cast<int>(k)), cell(levels[i][k]),
                              cell(levels[i][k] / p.N), ""});
        const auto set = lz::mean_field_stationary_states(eps[i], p.J, p.g);
        for (std::size_t k = 0; k < set.states.size(); ++k) {
            const auto& st = set.states[k];
            t.rows.push_back({cell(eps[i]), "stationary", cell(static_cast<int>(k)), cell(p.N * st.energy),
                              cell(st.energy), st.stability == lz::Stability::elliptic ? "elliptic" : "hyperbolic"});
        }
    }
    write_csv(fs::path(c.out) / "spectrum.csv", c.echo, t);
    json s = summary_header(c);
    s["eps_min"] = lo;
    s["eps_max"] = hi;
    s["n_eps"] = n;
    s["swallow_tail"] = lz::has_swallow_tail(p.J, p.g);
    if (lz::has_swallow_tail(p.J, p.g)) s["swallow_tail_boundary"] = lz::swallow_tail_boundary(p.J, p.g);
    s["wall_time_s"] = elapsed_since(t0);
    write_json(fs::path(c.out) / "summary.json", s);
    return exit_ok;
}

inline int run_husimi(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    auto times = c.husimi.times;
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    json s = summary_header(c);
    json frames = json::array();
    if (!times.empty()) {
        lz::SweepProtocol q = c.window_given ? c.protocol : lz::with_default_window(c.protocol);
        q.t_start = std::min(q.t_start, times.front());
        q.t_end = std::max(q.t_end, times.back());
        const lz::HusimiGridSpec spec{c.husimi.n_theta, c.husimi.n_phi};
        std::size_t k = 0;
        auto emit = [&](double t, const lz::ManyBodyState& st) {
            const auto grid = lz::husimi(st, spec, t);
            const std::string stem = "husimi_" + std::to_string(k);
            Table tab;
            tab.header = {"theta"};
            for (std::size_t j = 0; j < grid.phi.size(); ++j) tab.header.push_back("q" + std::to_string(j));
            for (std::size_t i = 0; i < grid.theta.size(); ++i) {
                std::vector<std::string> row{cell(grid.theta[i])};
                for (std::size_t j = 0; j < grid.phi.size(); ++j) row.push_back(cell(grid.at(i, j)));
                tab.rows.push_back(std::move(row));
            }
            write_csv(fs::path(c.out) / (stem + ".csv"), c.echo, tab);
            json side = summary_header(c);
            side.update({{"frame", k}, {"time", t}, {"N", grid.N}, {"n_theta", grid.theta.size()},
                         {"n_phi", grid.phi.size()}, {"theta", grid.theta}, {"theta_weight", grid.theta_weight},
                         {"phi", grid.phi}, {"normalization_residual", grid.normalization_residual}});
            write_json(fs::path(c.out) / (stem + ".json"), side);
            frames.push_back({{"frame", k}, {"time", t}, {"csv", stem + ".csv"}, {"sidecar", stem + ".json"}});
            ++k;
            return false;
        };
        lz::evolve_exact(lz::sweep_initial_state(q, c.readout), q, q.t_start, q.t_end, times, emit);
    }
    s["frames"] = frames;
    s["wall_time_s"] = elapsed_since(t0);
    write_json(fs::path(c.out) / "summary.json", s);
    return exit_ok;
}

inline int run_squeezing(const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const int workers = lz::resolve_workers(c.workers);
    json s = summary_header(c);
    Table t;
    if (c.method == "exact") {
        lz::ExactResult last;
        lz::SweepProtocol last_q;
        auto eval = [&](const lz::SweepProtocol& q) {
            last = lz::propagate_schrodinger(lz::sweep_initial_state(q, c.readout), q, c.sample_dt);
            last_q = q;
            lz::SurvivalResult r;
            r.P = std::clamp(lz::many_body_survival(last.final_state, q, c.readout), 0.0, 1.0);
            return r;
        };
        const auto sv = lz::certify_window(c.protocol, c.window, eval);
        t.header = {"t", "xi_N", "xi_S", "lambda1", "lambda2", "n1", "n2"};
        for (const auto& x : last.record.samples)
            t.rows.push_back({cell(x.t), cell(lz::squeezing_number_from(x.var[2], x.n1, x.n2, c.protocol.N)),
                              cell(lz::squeezing_spectroscopic_from(x.var[2], x.L, c.protocol.N)), cell(x.lambda1),
                              cell(x.lambda2), cell(x.n1), cell(x.n2)});
        const auto& x = last.record.samples.back();
        s["P_LZ"] = sv.P;
        s["window"] = {{"t_start", last_q.t_start}, {"t_end", last_q.t_end}};
        s["final"] = {{"xi_N", optional_json(lz::squeezing_number_from(x.var[2], x.n1, x.n2, c.protocol.N))},
                      {"xi_S", optional_json(lz::squeezing_spectroscopic_from(x.var[2], x.L, c.protocol.N))},
                      {"xi_N_asymptotic", optional_json(lz::final_squeezing_number(last.final_state, last_q, c.readout))}};
        s["residuals"] = {{"norm_drift", last.norm_drift}};
        if (c.revival.enabled) {
            lz::RevivalOptions ro;
            ro.horizon = c.revival.horizon;
            ro.sample_dt = c.revival.sample_dt;
            ro.start = c.readout;
            const auto r = lz::revival_time(last_q, ro);
            s["revival"] = {{"time", finite_or_null(r.time)}, {"found", r.found}, {"degenerate", r.degenerate},
                            {"t_loss", finite_or_null(r.t_loss)}, {"xi_S", finite_or_null(r.xi_s_at_revival)}};
        }
    } else {
        const Outcome o = run_ensemble(c, c.protocol, c.sample_dt, workers, true);
        t = o.series;
        s.update(outcome_json(o));
    }
    write_csv(fs::path(c.out) / "squeezing.csv", c.echo, t);
    s["wall_time_s"] = elapsed_since(t0);
    write_json(fs::path(c.out) / "summary.json", s);
    return exit_ok;
}

// ---------------------------------------------------------------------------------------------
// Entry point

struct Flags {
    std::string config;
    std::string method;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> set;
};

inline json load_config_document(const std::string& path) {
    std::string text;
    if (path == "-" || (path.empty() && !isatty(STDIN_FILENO))) {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot read config file " + path);
        text.assign(std::istreambuf_iterator<char>(f), {});
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

inline json apply_flags(json j, const Flags& f) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& kv : f.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        json v;
        try {
            v = json::parse(value);
        } catch (const json::parse_error&) {
            v = value;
        }
        j[key] = v;
    }
    if (!f.method.empty()) j["method"] = f.method;
    if (f.workers) j["workers"] = *f.workers;
    if (f.seed) j["seed"] = *f.seed;
    if (!f.out.empty()) j["out"] = f.out;
    return j;
}

inline void write_error(const std::string& out, const json& config, const std::string& kind, const std::string& what,
                        std::optional<double> last_good_time) {
    json e = {{"schema", schema_version}, {"config", config}, {"error", kind}, {"message", what}};
    if (last_good_time) e["last_good_time"] = *last_good_time;
    try {
        write_json(fs::path(out.empty() ? "." : out) / "error.json", e);
    } catch (const std::exception&) {
    }
}

inline int run(int argc, char** argv) {
    CLI::App app{"Landau-Zener sweeps of the two-mode Bose-Hubbard model"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"sweep", "single sweep: JSON summary and CSV time series"},
        {"scan", "Cartesian scan over alpha, g, N, gamma, initial_mode"},
        {"spectrum", "many-body levels with the mean-field stationary energies"},
        {"husimi", "Husimi Q frames at configured times"},
        {"squeezing", "number and spectroscopic squeezing along a sweep"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "JSON config file ('-' for stdin)");
        sub->add_option("--method", flags.method, "exact | meanfield | ensemble | master");
        sub->add_option("--workers", flags.workers, "worker threads (default: LZ_WORKERS or hardware)");
        sub->add_option("--seed", flags.seed, "ensemble master seed");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--set", flags.set, "override a config key: KEY=JSON")->take_all();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    json raw = json::object();
    try {
        raw = apply_flags(load_config_document(flags.config), flags);
        cfg = parse_config(raw, command);
        cfg.workers = lz::resolve_workers(cfg.workers);
    } catch (const ConfigError& e) {
        std::cerr << "lzsim: config error: " << e.what() << '\n';
        return exit_config;
    } catch (const lz::InvalidArgument& e) {
        std::cerr << "lzsim: config error: " << e.what() << '\n';
        return exit_config;
    }

    try {
        if (command == "sweep") return run_sweep(cfg);
        if (command == "scan") return run_scan(cfg);
        if (command == "spectrum") return run_spectrum(cfg);
        if (command == "husimi") return run_husimi(cfg);
        return run_squeezing(cfg);
    } catch (const lz::InvalidArgument& e) {
        std::cerr << "lzsim: invalid input: " << e.what() << '\n';
        write_error(cfg.out, cfg.echo, "invalid_argument", e.what(), std::nullopt);
        return exit_config;
    } catch (const lz::IntegrationError& e) {
        std::cerr << "lzsim: integration failed: " << e.what() << '\n';
        write_error(cfg.out, cfg.echo, "integration_error", e.what(), e.last_good_time());
        return exit_numerical;
    } catch (const lz::Error& e) {
        std::cerr << "lzsim: numerical failure: " << e.what() << '\n';
        write_error(cfg.out, cfg.echo, "numerical_error", e.what(), std::nullopt);
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "lzsim: " << e.what() << '\n';
        write_error(cfg.out, cfg.echo, "error", e.what(), std::nullopt);
        return exit_numerical;
    }
}

}  // namespace lzsim

#endif  // LZSIM_APP_HPP
