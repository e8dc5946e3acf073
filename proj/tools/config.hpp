#ifndef LZSIM_CONFIG_HPP
#define LZSIM_CONFIG_HPP

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lz/lz.hpp"

namespace lzsim {

using json = nlohmann::json;

/// Invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScanAxes {
    std::vector<double> alpha, g, gamma;
    std::vector<int> N, initial_mode;

    std::size_t points() const {
        auto n = [](std::size_t k) { return k == 0 ? std::size_t{1} : k; };
        return n(alpha.size()) * n(g.size()) * n(N.size()) * n(gamma.size()) * n(initial_mode.size());
    }
    bool empty() const { return alpha.empty() && g.empty() && N.empty() && gamma.empty() && initial_mode.empty(); }
};

struct SpectrumSpec {
    double eps_min = 0, eps_max = 0;  ///< both 0: +-(2J + |g|)
    int n_eps = 201;
};

struct HusimiSpec {
    std::vector<double> times;
    int n_theta = 0, n_phi = 0;
};

struct RevivalSpec {
    bool enabled = false;
    double horizon = 0;
    double sample_dt = 0.02;
};

struct RunConfig {
    std::string command;
    std::string method = "exact";
    lz::SweepProtocol protocol;
    bool window_given = false;
    lz::WindowPolicy window;
    lz::Readout readout = lz::Readout::dressed;
    double gamma = 0;
    int M = 150;
    std::uint64_t seed = 1;
    double member_tol = 1e-8;
    double sample_dt = 0;
    int workers = 0;
    std::string out = ".";
    ScanAxes scan;
    SpectrumSpec spectrum;
    HusimiSpec husimi;
    RevivalSpec revival;

    /// Effective configuration, embedded in every output. Omits only `out` and `workers`,
    /// which do not affect any emitted value.
    json echo;
};

namespace detail {

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

template <class T>
void read(const json& obj, const std::string& key, T& value) {
    if (auto it = obj.find(key); it != obj.end()) value = get_as<T>(*it, key);
}

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "' in " + where);
}

}  // namespace detail

/// Build and validate a RunConfig from a JSON document. `command` is the subcommand name.
inline RunConfig parse_config(const json& j, const std::string& command) {
    using detail::read;
    detail::check_keys(j,
                       {"command", "method", "J", "g", "N", "alpha", "t_start", "t_end", "initial_mode", "tol",
                        "readout", "gamma", "M", "seed", "member_tol", "sample_dt", "workers", "out",
                        "window_tolerance", "max_doublings", "scan", "spectrum", "husimi", "revival"},
                       "config");
    if (auto it = j.find("command"); it != j.end() && !it->is_null() && detail::get_as<std::string>(*it, "command") != command)
        throw ConfigError("config was written for '" + it->get<std::string>() + "', not '" + command + "'");

    RunConfig c;
    c.command = command;
    read(j, "method", c.method);
    if (c.method != "exact" && c.method != "meanfield" && c.method != "ensemble" && c.method != "master")
        throw ConfigError("method must be one of exact, meanfield, ensemble, master");

    auto& p = c.protocol;
    read(j, "J", p.J);
    read(j, "g", p.g);
    read(j, "N", p.N);
    read(j, "alpha", p.alpha);
    read(j, "initial_mode", p.initial_mode);
    read(j, "tol", p.tol);
    const bool has_start = j.contains("t_start"), has_end = j.contains("t_end");
    if (has_start != has_end) throw ConfigError("t_start and t_end must be given together");
    c.window_given = has_start;
    if (c.window_given) {
        read(j, "t_start", p.t_start);
        read(j, "t_end", p.t_end);
    } else {
        p.t_start = -1;
        p.t_end = 1;
    }
    read(j, "window_tolerance", c.window.tolerance);
    read(j, "max_doublings", c.window.max_doublings);
    c.window.certify = !c.window_given;
    if (!(c.window.tolerance > 0) || c.window.max_doublings < 1)
        throw ConfigError("window_tolerance must be > 0 and max_doublings >= 1");

    std::string readout = "dressed";
    read(j, "readout", readout);
    if (readout == "dressed")
        c.readout = lz::Readout::dressed;
    else if (readout == "diabatic")
        c.readout = lz::Readout::diabatic;
    else
        throw ConfigError("readout must be 'dressed' or 'diabatic'");

    const bool noisy_method = c.method == "master" || c.method == "meanfield";
    if (j.contains("gamma") && !noisy_method) throw ConfigError("gamma is only valid for methods master and meanfield");
    read(j, "gamma", c.gamma);
    if (!(c.gamma >= 0) || !std::isfinite(c.gamma)) throw ConfigError("gamma must be finite and >= 0");
    if (j.contains("M") && c.method != "ensemble") throw ConfigError("M is only valid for method ensemble");
    read(j, "M", c.M);
    if (c.M < 2) throw ConfigError("M must be >= 2");
    read(j, "seed", c.seed);
    read(j, "member_tol", c.member_tol);
    if (!(c.member_tol > 0) || c.member_tol >= 1e-2) throw ConfigError("member_tol must lie in (0, 1e-2)");
    read(j, "sample_dt", c.sample_dt);
    if (!(c.sample_dt >= 0) || !std::isfinite(c.sample_dt)) throw ConfigError("sample_dt must be finite and >= 0");
    read(j, "workers", c.workers);
    if (c.workers < 0) throw ConfigError("workers must be >= 0");
    read(j, "out", c.out);

    if (auto it = j.find("scan"); it != j.end()) {
        detail::check_keys(*it, {"alpha", "g", "N", "gamma", "initial_mode"}, "scan");
        read(*it, "alpha", c.scan.alpha);
        read(*it, "g", c.scan.g);
        read(*it, "N", c.scan.N);
        read(*it, "gamma", c.scan.gamma);
        read(*it, "initial_mode", c.scan.initial_mode);
        if (!c.scan.gamma.empty() && !noisy_method)
            throw ConfigError("a gamma scan axis is only valid for methods master and meanfield");
    }
    if (auto it = j.find("spectrum"); it != j.end()) {
        detail::check_keys(*it, {"eps_min", "eps_max", "n_eps"}, "spectrum");
        read(*it, "eps_min", c.spectrum.eps_min);
        read(*it, "eps_max", c.spectrum.eps_max);
        read(*it, "n_eps", c.spectrum.n_eps);
    }
    if (auto it = j.find("husimi"); it != j.end()) {
        detail::check_keys(*it, {"times", "n_theta", "n_phi"}, "husimi");
        read(*it, "times", c.husimi.times);
        read(*it, "n_theta", c.husimi.n_theta);
        read(*it, "n_phi", c.husimi.n_phi);
    }
    if (auto it = j.find("revival"); it != j.end()) {
        detail::check_keys(*it, {"enabled", "horizon", "sample_dt"}, "revival");
        read(*it, "enabled", c.revival.enabled);
        read(*it, "horizon", c.revival.horizon);
        read(*it, "sample_dt", c.revival.sample_dt);
    }

    // Command-specific requirements.
    if (command == "scan" && c.scan.empty()) throw ConfigError("scan needs at least one non-empty axis in 'scan'");
    if (command == "spectrum") {
        if (c.spectrum.n_eps < 1) throw ConfigError("spectrum.n_eps must be >= 1");
        if (c.spectrum.eps_min > c.spectrum.eps_max) throw ConfigError("spectrum.eps_min must not exceed eps_max");
    }
    if (command == "husimi") {
        if (c.method != "exact") throw ConfigError("husimi frames need method exact");
        if (c.husimi.n_theta < 0 || c.husimi.n_phi < 0) throw ConfigError("husimi grid sizes must be >= 0");
        for (double t : c.husimi.times)
            if (!std::isfinite(t)) throw ConfigError("husimi.times must be finite");
    }
    if (command == "squeezing" && c.method != "exact" && c.method != "ensemble")
        throw ConfigError("squeezing needs method exact or ensemble");
    if (c.revival.enabled && command != "squeezing") throw ConfigError("revival is only valid for squeezing");
    if (!(c.revival.sample_dt > 0) || !(c.revival.horizon >= 0)) throw ConfigError("revival needs sample_dt > 0 and horizon >= 0");

    try {
        lz::SweepProtocol probe = p;
        if (!c.window_given && p.alpha != 0) probe = lz::with_default_window(p);
        probe.validate();
    } catch (const lz::Error& e) {
        throw ConfigError(e.what());
    }
    if (!c.window_given && p.alpha == 0 && command != "spectrum")
        throw ConfigError("alpha = 0 needs an explicit window (t_start, t_end)");

    json e;
    e["command"] = command;
    e["method"] = c.method;
    e["J"] = p.J;
    e["g"] = p.g;
    e["N"] = p.N;
    e["alpha"] = p.alpha;
    e["initial_mode"] = p.initial_mode;
    e["tol"] = p.tol;
    if (c.window_given) {
        e["t_start"] = p.t_start;
        e["t_end"] = p.t_end;
    } else {
        e["window_tolerance"] = c.window.tolerance;
        e["max_doublings"] = c.window.max_doublings;
    }
    e["readout"] = readout;
    if (noisy_method) e["gamma"] = c.gamma;
    if (c.method == "ensemble") {
        e["M"] = c.M;
        e["member_tol"] = c.member_tol;
    }
    e["seed"] = c.seed;
    e["sample_dt"] = c.sample_dt;
    if (!c.scan.empty()) {
        json s = json::object();
        if (!c.scan.alpha.empty()) s["alpha"] = c.scan.alpha;
        if (!c.scan.g.empty()) s["g"] = c.scan.g;
        if (!c.scan.N.empty()) s["N"] = c.scan.N;
        if (!c.scan.gamma.empty()) s["gamma"] = c.scan.gamma;
        if (!c.scan.initial_mode.empty()) s["initial_mode"] = c.scan.initial_mode;
        e["scan"] = s;
    }
    if (command == "spectrum")
        e["spectrum"] = {{"eps_min", c.spectrum.eps_min}, {"eps_max", c.spectrum.eps_max}, {"n_eps", c.spectrum.n_eps}};
    if (command == "husimi")
        e["husimi"] = {{"times", c.husimi.times}, {"n_theta", c.husimi.n_theta}, {"n_phi", c.husimi.n_phi}};
    if (c.revival.enabled)
        e["revival"] = {{"enabled", true}, {"horizon", c.revival.horizon}, {"sample_dt", c.revival.sample_dt}};
    c.echo = e;
    return c;
}

}  // namespace lzsim

#endif  // LZSIM_CONFIG_HPP
