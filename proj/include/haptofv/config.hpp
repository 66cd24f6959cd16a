#pragma once

// Flat `key = value` run configuration: zero-dependency, diffable, strict.
// Nested keys use dots (grid.n0 = 256); `#` starts a comment; unknown or
// duplicate keys are hard errors so typos never silently fall back to
// defaults.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "haptofv/grid.hpp"
#include "haptofv/model.hpp"
#include "haptofv/scheme.hpp"

namespace haptofv {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    int dim = 1;
    double lo0 = -5.0, hi0 = 5.0;
    index_t n0 = 512;
    double lo1 = 0.0, hi1 = 1.0;
    index_t n1 = 64;

    Grid build() const {
        return dim == 1 ? Grid::line(lo0, hi0, n0)
                        : Grid::box(lo0, hi0, n0, lo1, hi1, n1);
    }
};

struct IcSpec {
    enum class Kind {
        homogeneous,
        gaussian_bump,
        step_ecm,
        bump_on_step,
        from_file
    };
    Kind kind = Kind::homogeneous;
    // homogeneous
    double psi = 0.1, phi = 0.5;
    // gaussian_bump (cells): amplitude * exp(-|x - center|^2 / (2 width^2))
    double center = 0.0, center1 = 0.0, width = 1.0, amplitude = 0.5;
    double phi_background = 0.5;
    // step_ecm (fibers): tanh-smoothed step along the first axis
    double phi_left = 0.1, phi_right = 0.6, psi_uniform = 0.1;
    double step_center = 0.0, step_width = 0.5;
    // from_file
    std::string path;
};

struct OutputSpec {
    index_t stride = 1;
    std::string dir = "out";
    double tail_tolerance = 1e-10;
    std::vector<double> snapshots;  // extra times beyond t = 0 and t_end
};

struct SweepSpec {
    enum class Mode { smooth_bump, seeded_noise };
    std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> epsilons{1e-1, 1e-2, 1e-3, 1e-4};
    Mode mode = Mode::smooth_bump;
    double phi_cut = 1e-3;
};

struct RefineSpec {
    int levels = 4;
};

struct RunConfig {
    GridSpec grid;
    ModelParams model;
    IcSpec ic;
    SchemeConfig scheme;
    OutputSpec output;
    SweepSpec sweep;
    RefineSpec refine;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

inline std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Raw parsed key/value pairs with consumption tracking for strictness.
class KeyValues {
  public:
    KeyValues(const std::string& text, const std::string& origin)
        : origin_(origin) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                  ": expected `key = value`, got: " + line);
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                  ": empty key");
            if (entries_.count(key))
                throw ConfigError(origin_ + ":" + std::to_string(lineno) +
                                  ": duplicate key `" + key + "`");
            entries_[key] = value;
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return dflt;
        consumed_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double dflt) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return dflt;
        consumed_.insert(key);
        return parse_double(key, it->second);
    }

    std::int64_t get_int(const std::string& key, std::int64_t dflt) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return dflt;
        consumed_.insert(key);
        return parse_int(key, it->second);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return dflt;
        consumed_.insert(key);
        const std::string& v = it->second;
        char* end = nullptr;
        errno = 0;
        const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
        if (errno != 0 || end != v.c_str() + v.size() || v.empty() ||
            v[0] == '-')
            throw ConfigError(origin_ + ": key `" + key +
                              "`: not an unsigned integer: " + v);
        return parsed;
    }

    std::vector<double> get_double_list(const std::string& key,
                                        std::vector<double> dflt) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return dflt;
        consumed_.insert(key);
        std::vector<double> out;
        std::string item;
        std::istringstream in(it->second);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(parse_double(key, item));
        }
        return out;
    }

    void reject_unconsumed() const {
        for (const auto& [key, value] : entries_)
            if (!consumed_.count(key))
                throw ConfigError(origin_ + ": unknown key `" + key + "`");
    }

  private:
    double parse_double(const std::string& key, const std::string& v) const {
        char* end = nullptr;
        errno = 0;
        const double parsed = std::strtod(v.c_str(), &end);
        if (errno != 0 || end != v.c_str() + v.size() || v.empty())
            throw ConfigError(origin_ + ": key `" + key +
                              "`: not a number: " + v);
        return parsed;
    }
    std::int64_t parse_int(const std::string& key, const std::string& v) const {
        char* end = nullptr;
        errno = 0;
        const long long parsed = std::strtoll(v.c_str(), &end, 10);
        if (errno != 0 || end != v.c_str() + v.size() || v.empty())
            throw ConfigError(origin_ + ": key `" + key +
                              "`: not an integer: " + v);
        return parsed;
    }

    std::string origin_;
    std::map<std::string, std::string> entries_;
    std::set<std::string> consumed_;
};

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>") {
    detail::KeyValues kv(text, origin);
    RunConfig cfg;
    cfg.config_hash = fnv1a_hash(text);

    cfg.grid.dim = static_cast<int>(kv.get_int("grid.dim", 1));
    if (cfg.grid.dim != 1 && cfg.grid.dim != 2)
        throw ConfigError(origin + ": grid.dim must be 1 or 2");
    cfg.grid.lo0 = kv.get_double("grid.lo0", cfg.grid.lo0);
    cfg.grid.hi0 = kv.get_double("grid.hi0", cfg.grid.hi0);
    cfg.grid.n0 = kv.get_int("grid.n0", cfg.grid.n0);
    cfg.grid.lo1 = kv.get_double("grid.lo1", cfg.grid.lo1);
    cfg.grid.hi1 = kv.get_double("grid.hi1", cfg.grid.hi1);
    cfg.grid.n1 = kv.get_int("grid.n1", cfg.grid.n1);

    cfg.model.alpha = kv.get_double("model.alpha", cfg.model.alpha);
    cfg.model.D = kv.get_double("model.D", cfg.model.D);
    cfg.model.R0 = kv.get_double("model.R0", cfg.model.R0);
    cfg.model.gamma = kv.get_double("model.gamma", cfg.model.gamma);
    cfg.model.delta = kv.get_double("model.delta", cfg.model.delta);
    {
        const std::string law = kv.get_string("model.law", "quadratic");
        if (law == "quadratic") {
            cfg.model.law.kind = SaturationLaw::Kind::quadratic;
        } else if (law == "window") {
            cfg.model.law.kind = SaturationLaw::Kind::window;
        } else {
            throw ConfigError(origin +
                              ": model.law must be quadratic or window, got " +
                              law);
        }
        cfg.model.law.phi_min =
            kv.get_double("model.phi_min", cfg.model.law.phi_min);
        cfg.model.law.phi_th =
            kv.get_double("model.phi_th", cfg.model.law.phi_th);
    }

    {
        const std::string kind = kv.get_string("ic.kind", "homogeneous");
        if (kind == "homogeneous")
            cfg.ic.kind = IcSpec::Kind::homogeneous;
        else if (kind == "gaussian_bump")
            cfg.ic.kind = IcSpec::Kind::gaussian_bump;
        else if (kind == "step_ecm")
            cfg.ic.kind = IcSpec::Kind::step_ecm;
        else if (kind == "bump_on_step")
            cfg.ic.kind = IcSpec::Kind::bump_on_step;
        else if (kind == "from_file")
            cfg.ic.kind = IcSpec::Kind::from_file;
        else
            throw ConfigError(origin + ": unknown ic.kind `" + kind + "`");
    }
    cfg.ic.psi = kv.get_double("ic.psi", cfg.ic.psi);
    cfg.ic.phi = kv.get_double("ic.phi", cfg.ic.phi);
    cfg.ic.center = kv.get_double("ic.center", cfg.ic.center);
    cfg.ic.center1 = kv.get_double("ic.center1", cfg.ic.center1);
    cfg.ic.width = kv.get_double("ic.width", cfg.ic.width);
    cfg.ic.amplitude = kv.get_double("ic.amplitude", cfg.ic.amplitude);
    cfg.ic.phi_background =
        kv.get_double("ic.phi_background", cfg.ic.phi_background);
    cfg.ic.phi_left = kv.get_double("ic.phi_left", cfg.ic.phi_left);
    cfg.ic.phi_right = kv.get_double("ic.phi_right", cfg.ic.phi_right);
    cfg.ic.psi_uniform = kv.get_double("ic.psi_uniform", cfg.ic.psi_uniform);
    cfg.ic.step_center = kv.get_double("ic.step_center", cfg.ic.step_center);
    cfg.ic.step_width = kv.get_double("ic.step_width", cfg.ic.step_width);
    cfg.ic.path = kv.get_string("ic.path", cfg.ic.path);

    cfg.scheme.cfl_safety =
        kv.get_double("scheme.cfl_safety", cfg.scheme.cfl_safety);
    cfg.scheme.t_end = kv.get_double("scheme.t_end", cfg.scheme.t_end);
    cfg.scheme.max_dt = kv.get_double("scheme.max_dt", cfg.scheme.max_dt);
    cfg.scheme.negativity_tolerance = kv.get_double(
        "scheme.negativity_tolerance", cfg.scheme.negativity_tolerance);

    cfg.output.stride = kv.get_int("output.stride", cfg.output.stride);
    cfg.output.dir = kv.get_string("output.dir", cfg.output.dir);
    cfg.output.tail_tolerance =
        kv.get_double("output.tail_tolerance", cfg.output.tail_tolerance);
    cfg.output.snapshots = kv.get_double_list("output.snapshots", {});

    cfg.sweep.deltas = kv.get_double_list("sweep.deltas", cfg.sweep.deltas);
    cfg.sweep.epsilons =
        kv.get_double_list("sweep.epsilons", cfg.sweep.epsilons);
    {
        const std::string mode = kv.get_string("sweep.mode", "smooth_bump");
        if (mode == "smooth_bump")
            cfg.sweep.mode = SweepSpec::Mode::smooth_bump;
        else if (mode == "seeded_noise")
            cfg.sweep.mode = SweepSpec::Mode::seeded_noise;
        else
            throw ConfigError(origin + ": unknown sweep.mode `" + mode + "`");
    }
    cfg.sweep.phi_cut = kv.get_double("sweep.phi_cut", cfg.sweep.phi_cut);

    cfg.refine.levels =
        static_cast<int>(kv.get_int("refine.levels", cfg.refine.levels));

    cfg.seed = kv.get_u64("seed", cfg.seed);

    kv.reject_unconsumed();

    // basic structural validation (model params validated by the model layer)
    if (cfg.grid.n0 < 2 || (cfg.grid.dim == 2 && cfg.grid.n1 < 2))
        throw ConfigError(origin + ": grid needs at least 2 cells per axis");
    if (!(cfg.grid.lo0 < cfg.grid.hi0) ||
        (cfg.grid.dim == 2 && !(cfg.grid.lo1 < cfg.grid.hi1)))
        throw ConfigError(origin + ": grid bounds must satisfy lo < hi");
    if (!(cfg.scheme.t_end > 0.0))
        throw ConfigError(origin + ": scheme.t_end must be positive");
    if (!(cfg.scheme.max_dt > 0.0))
        throw ConfigError(origin + ": scheme.max_dt must be positive");
    if (!(cfg.scheme.cfl_safety > 0.0) || cfg.scheme.cfl_safety > 1.0)
        throw ConfigError(origin + ": scheme.cfl_safety must be in (0, 1]");
    if (cfg.output.stride < 1)
        throw ConfigError(origin + ": output.stride must be >= 1");
    if (cfg.refine.levels < 3)
        throw ConfigError(origin + ": refine.levels must be >= 3");
    if (cfg.ic.kind == IcSpec::Kind::from_file && cfg.ic.path.empty())
        throw ConfigError(origin + ": ic.path required for ic.kind=from_file");
    validate(cfg.model);
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("config file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

inline std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace haptofv
