#pragma once

// Batch experiments: the regularization sweep (delta -> 0), the initial-data
// perturbation sweep (eps -> 0), and a grid refinement study.
//
// Both sweeps advance their whole ensemble in lock-step: every run takes the
// same time step (the minimum of the per-run stable steps), and a rejection
// in any run halves the step for all of them.  This makes runs with
// identical dynamics bit-identical, so trivially equal ensembles report
// distances of exactly zero.  The refinement study instead runs each level
// independently, halving the step ceiling with the mesh.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "haptofv/config.hpp"
#include "haptofv/csv.hpp"
#include "haptofv/grid.hpp"
#include "haptofv/model.hpp"
#include "haptofv/run.hpp"
#include "haptofv/scheme.hpp"

namespace haptofv {

struct SweepPoint {
    double parameter = 0.0;
    std::vector<double> values;
};

struct AssertionRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct SweepResult {
    std::string kind;
    std::vector<std::string> columns;
    std::vector<SweepPoint> points;
    std::vector<std::pair<std::string, double>> orders;
    std::vector<AssertionRow> assertions;
    Metadata extra;
    std::optional<State> extrapolated;
    bool failed = false;
    std::string failure;

    const AssertionRow* find_assertion(const std::string& name) const {
        for (const auto& a : assertions)
            if (a.name == name) return &a;
        return nullptr;
    }
    double value(std::size_t point, const std::string& column) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == column) return points.at(point).values.at(k);
        throw std::out_of_range("no sweep column named " + column);
    }
    const std::pair<std::string, double>* find_order(
        const std::string& name) const {
        for (const auto& o : orders)
            if (o.first == name) return &o;
        return nullptr;
    }
};

namespace detail {

// ---- distances -------------------------------------------------------------

inline GridFunction sqrtphi_psi(const State& s) {
    GridFunction out(s.psi.grid());
    for (index_t c = 0; c < out.size(); ++c)
        out[c] = std::sqrt(s.phi[c]) * s.psi[c];
    return out;
}

inline double lp_distance(const GridFunction& a, const GridFunction& b,
                          double p) {
    return lp_norm(a - b, p);
}

// L^p of (a - b) restricted to cells where mask exceeds the cut.
inline double lp_distance_where(const GridFunction& a, const GridFunction& b,
                                const GridFunction& mask, double cut,
                                double p) {
    check_same_grid(a, b, "lp_distance_where");
    check_same_grid(a, mask, "lp_distance_where");
    CompensatedSum acc;
    for (index_t c = 0; c < a.size(); ++c) {
        if (!(mask[c] > cut)) continue;
        const double d = std::abs(a[c] - b[c]);
        acc.add(p == 1.0 ? d : (p == 2.0 ? d * d : d * d * d));
    }
    const double total = acc.value() * a.grid().cell_volume();
    if (p == 1.0) return total;
    return p == 2.0 ? std::sqrt(total) : std::cbrt(total);
}

// ---- weak-convergence proxy battery ----------------------------------------

inline std::array<GridFunction, 5> test_function_battery(const Grid& g) {
    const double cx = 0.5 * (g.lo(0) + g.hi(0));
    const double cy = g.dim() == 2 ? 0.5 * (g.lo(1) + g.hi(1)) : 0.0;
    const double r = 0.25 * (g.hi(0) - g.lo(0));
    auto bump = [&](double x, double y) {
        const double s =
            ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
        const double t = std::max(1.0 - s, 0.0);
        return t * t;
    };
    if (g.dim() == 1) {
        return {GridFunction(g, 1.0), sample(g, [](double x) { return x; }),
                sample(g, [](double x) { return 0.5 * x * x; }),
                sample(g, [](double x) { return std::exp(-0.5 * x * x); }),
                sample(g, [&](double x) { return bump(x, cy); })};
    }
    return {GridFunction(g, 1.0),
            sample(g, [](double x, double) { return x; }),
            sample(g,
                   [](double x, double y) { return 0.5 * (x * x + y * y); }),
            sample(g,
                   [](double x, double y) {
                       return std::exp(-0.5 * (x * x + y * y));
                   }),
            sample(g, bump)};
}

// ---- lock-step ensemble ----------------------------------------------------

struct EnsembleRun {
    State cur;
    State buf;
    FaceField scratch;
    ModelParams params;
    std::int64_t floored = 0;
    std::array<CompensatedSum, 5> pairings;
    std::array<double, 5> last_pairing{};

    EnsembleRun(const InitialData& init, const ModelParams& p)
        : cur{init.psi0, init.phi0, 0.0},
          buf{GridFunction(init.psi0.grid()), GridFunction(init.psi0.grid()),
              0.0},
          scratch(init.psi0.grid()),
          params(p) {}
};

// Advance all runs to t_end under a shared step.  Returns false (with
// `failure` set) if the ensemble step collapses or the step budget runs out.
inline bool advance_ensemble(std::vector<EnsembleRun>& runs,
                             const SchemeConfig& cfg, double t_end,
                             const std::array<GridFunction, 5>* chis,
                             std::string* failure) {
    if (runs.empty()) return true;
    if (chis)
        for (auto& run : runs)
            for (int k = 0; k < 5; ++k)
                run.last_pairing[k] = weighted_integral(run.cur.psi, (*chis)[k]);

    constexpr std::int64_t max_steps = 20'000'000;
    std::int64_t steps = 0;
    while (true) {
        const double t = runs.front().cur.time;
        const double gap = t_end - t;
        if (gap <= 1e-12 * std::max(1.0, t_end)) {
            for (auto& run : runs) run.cur.time = t_end;
            return true;
        }
        double dt = gap;
        for (auto& run : runs)
            dt = std::min(dt, stable_dt(run.cur, run.params, cfg));

        int halvings = 0;
        std::vector<std::int64_t> floored(runs.size(), 0);
        while (true) {
            bool ok = true;
            for (std::size_t r = 0; r < runs.size(); ++r) {
                floored[r] = 0;
                if (!try_step(runs[r].cur, runs[r].buf, runs[r].params, dt,
                              cfg.negativity_tolerance, runs[r].scratch,
                              &floored[r])) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
            if (++halvings > 10) {
                if (failure)
                    *failure = "ensemble step rejected after 10 halvings at t=" +
                               std::to_string(t);
                return false;
            }
            dt *= 0.5;
        }
        for (std::size_t r = 0; r < runs.size(); ++r) {
            std::swap(runs[r].cur, runs[r].buf);
            runs[r].floored += floored[r];
            if (chis) {
                for (int k = 0; k < 5; ++k) {
                    const double p =
                        weighted_integral(runs[r].cur.psi, (*chis)[k]);
                    runs[r].pairings[k].add(
                        0.5 * dt * (runs[r].last_pairing[k] + p));
                    runs[r].last_pairing[k] = p;
                }
            }
        }
        if (++steps >= max_steps) {
            if (failure) *failure = "ensemble step budget exhausted (2e7 steps)";
            return false;
        }
    }
}

// Ordinary least-squares slope of log(value) against log(parameter), over
// rows with positive value and parameter; NaN when fewer than two usable rows.
inline double log_log_slope(const std::vector<double>& params,
                            const std::vector<double>& values) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!(params[k] > 0.0) || !(values[k] > 0.0)) continue;
        const double x = std::log(params[k]), y = std::log(values[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

// Monotone-decrease audit: strictly decreasing, except that exact-zero ties
// are allowed (identical dynamics legitimately report zero everywhere).
inline AssertionRow monotone_decreasing(const std::string& name,
                                        const std::vector<double>& values) {
    AssertionRow row;
    row.name = name;
    row.pass = true;
    std::string detail = "values:";
    for (std::size_t k = 0; k < values.size(); ++k) {
        detail += " " + format_double(values[k]);
        if (k == 0) continue;
        const bool tie_at_zero = values[k - 1] == 0.0 && values[k] == 0.0;
        if (!(values[k] < values[k - 1] || tie_at_zero)) row.pass = false;
    }
    row.detail = detail;
    return row;
}

inline void require_descending_positive(const std::vector<double>& xs,
                                        const char* what, bool allow_zero) {
    if (xs.size() < 3)
        throw std::invalid_argument(std::string(what) +
                                    ": need at least 3 sweep values");
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const bool positive = xs[k] > 0.0 || (allow_zero && xs[k] == 0.0);
        if (!positive)
            throw std::invalid_argument(std::string(what) +
                                        ": sweep values must be positive");
        if (k > 0 && !(xs[k] < xs[k - 1]))
            throw std::invalid_argument(std::string(what) +
                                        ": sweep values must be descending");
    }
}

inline void require_admissible(const InitialData& init, const std::string& who) {
    ValidationReport v = validate_initial_data(init);
    if (!v.passed())
        throw std::invalid_argument(who + ": initial data inadmissible: " +
                                    v.failures.front().check + ": " +
                                    v.failures.front().message);
}

}  // namespace detail

// ---- delta sweep -----------------------------------------------------------

inline SweepResult delta_sweep(const RunConfig& base) {
    const std::vector<double>& deltas = base.sweep.deltas;
    detail::require_descending_positive(deltas, "delta_sweep", false);

    const InitialData init = build_initial_data(base);
    detail::require_admissible(init, "delta_sweep");
    const Grid& g = init.psi0.grid();
    const auto chis = detail::test_function_battery(g);

    std::vector<detail::EnsembleRun> runs;
    runs.reserve(deltas.size() + 1);
    for (double d : deltas) {
        ModelParams p = base.model;
        p.delta = d;
        runs.emplace_back(init, p);
    }
    ModelParams degenerate = base.model;
    degenerate.delta = 0.0;
    runs.emplace_back(init, degenerate);

    SweepResult result;
    result.kind = "delta";
    result.columns = {"l1_dpsi", "l2_dpsi",      "l3_dpsi",      "l1_dphi",
                      "l2_dphi", "l1_dsqphipsi", "l2_dsqphipsi", "weak_1",
                      "weak_2",  "weak_3",       "weak_4",       "weak_5"};

    std::string failure;
    if (!detail::advance_ensemble(runs, base.scheme, base.scheme.t_end, &chis,
                                  &failure)) {
        result.failed = true;
        result.failure = failure;
        return result;
    }

    auto distances = [&](const detail::EnsembleRun& a,
                         const detail::EnsembleRun& b) {
        std::vector<double> v;
        v.push_back(detail::lp_distance(a.cur.psi, b.cur.psi, 1.0));
        v.push_back(detail::lp_distance(a.cur.psi, b.cur.psi, 2.0));
        v.push_back(detail::lp_distance(a.cur.psi, b.cur.psi, 3.0));
        v.push_back(detail::lp_distance(a.cur.phi, b.cur.phi, 1.0));
        v.push_back(detail::lp_distance(a.cur.phi, b.cur.phi, 2.0));
        const GridFunction sa = detail::sqrtphi_psi(a.cur);
        const GridFunction sb = detail::sqrtphi_psi(b.cur);
        v.push_back(detail::lp_distance(sa, sb, 1.0));
        v.push_back(detail::lp_distance(sa, sb, 2.0));
        for (int k = 0; k < 5; ++k)
            v.push_back(
                std::abs(a.pairings[k].value() - b.pairings[k].value()));
        return v;
    };

    const std::size_t m = deltas.size();
    for (std::size_t i = 0; i + 1 < m; ++i)
        result.points.push_back({deltas[i], distances(runs[i], runs[i + 1])});
    result.points.push_back({0.0, distances(runs[m], runs[m - 1])});

    // orders over the consecutive-pair rows (exclude the trailing delta=0 row)
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
        std::vector<double> params, values;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            params.push_back(result.points[i].parameter);
            values.push_back(result.points[i].values[c]);
        }
        const double slope = detail::log_log_slope(params, values);
        if (std::isfinite(slope))
            result.orders.emplace_back(result.columns[c], slope);
    }

    {
        std::vector<double> l1psi, l1phi;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            l1psi.push_back(result.points[i].values[0]);
            l1phi.push_back(result.points[i].values[3]);
        }
        result.assertions.push_back(
            detail::monotone_decreasing("cauchy_l1_dpsi_decreasing", l1psi));
        result.assertions.push_back(
            detail::monotone_decreasing("cauchy_l1_dphi_decreasing", l1phi));
    }
    {
        // the degenerate run must sit closer to the smallest-delta run than
        // the largest-delta run does
        const double d_zero =
            detail::lp_distance(runs[m].cur.psi, runs[m - 1].cur.psi, 1.0);
        const double d_far =
            detail::lp_distance(runs[0].cur.psi, runs[m - 1].cur.psi, 1.0);
        AssertionRow row;
        row.name = "delta0_nearest_smallest";
        row.pass = d_zero < d_far || (d_zero == 0.0 && d_far == 0.0);
        row.detail = "L1(delta0 vs smallest) = " + format_double(d_zero) +
                     ", L1(largest vs smallest) = " + format_double(d_far);
        result.assertions.push_back(row);
    }

    // linear-in-delta extrapolation to delta -> 0 from the two smallest runs
    {
        const double d1 = deltas[m - 2], d2 = deltas[m - 1];
        const double f = d2 / (d1 - d2);
        State ext{GridFunction(g), GridFunction(g), base.scheme.t_end};
        for (index_t c = 0; c < ext.psi.size(); ++c) {
            ext.psi[c] = runs[m - 1].cur.psi[c] -
                         f * (runs[m - 2].cur.psi[c] - runs[m - 1].cur.psi[c]);
            ext.phi[c] = runs[m - 1].cur.phi[c] -
                         f * (runs[m - 2].cur.phi[c] - runs[m - 1].cur.phi[c]);
        }
        result.extra.emplace_back(
            "extrapolation_l1_psi",
            format_double(detail::lp_distance(runs[m].cur.psi, ext.psi, 1.0)));
        result.extra.emplace_back(
            "extrapolation_l1_phi",
            format_double(detail::lp_distance(runs[m].cur.phi, ext.phi, 1.0)));
        result.extrapolated = std::move(ext);
    }
    return result;
}

// ---- perturbation sweep ----------------------------------------------------

namespace detail {

struct PerturbationFields {
    GridFunction psi_dir;
    GridFunction phi_dir;
};

inline PerturbationFields perturbation_direction(const Grid& g,
                                                 SweepSpec::Mode mode,
                                                 std::uint64_t seed) {
    if (mode == SweepSpec::Mode::smooth_bump) {
        const double extent = g.hi(0) - g.lo(0);
        const double cpsi = g.lo(0) + 0.35 * extent;
        const double cphi = g.lo(0) + 0.65 * extent;
        const double sigma = 0.08 * extent;
        auto bump = [&](double c) {
            return [c, sigma](double x) {
                const double r = x - c;
                return std::exp(-r * r / (2.0 * sigma * sigma));
            };
        };
        if (g.dim() == 1)
            return {sample(g, bump(cpsi)), sample(g, bump(cphi))};
        auto bump2 = [&](double c) {
            return [c, sigma](double x, double y) {
                const double r = x - c;
                return std::exp(-(r * r + y * y) / (2.0 * sigma * sigma));
            };
        };
        return {sample(g, bump2(cpsi)), sample(g, bump2(cphi))};
    }
    // seeded noise: one fixed field per run, scaled by eps downstream
    std::mt19937_64 eng(seed);
    auto uniform_pm1 = [&]() {
        return 2.0 * ((eng() >> 11) * 0x1.0p-53) - 1.0;
    };
    GridFunction psi_dir(g), phi_dir(g);
    for (index_t c = 0; c < psi_dir.size(); ++c) psi_dir[c] = uniform_pm1();
    for (index_t c = 0; c < phi_dir.size(); ++c) phi_dir[c] = uniform_pm1();
    return {std::move(psi_dir), std::move(phi_dir)};
}

inline InitialData perturb(const InitialData& base,
                           const PerturbationFields& dir, double eps) {
    InitialData out = base;
    for (index_t c = 0; c < out.psi0.size(); ++c) {
        out.psi0[c] = std::max(base.psi0[c] + eps * dir.psi_dir[c], 0.0);
        out.phi0[c] = std::clamp(base.phi0[c] + eps * dir.phi_dir[c], 0.0,
                                 2.0 / 3.0);
    }
    return out;
}

}  // namespace detail

inline SweepResult perturbation_sweep(const RunConfig& base) {
    const std::vector<double>& epsilons = base.sweep.epsilons;
    detail::require_descending_positive(epsilons, "perturbation_sweep", true);

    const InitialData baseline = build_initial_data(base);
    detail::require_admissible(baseline, "perturbation_sweep baseline");
    const Grid& g = baseline.psi0.grid();
    const auto chis = detail::test_function_battery(g);
    const auto dir =
        detail::perturbation_direction(g, base.sweep.mode, base.seed);

    double phi0_min = baseline.phi0[0];
    for (index_t c = 0; c < baseline.phi0.size(); ++c)
        phi0_min = std::min(phi0_min, baseline.phi0[c]);

    std::vector<detail::EnsembleRun> runs;
    runs.reserve(epsilons.size() + 1);
    runs.emplace_back(baseline, base.model);
    std::vector<std::vector<double>> initial_scales;
    for (double eps : epsilons) {
        InitialData pert = detail::perturb(baseline, dir, eps);
        ValidationReport v = validate_initial_data(pert);
        if (!v.passed())
            throw std::invalid_argument(
                "perturbation_sweep: eps=" + format_double(eps) +
                " violates admissibility: " + v.failures.front().check + ": " +
                v.failures.front().message);
        initial_scales.push_back(
            {detail::lp_distance(pert.phi0, baseline.phi0, 1.0),
             detail::lp_distance(detail::sqrtphi_psi({pert.psi0, pert.phi0, 0}),
                                 detail::sqrtphi_psi(
                                     {baseline.psi0, baseline.phi0, 0}),
                                 1.0)});
        runs.emplace_back(pert, base.model);
    }

    SweepResult result;
    result.kind = "perturbation";
    result.columns = {"l1_dphi",      "l2_dphi",      "l1_dsqphipsi",
                      "l2_dsqphipsi", "l1_dpsi",      "l2_dpsi",
                      "l3_dpsi",      "l1_dpsi_cut",  "l2_dpsi_cut",
                      "l3_dpsi_cut",  "weak_1",       "weak_2",
                      "weak_3",       "weak_4",       "weak_5"};

    std::string failure;
    if (!detail::advance_ensemble(runs, base.scheme, base.scheme.t_end, &chis,
                                  &failure)) {
        result.failed = true;
        result.failure = failure;
        return result;
    }

    const detail::EnsembleRun& ref = runs.front();
    const GridFunction ref_sp = detail::sqrtphi_psi(ref.cur);
    const double cut = base.sweep.phi_cut;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        const detail::EnsembleRun& run = runs[e + 1];
        std::vector<double> v;
        v.push_back(detail::lp_distance(run.cur.phi, ref.cur.phi, 1.0));
        v.push_back(detail::lp_distance(run.cur.phi, ref.cur.phi, 2.0));
        const GridFunction sp = detail::sqrtphi_psi(run.cur);
        v.push_back(detail::lp_distance(sp, ref_sp, 1.0));
        v.push_back(detail::lp_distance(sp, ref_sp, 2.0));
        v.push_back(detail::lp_distance(run.cur.psi, ref.cur.psi, 1.0));
        v.push_back(detail::lp_distance(run.cur.psi, ref.cur.psi, 2.0));
        v.push_back(detail::lp_distance(run.cur.psi, ref.cur.psi, 3.0));
        v.push_back(detail::lp_distance_where(run.cur.psi, ref.cur.psi,
                                              ref.cur.phi, cut, 1.0));
        v.push_back(detail::lp_distance_where(run.cur.psi, ref.cur.psi,
                                              ref.cur.phi, cut, 2.0));
        v.push_back(detail::lp_distance_where(run.cur.psi, ref.cur.psi,
                                              ref.cur.phi, cut, 3.0));
        for (int k = 0; k < 5; ++k)
            v.push_back(
                std::abs(run.pairings[k].value() - ref.pairings[k].value()));
        result.points.push_back({epsilons[e], v});
    }

    for (std::size_t c = 0; c < result.columns.size(); ++c) {
        std::vector<double> params, values;
        for (const auto& pt : result.points) {
            params.push_back(pt.parameter);
            values.push_back(pt.values[c]);
        }
        const double slope = detail::log_log_slope(params, values);
        if (std::isfinite(slope))
            result.orders.emplace_back(result.columns[c], slope);
    }

    auto column = [&](const std::string& name) {
        std::vector<double> out;
        for (std::size_t pt = 0; pt < result.points.size(); ++pt)
            out.push_back(result.value(pt, name));
        return out;
    };
    for (const char* name :
         {"l1_dphi", "l2_dphi", "l1_dsqphipsi", "l2_dsqphipsi", "l1_dpsi_cut",
          "l2_dpsi_cut", "l3_dpsi_cut"})
        result.assertions.push_back(detail::monotone_decreasing(
            std::string("monotone_") + name, column(name)));
    {
        AssertionRow row;
        row.name = "monotone_weak_pairings";
        row.pass = true;
        for (int k = 1; k <= 5; ++k) {
            AssertionRow sub = detail::monotone_decreasing(
                "weak", column("weak_" + std::to_string(k)));
            if (!sub.pass) row.pass = false;
            row.detail += (k > 1 ? "; " : "") + std::to_string(k) + ": " +
                          sub.detail;
        }
        result.assertions.push_back(row);
    }
    {
        // final distances at the smallest eps stay within 10x the size of the
        // perturbation they started from
        const std::size_t last = epsilons.size() - 1;
        const double scale_phi = initial_scales[last][0];
        const double scale_sp = initial_scales[last][1];
        const double final_phi = result.points[last].values[0];
        const double final_sp = result.points[last].values[2];
        AssertionRow a;
        a.name = "scale_l1_dphi";
        a.pass = final_phi <= 10.0 * scale_phi;
        a.detail = "final " + format_double(final_phi) + " vs 10 x initial " +
                   format_double(scale_phi);
        result.assertions.push_back(a);
        AssertionRow b;
        b.name = "scale_l1_dsqphipsi";
        b.pass = final_sp <= 10.0 * scale_sp;
        b.detail = "final " + format_double(final_sp) + " vs 10 x initial " +
                   format_double(scale_sp);
        result.assertions.push_back(b);
    }
    {
        AssertionRow row;
        if (phi0_min > 0.0) {
            row = detail::monotone_decreasing("monotone_l1_dpsi_global",
                                              column("l1_dpsi"));
            row.detail = "asserted (min phi0 = " + format_double(phi0_min) +
                         " > 0); " + row.detail;
        } else {
            row.name = "monotone_l1_dpsi_global";
            row.pass = true;
            row.detail =
                "not asserted: phi0 has vacuum (min phi0 = 0); only "
                "fiber-weighted convergence is claimed there";
        }
        result.assertions.push_back(row);
    }

    result.extra.emplace_back("phi_cut", format_double(cut));
    result.extra.emplace_back("phi0_min", format_double(phi0_min));
    result.extra.emplace_back(
        "mode", base.sweep.mode == SweepSpec::Mode::smooth_bump
                    ? "smooth_bump"
                    : "seeded_noise");
    return result;
}

// ---- refinement study ------------------------------------------------------

namespace detail {

// Block-average a fine-grid function onto a coarser grid whose cell counts
// divide the fine ones exactly.
inline GridFunction restrict_to(const Grid& coarse, const GridFunction& fine) {
    const Grid& gf = fine.grid();
    if (gf.dim() != coarse.dim())
        throw std::invalid_argument("restrict_to: dimension mismatch");
    const index_t f0 = gf.cells(0) / coarse.cells(0);
    const index_t f1 = gf.dim() == 2 ? gf.cells(1) / coarse.cells(1) : 1;
    if (f0 * coarse.cells(0) != gf.cells(0) ||
        (gf.dim() == 2 && f1 * coarse.cells(1) != gf.cells(1)))
        throw std::invalid_argument(
            "restrict_to: fine cells must be a multiple of coarse cells");
    GridFunction out(coarse);
    const double inv = 1.0 / static_cast<double>(f0 * f1);
    for (index_t j = 0; j < (coarse.dim() == 2 ? coarse.cells(1) : 1); ++j) {
        for (index_t i = 0; i < coarse.cells(0); ++i) {
            CompensatedSum block;
            for (index_t jj = 0; jj < f1; ++jj)
                for (index_t ii = 0; ii < f0; ++ii)
                    block.add(fine[gf.flatten(i * f0 + ii, j * f1 + jj)]);
            out[coarse.flatten(i, j)] = block.value() * inv;
        }
    }
    return out;
}

}  // namespace detail

inline SweepResult refinement_study(const RunConfig& base) {
    const int levels = base.refine.levels;
    if (levels < 3)
        throw std::invalid_argument("refinement_study: need at least 3 levels");
    if (base.ic.kind == IcSpec::Kind::from_file)
        throw std::invalid_argument(
            "refinement_study: needs an analytic initial condition (the "
            "levels sample it on successively finer grids)");

    SweepResult result;
    result.kind = "refinement";
    result.columns = {"l1_dpsi",      "l2_dpsi",      "l3_dpsi",
                      "l1_dphi",      "l2_dphi",      "l1_dsqphipsi",
                      "l2_dsqphipsi", "l1_psi_vs_finest", "l1_phi_vs_finest"};

    std::vector<State> finals;
    std::vector<Grid> grids;
    for (int level = 0; level < levels; ++level) {
        RunConfig cfg = base;
        const index_t scale = index_t(1) << level;
        cfg.grid.n0 = base.grid.n0 * scale;
        if (cfg.grid.dim == 2) cfg.grid.n1 = base.grid.n1 * scale;
        cfg.scheme.max_dt = base.scheme.max_dt / static_cast<double>(scale);

        const InitialData init = build_initial_data(cfg);
        detail::require_admissible(init, "refinement_study");
        std::vector<detail::EnsembleRun> one;
        one.emplace_back(init, cfg.model);
        std::string failure;
        if (!detail::advance_ensemble(one, cfg.scheme, cfg.scheme.t_end,
                                      nullptr, &failure)) {
            result.failed = true;
            result.failure = "level " + std::to_string(level) + ": " + failure;
            return result;
        }
        grids.push_back(init.psi0.grid());
        finals.push_back(std::move(one.front().cur));
    }

    const State& finest = finals.back();
    for (int level = 0; level + 1 < levels; ++level) {
        const Grid& gc = grids[level];
        const GridFunction next_psi =
            detail::restrict_to(gc, finals[level + 1].psi);
        const GridFunction next_phi =
            detail::restrict_to(gc, finals[level + 1].phi);
        const GridFunction fin_psi = detail::restrict_to(gc, finest.psi);
        const GridFunction fin_phi = detail::restrict_to(gc, finest.phi);

        std::vector<double> v;
        v.push_back(detail::lp_distance(finals[level].psi, next_psi, 1.0));
        v.push_back(detail::lp_distance(finals[level].psi, next_psi, 2.0));
        v.push_back(detail::lp_distance(finals[level].psi, next_psi, 3.0));
        v.push_back(detail::lp_distance(finals[level].phi, next_phi, 1.0));
        v.push_back(detail::lp_distance(finals[level].phi, next_phi, 2.0));
        const GridFunction sp_c = detail::sqrtphi_psi(finals[level]);
        const GridFunction sp_n =
            detail::sqrtphi_psi({next_psi, next_phi, finest.time});
        v.push_back(detail::lp_distance(sp_c, sp_n, 1.0));
        v.push_back(detail::lp_distance(sp_c, sp_n, 2.0));
        v.push_back(detail::lp_distance(finals[level].psi, fin_psi, 1.0));
        v.push_back(detail::lp_distance(finals[level].phi, fin_phi, 1.0));
        result.points.push_back({gc.spacing(0), v});
    }

    // observed orders from consecutive-level distances (unbiased, unlike
    // distances to the finest level, whose own error biases the ratio)
    for (std::size_t c = 0; c + 2 < result.columns.size(); ++c) {
        std::vector<double> params, values;
        for (const auto& pt : result.points) {
            params.push_back(pt.parameter);
            values.push_back(pt.values[c]);
        }
        const double slope = detail::log_log_slope(params, values);
        if (std::isfinite(slope))
            result.orders.emplace_back(result.columns[c], slope);
    }
    return result;
}

// ---- sweep serialization ---------------------------------------------------

inline void write_sweep_csv(const std::string& path, const SweepResult& result,
                            Metadata meta) {
    meta.emplace_back("kind", result.kind);
    if (result.failed) {
        meta.emplace_back("status", "solver_failure: " + result.failure);
    } else {
        meta.emplace_back("status", "ok");
    }
    for (const auto& [key, value] : result.extra) meta.emplace_back(key, value);
    for (const auto& [name, order] : result.orders)
        meta.emplace_back("order " + name, format_double(order));

    auto out = detail::open_out(path);
    write_metadata(out, meta);
    out << "param";
    for (const auto& c : result.columns) out << ',' << c;
    out << "\n";
    for (const auto& pt : result.points) {
        out << format_double(pt.parameter);
        for (const double v : pt.values) out << ',' << format_double(v);
        out << "\n";
    }
    for (const auto& a : result.assertions)
        out << "# assertion " << a.name << " = " << (a.pass ? "pass" : "FAIL")
            << " : " << a.detail << "\n";
}

}  // namespace haptofv
