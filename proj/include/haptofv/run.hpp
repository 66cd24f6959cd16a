#pragma once

// Single-run driver: builds initial data from a RunConfig, advances the
// scheme to t_end with adaptive steps that land exactly on snapshot times,
// records diagnostics along the way, and audits the envelope checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "haptofv/config.hpp"
#include "haptofv/csv.hpp"
#include "haptofv/diagnostics.hpp"
#include "haptofv/grid.hpp"
#include "haptofv/model.hpp"
#include "haptofv/scheme.hpp"

namespace haptofv {

inline InitialData build_initial_data(const RunConfig& cfg) {
    const Grid g = cfg.grid.build();
    const IcSpec& ic = cfg.ic;
    switch (ic.kind) {
        case IcSpec::Kind::homogeneous:
            return InitialData{GridFunction(g, ic.psi), GridFunction(g, ic.phi),
                               true};
        case IcSpec::Kind::gaussian_bump: {
            auto bump1 = [&](double x) {
                const double r = x - ic.center;
                return ic.amplitude *
                       std::exp(-r * r / (2.0 * ic.width * ic.width));
            };
            auto bump2 = [&](double x, double y) {
                const double rx = x - ic.center, ry = y - ic.center1;
                return ic.amplitude *
                       std::exp(-(rx * rx + ry * ry) /
                                (2.0 * ic.width * ic.width));
            };
            GridFunction psi = g.dim() == 1 ? sample(g, bump1) : sample(g, bump2);
            return InitialData{std::move(psi),
                               GridFunction(g, ic.phi_background), true};
        }
        case IcSpec::Kind::step_ecm:
        case IcSpec::Kind::bump_on_step: {
            auto step1 = [&](double x) {
                if (ic.step_width <= 0.0)
                    return x < ic.step_center ? ic.phi_left : ic.phi_right;
                const double s =
                    0.5 * (1.0 + std::tanh((x - ic.step_center) / ic.step_width));
                return ic.phi_left + (ic.phi_right - ic.phi_left) * s;
            };
            GridFunction phi = g.dim() == 1
                                   ? sample(g, step1)
                                   : sample(g, [&](double x, double) {
                                         return step1(x);
                                     });
            if (ic.kind == IcSpec::Kind::step_ecm)
                return InitialData{GridFunction(g, ic.psi_uniform),
                                   std::move(phi), true};
            auto bump1 = [&](double x) {
                const double r = x - ic.center;
                return ic.amplitude *
                       std::exp(-r * r / (2.0 * ic.width * ic.width));
            };
            GridFunction psi =
                g.dim() == 1 ? sample(g, bump1)
                             : sample(g, [&](double x, double y) {
                                   const double rx = x - ic.center;
                                   const double ry = y - ic.center1;
                                   return ic.amplitude *
                                          std::exp(-(rx * rx + ry * ry) /
                                                   (2.0 * ic.width * ic.width));
                               });
            return InitialData{std::move(psi), std::move(phi), true};
        }
        case IcSpec::Kind::from_file: {
            auto [psi, phi] = read_fields_csv(ic.path, g);
            return InitialData{std::move(psi), std::move(phi), true};
        }
    }
    throw std::logic_error("build_initial_data: unhandled initial condition");
}

struct RunResult {
    State final_state;
    std::vector<State> snapshots;  // time member says when
    DiagnosticsRecord record;
    EnvelopeReport envelopes;
    bool solver_failed = false;
    std::string failure;
    std::int64_t steps = 0;
    std::int64_t total_floored = 0;
    int max_halvings = 0;
    bool tail_ok = true;
};

inline RunResult simulate(const RunConfig& cfg, const InitialData& init) {
    const double t_end = cfg.scheme.t_end;

    // target times: requested snapshots inside (0, t_end), then t_end itself
    std::vector<double> targets;
    for (double t : cfg.output.snapshots)
        if (t > 0.0 && t < t_end) targets.push_back(t);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    targets.push_back(t_end);

    RunResult result{State{init.psi0, init.phi0, 0.0},
                     {}, {}, {}, false, {}, 0, 0, 0, true};
    State& cur = result.final_state;
    State buf{GridFunction(cur.psi.grid()), GridFunction(cur.phi.grid()), 0.0};
    FaceField scratch(cur.psi.grid());

    result.record.append(evaluate(cur, cfg.model, 0));
    result.snapshots.push_back(cur);

    constexpr std::int64_t max_steps = 20'000'000;
    std::int64_t floored_since_sample = 0;
    std::size_t next_target = 0;

    try {
        while (next_target < targets.size()) {
            const double target = targets[next_target];
            const double gap = target - cur.time;
            if (gap <= 0.0) {
                ++next_target;
                continue;
            }
            double dt = std::min(stable_dt(cur, cfg.model, cfg.scheme), gap);

            int halvings = 0;
            std::int64_t floored_here = 0;
            while (true) {
                floored_here = 0;
                if (try_step(cur, buf, cfg.model, dt,
                             cfg.scheme.negativity_tolerance, scratch,
                             &floored_here))
                    break;
                if (++halvings > 10)
                    throw std::runtime_error(
                        "step rejected after 10 halvings at t=" +
                        std::to_string(cur.time));
                dt *= 0.5;
            }
            std::swap(cur, buf);
            ++result.steps;
            result.total_floored += floored_here;
            floored_since_sample += floored_here;
            result.max_halvings = std::max(result.max_halvings, halvings);

            const bool at_target =
                target - cur.time <= 1e-12 * std::max(1.0, std::abs(target));
            if (at_target) cur.time = target;

            if (at_target || result.steps % cfg.output.stride == 0) {
                result.record.append(
                    evaluate(cur, cfg.model, floored_since_sample));
                floored_since_sample = 0;
            }
            if (at_target) {
                result.snapshots.push_back(cur);
                ++next_target;
            }
            if (result.steps >= max_steps)
                throw std::runtime_error("step budget exhausted (2e7 steps)");
        }
    } catch (const std::exception& e) {
        result.solver_failed = true;
        result.failure = e.what();
    }

    result.envelopes = check_envelopes(result.record, cfg.model, init);
    result.tail_ok =
        result.record.back().boundary_tail <= cfg.output.tail_tolerance;
    return result;
}

}  // namespace haptofv
