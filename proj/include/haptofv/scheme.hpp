#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "haptofv/grid.hpp"
#include "haptofv/model.hpp"

namespace haptofv {

enum class FluxForm { upwind_hapto_central_diff };

struct SchemeConfig {
    double cfl_safety = 0.45;
    double t_end = 1.0;
    double max_dt = 0.05;
    FluxForm flux_form = FluxForm::upwind_hapto_central_diff;
    // psi values in [-tol, 0) after a step are floored to zero and counted;
    // anything below -tol rejects the step.
    double negativity_tolerance = 0.0;
};

struct State {
    GridFunction psi;
    GridFunction phi;
    double time = 0.0;
};

struct StepStats {
    int halvings = 0;
    std::int64_t floored = 0;
};

/// Face flux F = S_face [ alpha (dphi) psi_upwind - (D/2) d(psi^2) ] with
/// the saturation evaluated at the arithmetic mean of the adjacent fiber
/// values and the donor cell picked by the drift sign. Boundary faces are
/// left out entirely (no-flux).
inline void compute_flux_into(const State& s, const ModelParams& p,
                              FaceField& flux) {
    const Grid& g = s.psi.grid();
    const GridFunction& psi = s.psi;
    const GridFunction& phi = s.phi;
    for (int a = 0; a < g.dim(); ++a) {
        const double inv_h = 1.0 / g.spacing(a);
        for_each_face(g, a, [&](index_t cl, index_t cr, index_t fi) {
            const double dphi = (phi[cr] - phi[cl]) * inv_h;
            const double sat = saturation(0.5 * (phi[cl] + phi[cr]), p);
            const double drift = p.alpha * dphi;
            const double psi_up = drift > 0.0 ? psi[cl]
                                 : drift < 0.0 ? psi[cr]
                                               : psi[cl];
            const double dpsi_sq =
                (psi[cr] * psi[cr] - psi[cl] * psi[cl]) * inv_h;
            const double f = sat * (drift * psi_up - 0.5 * p.D * dpsi_sq);
            if (!std::isfinite(f))
                throw std::runtime_error(
                    "flux: non-finite value at axis " + std::to_string(a) +
                    " face " + std::to_string(fi));
            flux.at(a, fi) = f;
        });
    }
}

inline FaceField compute_flux(const State& s, const ModelParams& p) {
    FaceField flux(s.psi.grid());
    compute_flux_into(s, p, flux);
    return flux;
}

/// CFL-style bound combining the degenerate diffusion and drift scales per
/// face, then capped by max_dt and by the reaction scale.
inline double stable_dt(const State& s, const ModelParams& p,
                        const SchemeConfig& cfg) {
    const Grid& g = s.psi.grid();
    const GridFunction& psi = s.psi;
    const GridFunction& phi = s.phi;
    const double eps = std::numeric_limits<double>::min();
    const double two_d = 2.0 * static_cast<double>(g.dim());

    double face_min = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim(); ++a) {
        const double h = g.spacing(a);
        const double h_sq = h * h;
        const double inv_h = 1.0 / h;
        for_each_face(g, a, [&](index_t cl, index_t cr, index_t fi) {
            (void)fi;
            const double sat = saturation(0.5 * (phi[cl] + phi[cr]), p);
            const double psi_adj = std::max(psi[cl], psi[cr]);
            const double dphi = (phi[cr] - phi[cl]) * inv_h;
            const double denom = two_d * p.D * sat * std::max(psi_adj, eps) +
                                 h * std::abs(p.alpha * sat * dphi) + eps;
            face_min = std::min(face_min, h_sq / denom);
        });
    }

    double dt = std::min(cfg.cfl_safety * face_min, cfg.max_dt);
    if (p.R0 > 0.0) {
        const double reaction_cap =
            1.0 / (p.R0 * std::max(1.0, linf_norm(psi)));
        dt = std::min(dt, reaction_cap);
    }
    return dt;
}

/// One explicit update attempt over dt. Writes the advanced fields into
/// `out` (which must not alias `in`). Returns false when the cell update
/// dips below -negativity_tolerance anywhere, in which case `out` is
/// garbage and the caller should retry with a smaller dt. Values in
/// [-tol, 0) are floored to zero and counted into *floored.
inline bool try_step(const State& in, State& out, const ModelParams& p,
                     double dt, double negativity_tolerance,
                     FaceField& flux_scratch, std::int64_t* floored) {
    const Grid& g = in.psi.grid();
    if (&in == &out)
        throw std::invalid_argument("try_step: in and out must be distinct");
    compute_flux_into(in, p, flux_scratch);

    // reaction first (cell-local), then scatter the face fluxes
    for (index_t i = 0; i < in.psi.size(); ++i) {
        const double r = reaction_rate(in.psi[i], in.phi[i], p);
        out.psi[i] = in.psi[i] + dt * in.psi[i] * r;
    }
    for (int a = 0; a < g.dim(); ++a) {
        const double dt_over_h = dt / g.spacing(a);
        for_each_face(g, a, [&](index_t cl, index_t cr, index_t fi) {
            const double f = dt_over_h * flux_scratch.at(a, fi);
            out.psi[cl] -= f;
            out.psi[cr] += f;
        });
    }

    std::int64_t floored_here = 0;
    for (index_t i = 0; i < out.psi.size(); ++i) {
        const double v = out.psi[i];
        if (!std::isfinite(v) || v < -negativity_tolerance) return false;
        if (v < 0.0) {
            out.psi[i] = 0.0;
            ++floored_here;
        }
    }
    if (floored) *floored += floored_here;

    // fiber decay is integrated exactly over the step with frozen psi
    for (index_t i = 0; i < in.phi.size(); ++i)
        out.phi[i] = in.phi[i] * std::exp(-p.gamma * dt * in.psi[i]);

    out.time = in.time + dt;
    return true;
}

/// Advance by dt, retrying with halved steps on negativity (at most 10
/// halvings). The returned state carries the actually taken step in its
/// time stamp; callers must not assume time advanced by the full dt.
inline State step(const State& in, const ModelParams& p, double dt,
                  const SchemeConfig& cfg = {}, StepStats* stats = nullptr) {
    State out{GridFunction(in.psi.grid()), GridFunction(in.phi.grid()),
              in.time};
    FaceField scratch(in.psi.grid());
    double attempt = dt;
    for (int halvings = 0; halvings <= 10; ++halvings) {
        std::int64_t floored = 0;
        if (try_step(in, out, p, attempt, cfg.negativity_tolerance, scratch,
                     &floored)) {
            if (stats) {
                stats->halvings = halvings;
                stats->floored += floored;
            }
            return out;
        }
        attempt *= 0.5;
    }

    // diagnostics dump for the hard failure
    double worst = 0.0;
    index_t worst_cell = -1;
    for (index_t i = 0; i < out.psi.size(); ++i)
        if (out.psi[i] < worst) {
            worst = out.psi[i];
            worst_cell = i;
        }
    throw std::runtime_error(
        "step: rejected after 10 halvings at t = " + std::to_string(in.time) +
        ", dt = " + std::to_string(dt) +
        ", worst cell " + std::to_string(worst_cell) + " value " +
        std::to_string(worst));
}

}  // namespace haptofv
