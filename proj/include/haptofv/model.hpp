#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "haptofv/grid.hpp"

namespace haptofv {

/// Motility saturation as a function of the fiber fraction phi.
/// quadratic: phi (1 - phi); window: normalized positive part between
/// phi_min and phi_th, peaking at 1. A nonzero floor `delta` (added by
/// ModelParams) lifts the degeneracy.
struct SaturationLaw {
    enum class Kind { quadratic, window };
    Kind kind = Kind::quadratic;
    double phi_min = 0.0;  // window only
    double phi_th = 1.0;   // window only
};

struct ModelParams {
    double alpha = 1.0;  // haptotactic drift coefficient
    double D = 1.0;      // nonlinear diffusion coefficient
    double R0 = 1.0;     // proliferation rate scale
    double gamma = 1.0;  // fiber degradation rate
    double delta = 0.0;  // saturation floor; 0 = fully degenerate
    SaturationLaw law{};
};

inline void validate(const ModelParams& p) {
    if (!(p.alpha > 0.0)) throw std::invalid_argument("model: requires alpha > 0");
    if (!(p.D > 0.0)) throw std::invalid_argument("model: requires D > 0");
    if (!(p.R0 >= 0.0)) throw std::invalid_argument("model: requires R0 >= 0");
    if (!(p.gamma > 0.0)) throw std::invalid_argument("model: requires gamma > 0");
    if (!(p.delta >= 0.0)) throw std::invalid_argument("model: requires delta >= 0");
    if (p.law.kind == SaturationLaw::Kind::window) {
        if (!(0.0 <= p.law.phi_min && p.law.phi_min < p.law.phi_th &&
              p.law.phi_th <= 1.0))
            throw std::invalid_argument(
                "model: window law requires 0 <= phi_min < phi_th <= 1");
    }
}

/// Saturation value at a fiber fraction phi in [0, 1].
inline double saturation(double phi, const ModelParams& p) {
    if (!(phi >= 0.0 && phi <= 1.0))
        throw std::invalid_argument("saturation: phi outside [0, 1]");
    if (p.law.kind == SaturationLaw::Kind::quadratic)
        return p.delta + phi * (1.0 - phi);
    const double span = p.law.phi_th - p.law.phi_min;
    const double prod = (phi - p.law.phi_min) * (p.law.phi_th - phi);
    return p.delta + 4.0 * std::max(prod, 0.0) / (span * span);
}

/// Supremum of the saturation over all admissible fiber fractions: the
/// quadratic law peaks at 1/4 (phi = 1/2), the normalized window at 1.
inline double saturation_max(const ModelParams& p) {
    return p.delta +
           (p.law.kind == SaturationLaw::Kind::quadratic ? 0.25 : 1.0);
}

/// Net growth rate R0 (1 - phi - psi); sign encodes crowding.
inline double reaction_rate(double psi, double phi, const ModelParams& p) {
    if (!(psi >= 0.0))
        throw std::invalid_argument("reaction_rate: psi must be >= 0");
    if (!(phi >= 0.0 && phi <= 1.0))
        throw std::invalid_argument("reaction_rate: phi outside [0, 1]");
    return p.R0 * (1.0 - phi - psi);
}

/// Initial fields. strict_bound enables the sharper fiber ceiling (2/3) that
/// the gradient estimates rely on.
struct InitialData {
    GridFunction psi0;
    GridFunction phi0;
    bool strict_bound = true;
};

struct ValidationIssue {
    std::string check;
    std::string message;
    index_t cell = -1;  // offending cell, or -1 for global checks
};

struct ValidationReport {
    std::vector<ValidationIssue> failures;
    double mass = 0.0;             // ∫ psi0
    double second_moment = 0.0;    // ∫ |x|²/2 psi0
    double l2_sq = 0.0;            // ∫ psi0²
    double grad_sqrt_phi_sq = 0.0; // discrete ∫ |∇√phi0|²
    bool passed() const { return failures.empty(); }
};

/// Checks admissibility of initial data; reports every violation with its
/// cell index and never clamps values.
inline ValidationReport validate_initial_data(const InitialData& init) {
    ValidationReport rep;
    const GridFunction& psi = init.psi0;
    const GridFunction& phi = init.phi0;
    if (psi.grid() != phi.grid()) {
        rep.failures.push_back(
            {"grids", "psi0 and phi0 live on different grids", -1});
        return rep;
    }

    index_t bad_psi = 0, bad_phi = 0, bad_strict = 0, non_finite = 0;
    for (index_t i = 0; i < psi.size(); ++i) {
        if (!std::isfinite(psi[i]) || !std::isfinite(phi[i])) {
            if (non_finite++ == 0)
                rep.failures.push_back(
                    {"finite", "non-finite initial value", i});
            continue;
        }
        if (psi[i] < 0.0 && bad_psi++ == 0)
            rep.failures.push_back(
                {"psi_nonnegative",
                 "psi0 = " + std::to_string(psi[i]) + " < 0", i});
        if ((phi[i] < 0.0 || phi[i] > 1.0) && bad_phi++ == 0)
            rep.failures.push_back(
                {"phi_range", "phi0 = " + std::to_string(phi[i]) +
                                  " outside [0, 1]", i});
        if (init.strict_bound && phi[i] > 2.0 / 3.0 && bad_strict++ == 0)
            rep.failures.push_back(
                {"phi_strict_bound",
                 "phi0 = " + std::to_string(phi[i]) + " exceeds 2/3", i});
    }
    const index_t extras = std::max<index_t>(non_finite - 1, 0) +
                           std::max<index_t>(bad_psi - 1, 0) +
                           std::max<index_t>(bad_phi - 1, 0) +
                           std::max<index_t>(bad_strict - 1, 0);
    if (extras > 0)
        rep.failures.push_back(
            {"summary", "further cells violate the checks above: " +
                            std::to_string(extras), -1});

    if (!rep.failures.empty()) return rep;

    rep.mass = integrate(psi);
    rep.second_moment = second_moment(psi);
    GridFunction sq(psi.grid());
    for (index_t i = 0; i < psi.size(); ++i) sq[i] = psi[i] * psi[i];
    rep.l2_sq = integrate(sq);

    GridFunction root(phi.grid());
    for (index_t i = 0; i < phi.size(); ++i) root[i] = std::sqrt(phi[i]);
    FaceField g = face_gradient(root);
    CompensatedSum s;
    for (int a = 0; a < phi.grid().dim(); ++a)
        for (index_t k = 0; k < g.count(a); ++k)
            s.add(g.at(a, k) * g.at(a, k));
    rep.grad_sqrt_phi_sq = s.value() * phi.grid().cell_volume();

    for (double v : {rep.mass, rep.second_moment, rep.l2_sq,
                     rep.grad_sqrt_phi_sq}) {
        if (!std::isfinite(v)) {
            rep.failures.push_back(
                {"finite_functionals",
                 "a derived functional of the initial data is not finite",
                 -1});
            break;
        }
    }
    return rep;
}

}  // namespace haptofv
