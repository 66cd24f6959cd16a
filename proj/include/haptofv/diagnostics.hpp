#pragma once

// Diagnostics: a priori functionals of (psi, phi) evaluated on grid states,
// plus envelope checks that audit each functional against the bound it is
// expected to satisfy along a simulated trajectory (Gronwall envelopes where
// explicit constants exist, finiteness/boundedness rows otherwise).

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "haptofv/grid.hpp"
#include "haptofv/model.hpp"
#include "haptofv/scheme.hpp"

namespace haptofv {

// One sampled row of every tracked functional.
//
//   mass                      ∫ psi
//   l2                        ∫ psi^2
//   l3                        ∫ psi^3
//   second_moment             ∫ (|x|^2/2) psi
//   entropy_abs               ∫ psi |ln psi|          (0 ln 0 = 0)
//   energy                    ∫ psi (D/2 psi - alpha phi)
//   dissipation               ∫ psi phi(1-phi) |alpha grad phi - D grad psi|^2
//   grad_sqrt_phi             ∫ |grad sqrt(phi)|^2
//   w_grad_psi                ∫ phi(1-phi) |grad psi|^2
//   psi_grad_sqrt_phi         ∫ psi |grad sqrt(phi)|^2
//   full_w_grad_psi           ∫ psi phi(1-phi) |grad psi|^2
//   delta_dissipation         delta ∫ psi |D grad psi - alpha grad phi|^2
//   dt_sqrt_phi_l3            ∫ |(gamma/2) sqrt(phi) psi|^3
//   compact_phi_grad_psi      ∫ phi |grad psi|^2
//   compact_psi_grad_sqrt_phi ∫ psi^{3/2} |grad sqrt(phi)|^{3/2}
//
// Gradient functionals use two-point face differences with the scalar weight
// averaged to the face; each face carries one cell volume of quadrature
// weight.  In two dimensions the 3/2-power functional is composed
// component-wise (it is a finiteness monitor, not an exact norm).
struct DiagnosticsRow {
    double time = 0.0;
    double mass = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    double second_moment = 0.0;
    double entropy_abs = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double grad_sqrt_phi = 0.0;
    double w_grad_psi = 0.0;
    double psi_grad_sqrt_phi = 0.0;
    double full_w_grad_psi = 0.0;
    double delta_dissipation = 0.0;
    double dt_sqrt_phi_l3 = 0.0;
    double compact_phi_grad_psi = 0.0;
    double compact_psi_grad_sqrt_phi = 0.0;
    double phi_max = 0.0;
    double phi_min = 0.0;
    double psi_min = 0.0;
    double boundary_tail = 0.0;
    std::int64_t floored_cells = 0;
};

// CSV column names, in the order the fields above are serialized.
inline const std::array<const char*, 21>& diagnostics_columns() {
    static const std::array<const char*, 21> names = {
        "time",
        "est_psiL1_mass",
        "est_psiL1_l2",
        "est_psiL3",
        "est_psiX2",
        "est_psiLog",
        "est_energy",
        "est_gradient",
        "est_compact_phi",
        "est_FullGrad_psi",
        "est_FullGrad3_phi",
        "est_FullGrad2_psi",
        "est_new",
        "est_timecompact_vp",
        "est_compact_psi_l2part",
        "est_compact_psi_l32part",
        "est_phiLinf_max",
        "est_phiLinf_min",
        "psi_min",
        "boundary_tail",
        "floored_cells",
    };
    return names;
}

inline std::array<double, 20> numeric_fields(const DiagnosticsRow& r) {
    return {r.time,
            r.mass,
            r.l2,
            r.l3,
            r.second_moment,
            r.entropy_abs,
            r.energy,
            r.dissipation,
            r.grad_sqrt_phi,
            r.w_grad_psi,
            r.psi_grad_sqrt_phi,
            r.full_w_grad_psi,
            r.delta_dissipation,
            r.dt_sqrt_phi_l3,
            r.compact_phi_grad_psi,
            r.compact_psi_grad_sqrt_phi,
            r.phi_max,
            r.phi_min,
            r.psi_min,
            r.boundary_tail};
}

inline DiagnosticsRow evaluate(const State& state, const ModelParams& params,
                               std::int64_t floored_cells = 0) {
    check_same_grid(state.psi, state.phi, "evaluate");
    const Grid& g = state.psi.grid();
    const double vol = g.cell_volume();

    DiagnosticsRow row;
    row.time = state.time;
    row.floored_cells = floored_cells;

    CompensatedSum mass, l2, l3, x2, ent, energy, dt_sqphi;
    double phi_max = -std::numeric_limits<double>::infinity();
    double phi_min = std::numeric_limits<double>::infinity();
    double psi_min = std::numeric_limits<double>::infinity();

    for (index_t c = 0; c < g.cell_count(); ++c) {
        const double psi = state.psi[c];
        const double phi = state.phi[c];
        mass.add(psi);
        l2.add(psi * psi);
        l3.add(psi * psi * psi);
        x2.add(0.5 * g.radius_sq(c) * psi);
        if (psi > 0.0) ent.add(psi * std::abs(std::log(psi)));
        energy.add(psi * (0.5 * params.D * psi - params.alpha * phi));
        const double v = std::abs(0.5 * params.gamma * std::sqrt(phi) * psi);
        dt_sqphi.add(v * v * v);
        phi_max = std::max(phi_max, phi);
        phi_min = std::min(phi_min, phi);
        psi_min = std::min(psi_min, psi);
    }
    row.mass = vol * mass.value();
    row.l2 = vol * l2.value();
    row.l3 = vol * l3.value();
    row.second_moment = vol * x2.value();
    row.entropy_abs = vol * ent.value();
    row.energy = vol * energy.value();
    row.dt_sqrt_phi_l3 = vol * dt_sqphi.value();
    row.phi_max = phi_max;
    row.phi_min = phi_min;
    row.psi_min = psi_min;
    row.boundary_tail = max_boundary_value(state.psi);

    CompensatedSum diss, gsp, wgp, pgsp, fwgp, ddiss, cpgp, cpsp;
    for (int axis = 0; axis < g.dim(); ++axis) {
        const double h = g.spacing(axis);
        for_each_face(g, axis, [&](index_t cl, index_t cr, index_t) {
            const double psi_l = state.psi[cl], psi_r = state.psi[cr];
            const double phi_l = state.phi[cl], phi_r = state.phi[cr];
            const double dpsi = (psi_r - psi_l) / h;
            const double dphi = (phi_r - phi_l) / h;
            const double dsqphi = (std::sqrt(phi_r) - std::sqrt(phi_l)) / h;

            const double w_psi = 0.5 * (psi_l + psi_r);
            const double w_phi = 0.5 * (phi_l + phi_r);
            const double w_sat =
                0.5 * (phi_l * (1.0 - phi_l) + phi_r * (1.0 - phi_r));
            const double w_full = 0.5 * (psi_l * phi_l * (1.0 - phi_l) +
                                         psi_r * phi_r * (1.0 - phi_r));
            const double w_psi32 = 0.5 * (psi_l * std::sqrt(psi_l) +
                                          psi_r * std::sqrt(psi_r));

            const double drift = params.alpha * dphi - params.D * dpsi;
            diss.add(w_full * drift * drift);
            gsp.add(dsqphi * dsqphi);
            wgp.add(w_sat * dpsi * dpsi);
            pgsp.add(w_psi * dsqphi * dsqphi);
            fwgp.add(w_full * dpsi * dpsi);
            ddiss.add(w_psi * drift * drift);
            cpgp.add(w_phi * dpsi * dpsi);
            cpsp.add(w_psi32 * std::pow(std::abs(dsqphi), 1.5));
        });
    }
    row.dissipation = vol * diss.value();
    row.grad_sqrt_phi = vol * gsp.value();
    row.w_grad_psi = vol * wgp.value();
    row.psi_grad_sqrt_phi = vol * pgsp.value();
    row.full_w_grad_psi = vol * fwgp.value();
    row.delta_dissipation = params.delta * vol * ddiss.value();
    row.compact_phi_grad_psi = vol * cpgp.value();
    row.compact_psi_grad_sqrt_phi = vol * cpsp.value();

    const auto values = numeric_fields(row);
    const auto& names = diagnostics_columns();
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]))
            throw std::runtime_error(std::string("diagnostics: functional ") +
                                     names[k] + " is not finite at time " +
                                     std::to_string(state.time));
    }
    return row;
}

struct DiagnosticsRecord {
    std::vector<DiagnosticsRow> rows;

    void append(DiagnosticsRow row) { rows.push_back(row); }
    bool empty() const { return rows.empty(); }
    std::size_t size() const { return rows.size(); }
    const DiagnosticsRow& front() const { return rows.front(); }
    const DiagnosticsRow& back() const { return rows.back(); }
};

struct EnvelopeCheck {
    std::string name;
    bool pass = false;
    double worst_margin = 0.0;  // (envelope - value) / max(1, |envelope|)
    double worst_time = 0.0;
    double observed = 0.0;  // value at the worst sample
    double envelope = 0.0;  // envelope at the worst sample
};

struct EnvelopeReport {
    std::vector<EnvelopeCheck> checks;
    double t_end = 0.0;
    std::int64_t samples = 0;
    std::int64_t total_floored = 0;
    double max_boundary_tail = 0.0;
    double eps_env = 0.0;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const EnvelopeCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

// Track the minimum of (envelope - value)/max(1,|envelope|) over samples.
class MarginTracker {
  public:
    void observe(double value, double envelope, double time) {
        const double margin =
            (envelope - value) / std::max(1.0, std::abs(envelope));
        if (first_ || margin < worst_margin_) {
            worst_margin_ = margin;
            worst_time_ = time;
            observed_ = value;
            envelope_ = envelope;
            first_ = false;
        }
    }
    EnvelopeCheck finish(std::string name, double eps_env) const {
        EnvelopeCheck c;
        c.name = std::move(name);
        c.pass = !first_ && worst_margin_ >= -eps_env;
        c.worst_margin = first_ ? 0.0 : worst_margin_;
        c.worst_time = worst_time_;
        c.observed = observed_;
        c.envelope = envelope_;
        return c;
    }

  private:
    bool first_ = true;
    double worst_margin_ = 0.0;
    double worst_time_ = 0.0;
    double observed_ = 0.0;
    double envelope_ = 0.0;
};

inline EnvelopeCheck finiteness_row(const std::string& name, double value,
                                    double time) {
    EnvelopeCheck c;
    c.name = name;
    c.pass = std::isfinite(value);
    c.worst_margin = c.pass ? 0.0 : -std::numeric_limits<double>::infinity();
    c.worst_time = time;
    c.observed = value;
    c.envelope = value;
    return c;
}

// Trapezoid accumulation of one field, optionally damped by exp(-rate * t).
template <typename Field>
std::vector<double> trapezoid_prefix(const std::vector<DiagnosticsRow>& rows,
                                     Field field, double rate = 0.0) {
    std::vector<double> out(rows.size(), 0.0);
    CompensatedSum acc;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double t0 = rows[k - 1].time, t1 = rows[k].time;
        const double f0 = std::exp(-rate * t0) * field(rows[k - 1]);
        const double f1 = std::exp(-rate * t1) * field(rows[k]);
        acc.add(0.5 * (f0 + f1) * (t1 - t0));
        out[k] = acc.value();
    }
    return out;
}

}  // namespace detail

// Audit a sampled trajectory against the bounds its functionals must obey.
// Every check is a report entry; failures never throw.  Tolerance is
// relative: value <= envelope + eps_env * max(1, |envelope|).
inline EnvelopeReport check_envelopes(const DiagnosticsRecord& record,
                                      const ModelParams& params,
                                      const InitialData& init,
                                      double eps_env = 1e-8) {
    if (record.empty())
        throw std::invalid_argument("check_envelopes: record is empty");
    const auto& rows = record.rows;
    if (rows.front().time != 0.0)
        throw std::invalid_argument(
            "check_envelopes: record must start at time 0");
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (!(rows[k].time > rows[k - 1].time))
            throw std::invalid_argument(
                "check_envelopes: sample times must increase");

    EnvelopeReport report;
    report.t_end = rows.back().time;
    report.samples = static_cast<std::int64_t>(rows.size());
    report.eps_env = eps_env;
    for (const auto& r : rows) {
        report.total_floored += r.floored_cells;
        report.max_boundary_tail =
            std::max(report.max_boundary_tail, r.boundary_tail);
    }

    // Admissibility of the initial data underpins every envelope below.
    {
        ValidationReport v = validate_initial_data(init);
        EnvelopeCheck c;
        c.name = "initial_data_admissible";
        c.pass = v.passed();
        c.worst_margin = v.passed() ? 0.0 : -1.0;
        c.worst_time = 0.0;
        c.observed = static_cast<double>(v.failures.size());
        c.envelope = 0.0;
        report.checks.push_back(c);
    }

    const DiagnosticsRow& r0 = rows.front();
    const double m0 = r0.mass;
    const double e0 = r0.energy;
    const double x0 = r0.second_moment;
    const double g0 = r0.grad_sqrt_phi;

    // (a) mass(t) <= mass(0) exp(R0 t)
    {
        detail::MarginTracker tr;
        for (const auto& r : rows)
            tr.observe(r.mass, m0 * std::exp(params.R0 * r.time), r.time);
        report.checks.push_back(tr.finish("mass_gronwall", eps_env));
    }

    // (b) fiber bounds and monotone decay, cell population non-negative
    {
        detail::MarginTracker tr;
        tr.observe(r0.phi_max, r0.phi_max, r0.time);
        for (std::size_t k = 1; k < rows.size(); ++k)
            tr.observe(rows[k].phi_max, rows[k - 1].phi_max, rows[k].time);
        report.checks.push_back(tr.finish("phi_monotone", eps_env));
    }
    {
        detail::MarginTracker tr;
        for (const auto& r : rows) tr.observe(-r.phi_min, 0.0, r.time);
        report.checks.push_back(tr.finish("phi_nonnegative", eps_env));
    }
    {
        detail::MarginTracker tr;
        for (const auto& r : rows) tr.observe(-r.psi_min, 0.0, r.time);
        report.checks.push_back(tr.finish("psi_nonnegative", eps_env));
    }

    // (c) energy Gronwall:
    //   E'(t) <= C2 E(t) + alpha (C2 + R0) mass(t),  mass(t) <= m0 e^{R0 t}
    //   with C2 = (2/D)(D R0 + alpha R0 + alpha gamma); C2 - R0 > 0 always.
    {
        const double c2 = (2.0 / params.D) *
                          (params.D * params.R0 + params.alpha * params.R0 +
                           params.alpha * params.gamma);
        const double a = params.alpha * (c2 + params.R0) * m0;
        detail::MarginTracker tr;
        for (const auto& r : rows) {
            const double growth = std::exp(c2 * r.time);
            const double forced =
                a * (growth - std::exp(params.R0 * r.time)) / (c2 - params.R0);
            tr.observe(r.energy, e0 * growth + forced, r.time);
        }
        report.checks.push_back(tr.finish("energy_gronwall", eps_env));
    }

    // (e) second moment Gronwall. Young's inequality on ∫psi x·V gives
    //   X'(t) <= (R0 + 1/4) X(t) + 2 sup(S) * full_dissipation(t),
    // since |V|^2 = S^2 |w|^2 <= sup(S) * S |w|^2 pointwise. The full
    // dissipation ∫psi S_delta |w|^2 splits into the bare part (dissipation)
    // plus the floor part (delta_dissipation); at the fully degenerate
    // quadratic law (sup S = 1/4, no floor) the forcing is dissipation/2.
    {
        const double rate = params.R0 + 0.25;
        const double smax = saturation_max(params);
        const auto damped = detail::trapezoid_prefix(
            rows,
            [](const DiagnosticsRow& r) {
                return r.dissipation + r.delta_dissipation;
            },
            rate);
        detail::MarginTracker tr;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double env =
                std::exp(rate * rows[k].time) * (x0 + 2.0 * smax * damped[k]);
            tr.observe(rows[k].second_moment, env, rows[k].time);
        }
        report.checks.push_back(tr.finish("second_moment_gronwall", eps_env));
    }

    // (f) gradient of sqrt(phi) Gronwall (uses the fiber ceiling 2/3):
    //   G'(t) <= (gamma/2) G(t) + (3 gamma/2) w(t),  w = ∫ phi(1-phi)|grad psi|^2
    {
        const double rate = 0.5 * params.gamma;
        const auto damped = detail::trapezoid_prefix(
            rows, [](const DiagnosticsRow& r) { return r.w_grad_psi; }, rate);
        detail::MarginTracker tr;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double env = std::exp(rate * rows[k].time) *
                               (g0 + 3.0 * rate * damped[k]);
            tr.observe(rows[k].grad_sqrt_phi, env, rows[k].time);
        }
        report.checks.push_back(tr.finish("grad_sqrt_phi_gronwall", eps_env));
    }

    // L-infinity-in-time rows: observed supremum reported, gated on finiteness.
    {
        double sup_l2 = 0.0, sup_ent = 0.0, t_l2 = 0.0, t_ent = 0.0;
        for (const auto& r : rows) {
            if (!(r.l2 <= sup_l2)) {
                sup_l2 = r.l2;
                t_l2 = r.time;
            }
            if (!(r.entropy_abs <= sup_ent)) {
                sup_ent = r.entropy_abs;
                t_ent = r.time;
            }
        }
        report.checks.push_back(detail::finiteness_row("sup_l2", sup_l2, t_l2));
        report.checks.push_back(
            detail::finiteness_row("sup_entropy_abs", sup_ent, t_ent));
    }

    // (d) time-integral finiteness rows (trapezoid over the record)
    {
        struct IntegralRow {
            const char* name;
            double DiagnosticsRow::* field;
        };
        const IntegralRow integrals[] = {
            {"int_l3", &DiagnosticsRow::l3},
            {"int_dissipation", &DiagnosticsRow::dissipation},
            {"int_w_grad_psi", &DiagnosticsRow::w_grad_psi},
            {"int_psi_grad_sqrt_phi", &DiagnosticsRow::psi_grad_sqrt_phi},
            {"int_full_w_grad_psi", &DiagnosticsRow::full_w_grad_psi},
            {"int_delta_dissipation", &DiagnosticsRow::delta_dissipation},
            {"int_dt_sqrt_phi_l3", &DiagnosticsRow::dt_sqrt_phi_l3},
            {"int_compact_phi_grad_psi", &DiagnosticsRow::compact_phi_grad_psi},
            {"int_compact_psi_grad_sqrt_phi",
             &DiagnosticsRow::compact_psi_grad_sqrt_phi},
        };
        for (const auto& row : integrals) {
            const auto prefix = detail::trapezoid_prefix(
                rows, [&](const DiagnosticsRow& r) { return r.*(row.field); });
            report.checks.push_back(detail::finiteness_row(
                row.name, prefix.back(), rows.back().time));
        }
    }

    return report;
}

// Flat text table for terminal output.
inline std::string format_envelope_report(const EnvelopeReport& report) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "envelope report: %lld samples to t=%.6g, tolerance %.3g\n",
                  static_cast<long long>(report.samples), report.t_end,
                  report.eps_env);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "floored cells (total): %lld; max boundary tail: %.6g\n",
                  static_cast<long long>(report.total_floored),
                  report.max_boundary_tail);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-32s %-6s %14s %12s %14s %14s\n", "check",
                  "status", "worst_margin", "at_time", "observed", "envelope");
    out += buf;
    for (const auto& c : report.checks) {
        std::snprintf(buf, sizeof(buf), "%-32s %-6s %14.6e %12.6g %14.6e %14.6e\n",
                      c.name.c_str(), c.pass ? "pass" : "FAIL", c.worst_margin,
                      c.worst_time, c.observed, c.envelope);
        out += buf;
    }
    out += report.passed() ? "all envelope checks passed\n"
                           : "ENVELOPE CHECK FAILURE\n";
    return out;
}

}  // namespace haptofv
