#pragma once

// Reference solutions used by the test suite. Everything here is independent
// of the library under test: plain std-only numerics.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace oracles {

// ---------------------------------------------------------------------------
// Spatially homogeneous dynamics reduce to two coupled ODEs:
//   u' = u * r0 * (1 - v - u)        (cell fraction)
//   v' = -gamma * v * u              (fiber fraction)
// Solved with classic RK4 plus step doubling: each step is accepted only when
// one full step and two half steps agree to `tol` componentwise.
// ---------------------------------------------------------------------------

struct HomogeneousOde {
    double r0;
    double gamma;

    std::array<double, 2> rhs(const std::array<double, 2>& y) const {
        return {y[0] * r0 * (1.0 - y[1] - y[0]), -gamma * y[1] * y[0]};
    }
};

inline std::array<double, 2> rk4_step(const HomogeneousOde& sys,
                                      const std::array<double, 2>& y,
                                      double dt) {
    auto add = [](const std::array<double, 2>& a,
                  const std::array<double, 2>& b,
                  double c) -> std::array<double, 2> {
        return {a[0] + c * b[0], a[1] + c * b[1]};
    };
    auto k1 = sys.rhs(y);
    auto k2 = sys.rhs(add(y, k1, dt / 2));
    auto k3 = sys.rhs(add(y, k2, dt / 2));
    auto k4 = sys.rhs(add(y, k3, dt));
    return {y[0] + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y[1] + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

inline std::array<double, 2> solve_homogeneous(double psi0, double phi0,
                                               double r0, double gamma,
                                               double t_end,
                                               double tol = 1e-10) {
    HomogeneousOde sys{r0, gamma};
    std::array<double, 2> y{psi0, phi0};
    double t = 0.0;
    double dt = t_end > 0 ? t_end / 64.0 : 0.0;
    int guard = 0;
    while (t < t_end) {
        if (++guard > 50'000'000)
            throw std::runtime_error("ode oracle: step guard exceeded");
        if (t + dt > t_end) dt = t_end - t;
        auto full = rk4_step(sys, y, dt);
        auto half = rk4_step(sys, rk4_step(sys, y, dt / 2), dt / 2);
        double err = std::max(std::abs(full[0] - half[0]),
                              std::abs(full[1] - half[1]));
        double scale = 1.0 + std::max(std::abs(half[0]), std::abs(half[1]));
        if (err <= tol * scale) {
            y = half;
            t += dt;
            if (err < 0.1 * tol * scale) dt *= 2.0;
        } else {
            dt *= 0.5;
            if (dt < 1e-15)
                throw std::runtime_error("ode oracle: step underflow");
        }
    }
    return y;
}

// Degenerate-fiber limit (v == 0): the cell equation is pure logistic.
inline double logistic(double psi0, double r0, double t) {
    if (psi0 == 0.0) return 0.0;
    return psi0 / (psi0 + (1.0 - psi0) * std::exp(-r0 * t));
}

// ---------------------------------------------------------------------------
// Quadrature references.
// ---------------------------------------------------------------------------

// ∫_a^b amp * exp(-(x-c)^2 / (2 w^2)) dx, exact via erf.
inline double gaussian_mass(double amp, double c, double w, double a,
                            double b) {
    const double s = std::sqrt(2.0) * w;
    return amp * w * std::sqrt(2.0 * std::acos(-1.0)) * 0.5 *
           (std::erf((b - c) / s) - std::erf((a - c) / s));
}

// ---------------------------------------------------------------------------
// Deterministic uniform variates: identical across platforms, unlike
// std::uniform_real_distribution.
// ---------------------------------------------------------------------------

class Uniform {
  public:
    explicit Uniform(std::uint64_t seed) : eng_(seed) {}
    double next() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double next(double a, double b) { return a + (b - a) * next(); }
    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace oracles
