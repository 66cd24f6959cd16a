#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace haptofv {

using index_t = std::ptrdiff_t;

/// Compensated (Neumaier) accumulator; fixed-order summation stays
/// deterministic and nearly exact regardless of term cancellation.
class CompensatedSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Uniform structured mesh on an axis-aligned box, dimension 1 or 2.
/// Cells are addressed row-major with axis 0 fastest.
class Grid {
  public:
    Grid(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
         std::array<index_t, 2> n)
        : dim_(dim), lo_(lo), hi_(hi), n_(n) {
        if (dim != 1 && dim != 2)
            throw std::invalid_argument("grid: dimension must be 1 or 2");
        if (dim == 1) {
            lo_[1] = 0.0;
            hi_[1] = 1.0;
            n_[1] = 1;
        }
        for (int a = 0; a < dim_; ++a) {
            if (!(lo_[a] < hi_[a]))
                throw std::invalid_argument("grid: requires lo < hi on axis " +
                                            std::to_string(a));
            if (n_[a] < 2)
                throw std::invalid_argument(
                    "grid: requires at least 2 cells per axis, got " +
                    std::to_string(n_[a]) + " on axis " + std::to_string(a));
            h_[a] = (hi_[a] - lo_[a]) / static_cast<double>(n_[a]);
        }
        if (dim == 1) h_[1] = 1.0;
    }

    static Grid line(double lo, double hi, index_t n) {
        return Grid(1, {lo, 0.0}, {hi, 1.0}, {n, 1});
    }
    static Grid box(double lo0, double hi0, index_t n0, double lo1, double hi1,
                    index_t n1) {
        return Grid(2, {lo0, lo1}, {hi0, hi1}, {n0, n1});
    }

    int dim() const { return dim_; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    index_t cells(int axis) const { return n_[axis]; }
    double spacing(int axis) const { return h_[axis]; }

    index_t cell_count() const { return n_[0] * n_[1]; }
    double cell_volume() const { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }
    /// Area of a face orthogonal to `axis` (1 in 1D).
    double face_area(int axis) const {
        return dim_ == 1 ? 1.0 : h_[1 - axis];
    }

    double center(int axis, index_t i) const {
        return lo_[axis] + (static_cast<double>(i) + 0.5) * h_[axis];
    }

    index_t flatten(index_t i, index_t j = 0) const { return i + n_[0] * j; }
    std::array<index_t, 2> unflatten(index_t c) const {
        return {c % n_[0], c / n_[0]};
    }

    /// Squared distance of the cell center from the origin.
    double radius_sq(index_t cell) const {
        auto ij = unflatten(cell);
        double r2 = 0.0;
        for (int a = 0; a < dim_; ++a) {
            double x = center(a, ij[a]);
            r2 += x * x;
        }
        return r2;
    }

    /// Interior faces orthogonal to `axis`: (n_axis - 1) per transverse row.
    index_t interior_face_count(int axis) const {
        if (axis < 0 || axis >= dim_)
            throw std::invalid_argument("grid: face axis out of range");
        return (n_[axis] - 1) * n_[1 - axis];
    }

    bool is_boundary_cell(index_t c) const {
        auto ij = unflatten(c);
        for (int a = 0; a < dim_; ++a)
            if (ij[a] == 0 || ij[a] == n_[a] - 1) return true;
        return false;
    }

    bool operator==(const Grid& o) const {
        if (dim_ != o.dim_) return false;
        for (int a = 0; a < dim_; ++a)
            if (lo_[a] != o.lo_[a] || hi_[a] != o.hi_[a] || n_[a] != o.n_[a])
                return false;
        return true;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

  private:
    int dim_;
    std::array<double, 2> lo_, hi_;
    std::array<index_t, 2> n_;
    std::array<double, 2> h_{1.0, 1.0};
};

/// Piecewise-constant cell values over a Grid. Value semantics.
class GridFunction {
  public:
    explicit GridFunction(const Grid& g, double fill = 0.0)
        : grid_(g), v_(static_cast<std::size_t>(g.cell_count()), fill) {}

    const Grid& grid() const { return grid_; }
    index_t size() const { return static_cast<index_t>(v_.size()); }
    double& operator[](index_t i) { return v_[static_cast<std::size_t>(i)]; }
    double operator[](index_t i) const {
        return v_[static_cast<std::size_t>(i)];
    }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

  private:
    Grid grid_;
    std::vector<double> v_;
};

/// Evaluate `fn(x)` (1D) or `fn(x, y)` (2D) at every cell center.
template <class Fn>
GridFunction sample(const Grid& g, Fn&& fn) {
    GridFunction f(g);
    if (g.dim() == 1) {
        if constexpr (std::is_invocable_v<Fn&, double>) {
            for (index_t i = 0; i < g.cells(0); ++i) f[i] = fn(g.center(0, i));
        } else {
            throw std::invalid_argument("sample: 1D grid expects fn(x)");
        }
    } else {
        if constexpr (std::is_invocable_v<Fn&, double, double>) {
            for (index_t j = 0; j < g.cells(1); ++j)
                for (index_t i = 0; i < g.cells(0); ++i)
                    f[g.flatten(i, j)] = fn(g.center(0, i), g.center(1, j));
        } else {
            throw std::invalid_argument("sample: 2D grid expects fn(x, y)");
        }
    }
    return f;
}

/// One scalar per interior face, stored per axis. Boundary faces carry an
/// implicit zero (no-flux boundary).
class FaceField {
  public:
    explicit FaceField(const Grid& g) : grid_(g) {
        for (int a = 0; a < g.dim(); ++a)
            comp_[a].assign(static_cast<std::size_t>(count_(g, a)), 0.0);
    }

    const Grid& grid() const { return grid_; }
    index_t count(int axis) const {
        return static_cast<index_t>(comp_[axis].size());
    }
    double& at(int axis, index_t f) {
        return comp_[axis][static_cast<std::size_t>(f)];
    }
    double at(int axis, index_t f) const {
        return comp_[axis][static_cast<std::size_t>(f)];
    }
    std::vector<double>& component(int axis) { return comp_[axis]; }
    const std::vector<double>& component(int axis) const {
        return comp_[axis];
    }
    void fill(double v) {
        for (auto& c : comp_)
            for (auto& x : c) x = v;
    }

  private:
    static index_t count_(const Grid& g, int axis) {
        return (g.cells(axis) - 1) * (g.dim() == 2 ? g.cells(1 - axis) : 1);
    }
    Grid grid_;
    std::array<std::vector<double>, 2> comp_;
};

/// Visit interior faces orthogonal to `axis` in deterministic order:
/// fn(left_cell, right_cell, face_index).
template <class Fn>
void for_each_face(const Grid& g, int axis, Fn&& fn) {
    const index_t n0 = g.cells(0);
    if (g.dim() == 1) {
        for (index_t i = 0; i + 1 < n0; ++i) fn(i, i + 1, i);
        return;
    }
    const index_t n1 = g.cells(1);
    if (axis == 0) {
        for (index_t j = 0; j < n1; ++j)
            for (index_t i = 0; i + 1 < n0; ++i)
                fn(g.flatten(i, j), g.flatten(i + 1, j), i + (n0 - 1) * j);
    } else {
        for (index_t j = 0; j + 1 < n1; ++j)
            for (index_t i = 0; i < n0; ++i)
                fn(g.flatten(i, j), g.flatten(i, j + 1), i + n0 * j);
    }
}

inline void assert_finite(const GridFunction& f, const char* what) {
    for (index_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i]))
            throw std::runtime_error(std::string("non-finite value in ") +
                                     what + " at cell " + std::to_string(i));
}

inline void check_same_grid(const GridFunction& a, const GridFunction& b,
                            const char* what) {
    if (a.grid() != b.grid())
        throw std::invalid_argument(std::string(what) +
                                    ": grid mismatch between operands");
}

/// Two-point gradient at every interior face, all axes.
inline FaceField face_gradient(const GridFunction& f) {
    const Grid& g = f.grid();
    FaceField grad(g);
    for (int a = 0; a < g.dim(); ++a) {
        const double inv_h = 1.0 / g.spacing(a);
        for_each_face(g, a, [&](index_t cl, index_t cr, index_t fi) {
            grad.at(a, fi) = (f[cr] - f[cl]) * inv_h;
        });
    }
    return grad;
}

/// Discrete divergence of a face flux with no-flux boundaries:
/// div_i = sum_a (F_right - F_left) / h_a.
inline GridFunction divergence(const FaceField& flux) {
    const Grid& g = flux.grid();
    GridFunction div(g, 0.0);
    for (int a = 0; a < g.dim(); ++a) {
        const double inv_h = 1.0 / g.spacing(a);
        for_each_face(g, a, [&](index_t cl, index_t cr, index_t fi) {
            const double f = flux.at(a, fi) * inv_h;
            div[cl] += f;
            div[cr] -= f;
        });
    }
    return div;
}

/// Midpoint-rule integral over the box.
inline double integrate(const GridFunction& f) {
    CompensatedSum s;
    for (index_t i = 0; i < f.size(); ++i) s.add(f[i]);
    return s.value() * f.grid().cell_volume();
}

inline double linf_norm(const GridFunction& f) {
    double m = 0.0;
    for (index_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
    return m;
}

/// L^p norm, p >= 1 finite or infinity.
inline double lp_norm(const GridFunction& f, double p) {
    if (std::isinf(p)) return linf_norm(f);
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: requires p >= 1");
    CompensatedSum s;
    if (p == 1.0) {
        for (index_t i = 0; i < f.size(); ++i) s.add(std::abs(f[i]));
        return s.value() * f.grid().cell_volume();
    }
    if (p == 2.0) {
        for (index_t i = 0; i < f.size(); ++i) s.add(f[i] * f[i]);
        return std::sqrt(s.value() * f.grid().cell_volume());
    }
    if (p == 3.0) {
        for (index_t i = 0; i < f.size(); ++i) {
            double a = std::abs(f[i]);
            s.add(a * a * a);
        }
        return std::cbrt(s.value() * f.grid().cell_volume());
    }
    for (index_t i = 0; i < f.size(); ++i) s.add(std::pow(std::abs(f[i]), p));
    return std::pow(s.value() * f.grid().cell_volume(), 1.0 / p);
}

/// ∫ (|x|²/2) f dx with cell-center coordinates.
inline double second_moment(const GridFunction& f) {
    CompensatedSum s;
    const Grid& g = f.grid();
    for (index_t i = 0; i < f.size(); ++i)
        s.add(0.5 * g.radius_sq(i) * f[i]);
    return s.value() * g.cell_volume();
}

/// ∫ w f dx.
inline double weighted_integral(const GridFunction& w, const GridFunction& f) {
    check_same_grid(w, f, "weighted_integral");
    CompensatedSum s;
    for (index_t i = 0; i < f.size(); ++i) s.add(w[i] * f[i]);
    return s.value() * f.grid().cell_volume();
}

/// Largest |f| over boundary cells (box-truncation tail monitor).
inline double max_boundary_value(const GridFunction& f) {
    const Grid& g = f.grid();
    double m = 0.0;
    if (g.dim() == 1) {
        m = std::max(std::abs(f[0]), std::abs(f[g.cells(0) - 1]));
    } else {
        const index_t n0 = g.cells(0), n1 = g.cells(1);
        for (index_t i = 0; i < n0; ++i) {
            m = std::max(m, std::abs(f[g.flatten(i, 0)]));
            m = std::max(m, std::abs(f[g.flatten(i, n1 - 1)]));
        }
        for (index_t j = 0; j < n1; ++j) {
            m = std::max(m, std::abs(f[g.flatten(0, j)]));
            m = std::max(m, std::abs(f[g.flatten(n0 - 1, j)]));
        }
    }
    return m;
}

inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    check_same_grid(a, b, "difference");
    GridFunction d(a.grid());
    for (index_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

inline GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    check_same_grid(a, b, "sum");
    GridFunction d(a.grid());
    for (index_t i = 0; i < a.size(); ++i) d[i] = a[i] + b[i];
    return d;
}

inline GridFunction operator*(double c, const GridFunction& a) {
    GridFunction d(a.grid());
    for (index_t i = 0; i < a.size(); ++i) d[i] = c * a[i];
    return d;
}

}  // namespace haptofv
