#pragma once

#include <cmath>

#include "epihom/error.hpp"

namespace epihom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const {
        double n = norm();
        return {x / n, y / n};
    }
    /// Rotate by angle (radians, counterclockwise).
    Vec2 rotated(double angle) const {
        double c = std::cos(angle), s = std::sin(angle);
        return {c * x - s * y, s * x + c * y};
    }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

enum class CellShape { Circle, Ellipse };

/// Geometry of one periodicity cell: a square of side `unit_cell_size`
/// containing a single closed membrane curve (circle or ellipse), rotated by
/// `lattice_angle` and shifted by `center_offset` from the square's center.
struct CellGeometry {
    double unit_cell_size = 2e-4;      // m, side of the square cell
    CellShape shape = CellShape::Circle;
    double radius = 0.5e-4;            // m, circle
    double semi_axis_a = 0.5e-4;       // m, ellipse
    double semi_axis_b = 0.5e-4;       // m, ellipse
    double lattice_angle = 0.0;        // rad, in [0, pi)
    Vec2 center_offset{0.0, 0.0};      // m, from the cell center

    double axis_a() const { return shape == CellShape::Circle ? radius : semi_axis_a; }
    double axis_b() const { return shape == CellShape::Circle ? radius : semi_axis_b; }

    Vec2 center() const {
        double half = unit_cell_size / 2.0;
        return {half + center_offset.x, half + center_offset.y};
    }

    /// Analytic enclosed area pi*a*b.
    double inclusion_area() const { return M_PI * axis_a() * axis_b(); }

    /// |Y_i| / |Y|.
    double volume_fraction() const {
        return inclusion_area() / (unit_cell_size * unit_cell_size);
    }

    /// Ramanujan approximation of the ellipse perimeter (exact for circles).
    double perimeter() const {
        double a = axis_a(), b = axis_b();
        double h = (a - b) * (a - b) / ((a + b) * (a + b));
        return M_PI * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
    }

    /// Smallest curvature radius along the membrane, b^2/a for a >= b.
    double min_curvature_radius() const {
        double a = axis_a(), b = axis_b();
        double lo = std::min(a, b), hi = std::max(a, b);
        return lo * lo / hi;
    }

    /// Axis-aligned half-widths of the (rotated) ellipse bounding box.
    Vec2 bounding_half_widths() const {
        double a = axis_a(), b = axis_b();
        double c = std::cos(lattice_angle), s = std::sin(lattice_angle);
        return {std::sqrt(a * a * c * c + b * b * s * s),
                std::sqrt(a * a * s * s + b * b * c * c)};
    }

    /// Throws on violated invariants (positive axes, angle range, cell
    /// strictly inside the unit square, volume fraction in (0,1)).
    void validate() const {
        if (unit_cell_size <= 0.0)
            throw Error("config-invalid", "unit_cell_size must be positive");
        if (axis_a() <= 0.0 || axis_b() <= 0.0)
            throw Error("config-invalid", "cell semi-axes must be positive");
        if (lattice_angle < 0.0 || lattice_angle >= M_PI)
            throw Error("config-invalid", "lattice_angle must lie in [0, pi)");
        double f = volume_fraction();
        if (f <= 0.0 || f >= 1.0)
            throw Error("config-invalid", "volume fraction outside (0,1)");
        Vec2 c = center();
        Vec2 w = bounding_half_widths();
        double L = unit_cell_size;
        if (c.x - w.x <= 0.0 || c.x + w.x >= L || c.y - w.y <= 0.0 || c.y + w.y >= L)
            throw Error("cell-intersects-boundary",
                        "cell closure must lie strictly inside the unit cell");
    }

    /// Distance from the cell center to the membrane along unit direction d.
    double membrane_distance(const Vec2& d) const {
        Vec2 local = d.rotated(-lattice_angle);
        double a = axis_a(), b = axis_b();
        double q = (local.x / a) * (local.x / a) + (local.y / b) * (local.y / b);
        return 1.0 / std::sqrt(q);
    }
};

} // namespace epihom
