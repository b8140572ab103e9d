#include "epihom/eig2.hpp"

#include <cmath>

namespace epihom {

namespace {

Vec2 fix_sign(Vec2 v) {
    if (v.x < 0.0 || (v.x == 0.0 && v.y < 0.0)) return {-v.x, -v.y};
    return v;
}

} // namespace

Eig2 eig2x2_symmetric(const Mat2& m) {
    double scale = m.norm();
    if (scale > 0.0 && std::abs(m.a12 - m.a21) > 1e-3 * scale)
        throw Error("config-invalid", "matrix too far from symmetric for eig2x2");
    double a = m.a11, d = m.a22;
    double b = 0.5 * (m.a12 + m.a21);

    Eig2 e;
    double mean = 0.5 * (a + d);
    double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    e.lambda1 = mean + disc;
    e.lambda2 = mean - disc;
    if (disc <= 1e-300 * std::abs(mean) || (b == 0.0 && a == d)) {
        e.v1 = {1.0, 0.0};
        e.v2 = {0.0, 1.0};
        return e;
    }
    if (b == 0.0) {
        // Diagonal: order the axis vectors by eigenvalue.
        if (a >= d) {
            e.v1 = {1.0, 0.0};
            e.v2 = {0.0, 1.0};
        } else {
            e.v1 = {0.0, 1.0};
            e.v2 = {1.0, 0.0};
        }
        return e;
    }
    Vec2 u1{b, e.lambda1 - a};
    Vec2 u1b{e.lambda1 - d, b};
    e.v1 = fix_sign((u1.norm() >= u1b.norm() ? u1 : u1b).normalized());
    e.v2 = fix_sign(Vec2{-e.v1.y, e.v1.x});
    return e;
}

} // namespace epihom
