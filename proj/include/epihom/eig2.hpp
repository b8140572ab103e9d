#pragma once

#include "epihom/geometry.hpp"
#include "epihom/linalg.hpp"

namespace epihom {

struct Eig2 {
    double lambda1 = 0.0;  // lambda1 >= lambda2
    double lambda2 = 0.0;
    Vec2 v1{1.0, 0.0};
    Vec2 v2{0.0, 1.0};
};

/// Closed-form eigendecomposition of a (nearly) symmetric 2x2 matrix.
/// The matrix is symmetrized by averaging; eigenvector signs are fixed by the
/// first-nonzero-positive rule.
Eig2 eig2x2_symmetric(const Mat2& m);

} // namespace epihom
