#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "epihom/geometry.hpp"

namespace epihom {

enum class Subdomain : std::uint8_t { Inner = 0, Outer = 1 };

struct Triangle {
    std::array<int, 3> v{};   // counterclockwise vertex ids
    Subdomain tag = Subdomain::Outer;
};

/// One membrane segment between consecutive interface pairs, oriented so the
/// loop runs counterclockwise around its cell; `pa`/`pb` index interface_pairs.
struct InterfaceEdge {
    int pa = -1;
    int pb = -1;
};

/// Conforming triangulation of a square domain with one or more embedded
/// closed membrane curves. Vertices on a membrane are duplicated: inner
/// triangles reference the inner copy, outer triangles the outer copy, so a
/// field may jump across the curve. interface_pairs maps the copies onto each
/// other; interface_edges traces each membrane loop in order.
struct InterfaceMesh {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<std::pair<int, int>> interface_pairs;  // (inner id, outer id)
    std::vector<InterfaceEdge> interface_edges;
    std::vector<int> loop_offsets;       // start index into interface_pairs per loop, plus total
    std::vector<Vec2> loop_centers;      // cell center per loop
    std::vector<int> boundary_vertices;  // ids on the outer square boundary
    double domain_size = 0.0;            // side length of the square domain

    int pair_count() const { return static_cast<int>(interface_pairs.size()); }
    int loop_count() const { return static_cast<int>(loop_offsets.size()) - 1; }

    double triangle_area(const Triangle& t) const {
        const Vec2& p0 = vertices[t.v[0]];
        const Vec2& p1 = vertices[t.v[1]];
        const Vec2& p2 = vertices[t.v[2]];
        return 0.5 * (p1 - p0).cross(p2 - p0);
    }

    double total_area() const;
    double inner_area() const;
    double inner_area_fraction() const { return inner_area() / total_area(); }

    /// Chord length of interface edge e (both copies coincide geometrically).
    double edge_length(const InterfaceEdge& e) const {
        return (vertices[interface_pairs[e.pb].first] -
                vertices[interface_pairs[e.pa].first]).norm();
    }

    /// Unit normal of interface edge e pointing from inner to outer side.
    Vec2 edge_normal(const InterfaceEdge& e) const {
        Vec2 t = vertices[interface_pairs[e.pb].first] -
                 vertices[interface_pairs[e.pa].first];
        Vec2 n{t.y, -t.x};
        return n.normalized();
    }

    double interface_length() const;

    /// Lumped measure of the membrane patch around each interface pair
    /// (half the two adjacent chord lengths).
    std::vector<double> interface_weights() const;

    /// Arc angle of each interface pair about its loop's cell center.
    std::vector<double> interface_angles() const;

    /// Averaged inner-to-outer unit normal at each interface pair.
    std::vector<Vec2> interface_normals() const;
};

/// Meshes one unit cell. h_target sets the target edge length; the membrane
/// polygon is refined until every chord is below 1.4*h_target so the chord
/// error stays under h^2 / (2 * min curvature radius).
InterfaceMesh build_unit_cell_mesh(const CellGeometry& geometry, double h_target);

/// Tiles n x n scaled copies of the unit cell (n = domain_size / (eps*L),
/// which must be integral) and fuses the shared tile boundaries.
InterfaceMesh build_tiled_mesh(const CellGeometry& geometry, double eps,
                               double domain_size, double h_target);

/// Uniform triangulation of a square without any interface (macro meshes).
InterfaceMesh build_square_mesh(double domain_size, double h_target);

/// Plain-text mesh format: vertex count, "x y" lines, triangle count,
/// "i j k tag" lines, interface pair count, "i_in i_out" lines.
void write_mesh(std::ostream& os, const InterfaceMesh& mesh);
std::string mesh_to_string(const InterfaceMesh& mesh);

} // namespace epihom
