#pragma once

#include <utility>

#include "mesh.hpp"

namespace hhodef {

/// Cube (-1,1)^3 with the top split into a central indentation zone and the
/// remaining surface.  n must be a multiple of 4 so the indentation edge at
/// +-0.5 falls on mesh lines.  Tags: bottom (z=-1), indent (z=1, |x|<=0.5,
/// |y|<=0.5), free (everything else).
inline Mesh generate_block_mesh(int n)
{
    if (n < 4 || n % 4 != 0)
        throw MeshError("generate_block_mesh: need n a positive multiple of 4");

    Mesh mesh = generate_cube_mesh(n);
    mesh.vertices = ((2.0 * mesh.vertices).array() - 1.0).matrix();

    for (int f = 0; f < mesh.num_faces(); f++) {
        if (!mesh.is_boundary_face(f))
            continue;
        const std::string side = mesh.face_tags[f];
        if (side == "z0") {
            mesh.face_tags[f] = "bottom";
        } else if (side == "z1") {
            Vec bc = Vec::Zero(3);
            for (int v = 0; v < 3; v++)
                bc += mesh.vertices.row(mesh.faces[f][v]).transpose();
            bc /= 3.0;
            mesh.face_tags[f] =
                (std::abs(bc(0)) < 0.5 && std::abs(bc(1)) < 0.5) ? "indent" : "free";
        } else {
            mesh.face_tags[f] = "free";
        }
    }
    return mesh;
}

namespace detail {

/* Prism (p0 p1 p2 bottom, p3 p4 p5 top, p_i below p_{i+3}) into three
 * tetrahedra.  Rotating the smallest global index to the front and picking
 * the quad diagonal through the smaller of the remaining corners makes every
 * quad face split along the diagonal containing its smallest vertex, so
 * neighbouring prisms always agree on the shared triangles. */
inline void split_prism(const std::array<int, 6>& p,
                        std::vector<std::array<int, 4>>& out)
{
    static const int rot[6][6] = {{0, 1, 2, 3, 4, 5}, {1, 2, 0, 4, 5, 3},
                                  {2, 0, 1, 5, 3, 4}, {3, 5, 4, 0, 2, 1},
                                  {4, 3, 5, 1, 0, 2}, {5, 4, 3, 2, 1, 0}};
    int mpos = 0;
    for (int i = 1; i < 6; i++)
        if (p[i] < p[mpos])
            mpos = i;

    std::array<int, 6> v;
    for (int i = 0; i < 6; i++)
        v[i] = p[rot[mpos][i]];

    if (std::min(v[1], v[5]) < std::min(v[2], v[4])) {
        out.push_back({v[0], v[1], v[2], v[5]});
        out.push_back({v[0], v[1], v[5], v[4]});
        out.push_back({v[0], v[4], v[5], v[3]});
    } else {
        out.push_back({v[0], v[1], v[2], v[4]});
        out.push_back({v[0], v[4], v[2], v[5]});
        out.push_back({v[0], v[4], v[5], v[3]});
    }
}

inline void fix_orientation(Mesh& mesh)
{
    for (auto& tet : mesh.cells) {
        Mat verts(4, 3);
        for (int v = 0; v < 4; v++)
            verts.row(v) = mesh.vertices.row(tet[v]);
        if (simplex_measure(verts) < 0.0)
            std::swap(tet[1], tet[2]);
    }
}

} // namespace detail

/// Hollow cylinder r0 <= r <= r1, 0 <= z <= height: an annulus triangulation
/// extruded into n_axial prism layers, each prism cut into three tetrahedra.
/// Tags: bottom (z=0), top (z=height), lateral (both curved surfaces).
inline Mesh generate_cylinder_mesh(double r0, double r1, double height,
                                   int n_radial, int n_angular, int n_axial)
{
    if (height <= 0.0 || n_axial < 1)
        throw MeshError("generate_cylinder_mesh: need height > 0, n_axial >= 1");
    const Mesh base = generate_annulus_mesh(r0, r1, n_radial, n_angular);
    const int nv2 = base.num_vertices();

    Mesh mesh;
    mesh.dim = 3;
    mesh.vertices.resize(nv2 * (n_axial + 1), 3);
    for (int l = 0; l <= n_axial; l++)
        for (int v = 0; v < nv2; v++)
            mesh.vertices.row(l * nv2 + v) << base.vertices(v, 0),
                base.vertices(v, 1), height * l / n_axial;

    for (int l = 0; l < n_axial; l++)
        for (const auto& tri : base.cells) {
            const std::array<int, 6> prism = {
                l * nv2 + tri[0],       l * nv2 + tri[1],       l * nv2 + tri[2],
                (l + 1) * nv2 + tri[0], (l + 1) * nv2 + tri[1], (l + 1) * nv2 + tri[2]};
            detail::split_prism(prism, mesh.cells);
        }

    detail::fix_orientation(mesh);
    finalize_connectivity(mesh);

    for (int f = 0; f < mesh.num_faces(); f++) {
        if (!mesh.is_boundary_face(f))
            continue;
        bool bottom = true, top = true;
        for (int v = 0; v < 3; v++) {
            const double z = mesh.vertices(mesh.faces[f][v], 2);
            bottom = bottom && std::abs(z) < 1e-12 * height;
            top = top && std::abs(z - height) < 1e-12 * height;
        }
        mesh.face_tags[f] = bottom ? "bottom" : (top ? "top" : "lateral");
    }
    return mesh;
}

/// Ball of radius 1 meshed by mapping a structured cube mesh radially onto
/// the sphere, with spherical voids carved by removing the tetrahedra whose
/// barycenter falls inside one (a stair-step approximation of the cavities).
/// Tags: outer (unit sphere), void (carved surfaces).
inline Mesh generate_sphere_mesh(int n,
                                 const std::vector<std::pair<Vec, double>>& voids)
{
    const Mesh cube = generate_cube_mesh(n);

    Mesh mesh;
    mesh.dim = 3;
    mesh.vertices.resize(cube.num_vertices(), 3);
    for (int v = 0; v < cube.num_vertices(); v++) {
        const Vec p =
            ((2.0 * cube.vertices.row(v).transpose()).array() - 1.0).matrix();
        const double linf = p.cwiseAbs().maxCoeff();
        mesh.vertices.row(v) =
            (linf > 0.0 ? Vec(p * (linf / p.norm())) : p).transpose();
    }

    std::vector<int> removed_per_void(voids.size(), 0);
    for (const auto& tet : cube.cells) {
        Vec bc = Vec::Zero(3);
        for (int v = 0; v < 4; v++)
            bc += mesh.vertices.row(tet[v]).transpose();
        bc /= 4.0;
        bool inside = false;
        for (std::size_t i = 0; i < voids.size(); i++)
            if ((bc - voids[i].first).norm() < voids[i].second) {
                removed_per_void[i]++;
                inside = true;
            }
        if (!inside)
            mesh.cells.push_back(tet);
    }
    for (std::size_t i = 0; i < voids.size(); i++)
        if (!removed_per_void[i])
            throw MeshError("generate_sphere_mesh: void " + std::to_string(i) +
                            " is smaller than the mesh resolution; increase n");

    // drop vertices that belonged only to removed cells
    std::vector<int> remap(mesh.vertices.rows(), -1);
    int used = 0;
    for (const auto& tet : mesh.cells)
        for (int v = 0; v < 4; v++)
            if (remap[tet[v]] < 0)
                remap[tet[v]] = used++;
    Mat verts(used, 3);
    for (int v = 0; v < static_cast<int>(remap.size()); v++)
        if (remap[v] >= 0)
            verts.row(remap[v]) = mesh.vertices.row(v);
    mesh.vertices = verts;
    for (auto& tet : mesh.cells)
        for (int v = 0; v < 4; v++)
            tet[v] = remap[tet[v]];

    detail::fix_orientation(mesh);
    finalize_connectivity(mesh);

    for (int f = 0; f < mesh.num_faces(); f++) {
        if (!mesh.is_boundary_face(f))
            continue;
        bool outer = true;
        for (int v = 0; v < 3; v++)
            outer = outer &&
                    std::abs(mesh.vertices.row(mesh.faces[f][v]).norm() - 1.0) < 1e-9;
        mesh.face_tags[f] = outer ? "outer" : "void";
    }
    return mesh;
}

} // namespace hhodef
