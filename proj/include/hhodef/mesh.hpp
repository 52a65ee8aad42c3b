#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "quadrature.hpp"
#include "types.hpp"

namespace hhodef {

/// Conforming simplicial mesh in dimension 2 or 3.  Cells are triangles or
/// tetrahedra with positively oriented vertex lists; faces are the codimension
/// one simplices of the skeleton, stored once and identified by their sorted
/// vertex tuple.
struct Mesh {
    int dim = 0;
    Mat vertices; // nv x dim

    std::vector<std::array<int, 4>> cells;     // vertex ids, entry 3 unused in 2D
    std::vector<std::array<int, 3>> faces;     // sorted vertex ids, entry 2 unused in 2D
    std::vector<std::vector<int>> cell_faces;  // per cell, local face f opposite vertex f
    std::vector<std::vector<int>> cell_face_signs; // +1 owner, -1 neighbour
    std::vector<std::array<int, 2>> face_cells;    // {owner, neighbour or -1}
    std::vector<std::string> face_tags;            // empty for interior faces

    int num_cells() const { return static_cast<int>(cells.size()); }
    int num_faces() const { return static_cast<int>(faces.size()); }
    int num_vertices() const { return static_cast<int>(vertices.rows()); }
    int vertices_per_cell() const { return dim + 1; }
    int vertices_per_face() const { return dim; }

    bool is_boundary_face(int f) const { return face_cells[f][1] < 0; }

    std::vector<int> boundary_faces() const
    {
        std::vector<int> out;
        for (int f = 0; f < num_faces(); f++)
            if (is_boundary_face(f))
                out.push_back(f);
        return out;
    }
};

/// Geometry of one face as seen from a given cell: the normal points out of
/// that cell.
struct FaceGeometry {
    int face_id = -1;
    double measure = 0.0;  // length (2D) or area (3D)
    double diameter = 0.0;
    Vec barycenter;
    Vec normal;
    Mat vertices; // dim rows x dim cols
};

struct CellGeometry {
    int cell_id = -1;
    int dim = 0;
    double measure = 0.0;  // area (2D) or volume (3D)
    double diameter = 0.0;
    Vec barycenter;
    Mat vertices; // (dim+1) x dim
    std::vector<FaceGeometry> faces;
};

namespace detail {

inline double simplex_measure(const Mat& verts)
{
    const int dim = static_cast<int>(verts.cols());
    Mat B(dim, dim);
    for (int j = 0; j < dim; j++)
        B.col(j) = (verts.row(j + 1) - verts.row(0)).transpose();
    double fact = 1.0;
    for (int j = 2; j <= dim; j++)
        fact *= j;
    return B.determinant() / fact; // signed
}

inline double points_diameter(const Mat& pts)
{
    double d = 0.0;
    for (Eigen::Index a = 0; a < pts.rows(); a++)
        for (Eigen::Index b = a + 1; b < pts.rows(); b++)
            d = std::max(d, (pts.row(a) - pts.row(b)).norm());
    return d;
}

} // namespace detail

/// Fill faces / cell_faces / face_cells from the cell list.  Local face f of
/// a cell is the one opposite local vertex f.  Throws MeshError on inverted
/// cells or faces shared by more than two cells.
inline void finalize_connectivity(Mesh& mesh)
{
    const int nfv = mesh.vertices_per_face();

    mesh.faces.clear();
    mesh.cell_faces.assign(mesh.cells.size(), {});
    mesh.cell_face_signs.assign(mesh.cells.size(), {});
    mesh.face_cells.clear();

    std::map<std::array<int, 3>, int> lookup;
    for (int c = 0; c < mesh.num_cells(); c++) {
        Mat verts(mesh.dim + 1, mesh.dim);
        for (int v = 0; v <= mesh.dim; v++)
            verts.row(v) = mesh.vertices.row(mesh.cells[c][v]);
        const double vol = detail::simplex_measure(verts);
        if (!(vol > 0.0))
            throw MeshError("cell " + std::to_string(c) +
                            " is inverted or degenerate (signed measure " +
                            std::to_string(vol) + ")");

        for (int lf = 0; lf <= mesh.dim; lf++) {
            std::array<int, 3> key = {-1, -1, -1};
            int pos = 0;
            for (int v = 0; v <= mesh.dim; v++)
                if (v != lf)
                    key[pos++] = mesh.cells[c][v];
            std::sort(key.begin(), key.begin() + nfv);

            auto it = lookup.find(key);
            int fid;
            if (it == lookup.end()) {
                fid = static_cast<int>(mesh.faces.size());
                lookup.emplace(key, fid);
                mesh.faces.push_back(key);
                mesh.face_cells.push_back({c, -1});
                mesh.cell_face_signs[c].push_back(+1);
            } else {
                fid = it->second;
                if (mesh.face_cells[fid][1] >= 0)
                    throw MeshError("face shared by more than two cells "
                                    "(non-conforming mesh near cell " +
                                    std::to_string(c) + ")");
                mesh.face_cells[fid][1] = c;
                mesh.cell_face_signs[c].push_back(-1);
            }
            mesh.cell_faces[c].push_back(fid);
        }
    }
    mesh.face_tags.assign(mesh.faces.size(), "");
}

/// Measures, barycenters, diameters and outward normals for one cell.  The
/// normals are computed from the face planes and oriented with the vector
/// from the cell barycenter, independent of face ownership.
inline CellGeometry cell_geometry(const Mesh& mesh, int cell_id)
{
    CellGeometry geo;
    geo.cell_id = cell_id;
    geo.dim = mesh.dim;

    const int dim = mesh.dim;
    geo.vertices.resize(dim + 1, dim);
    for (int v = 0; v <= dim; v++)
        geo.vertices.row(v) = mesh.vertices.row(mesh.cells[cell_id][v]);

    geo.measure = detail::simplex_measure(geo.vertices);
    geo.diameter = detail::points_diameter(geo.vertices);
    geo.barycenter = geo.vertices.colwise().mean().transpose();

    if (geo.measure <= 1e-14 * std::pow(geo.diameter, dim))
        throw MeshError("cell " + std::to_string(cell_id) + " is degenerate");

    for (int lf = 0; lf <= dim; lf++) {
        FaceGeometry fg;
        fg.face_id = mesh.cell_faces[cell_id][lf];

        fg.vertices.resize(dim, dim);
        const auto& fverts = mesh.faces[fg.face_id];
        for (int v = 0; v < dim; v++)
            fg.vertices.row(v) = mesh.vertices.row(fverts[v]);

        fg.barycenter = fg.vertices.colwise().mean().transpose();
        fg.diameter = detail::points_diameter(fg.vertices);

        if (dim == 2) {
            const Vec e = (fg.vertices.row(1) - fg.vertices.row(0)).transpose();
            fg.measure = e.norm();
            fg.normal = Vec(2);
            fg.normal << e(1), -e(0);
        } else {
            const Vec e1 = (fg.vertices.row(1) - fg.vertices.row(0)).transpose();
            const Vec e2 = (fg.vertices.row(2) - fg.vertices.row(0)).transpose();
            Eigen::Vector3d cr = Eigen::Vector3d(e1).cross(Eigen::Vector3d(e2));
            fg.measure = 0.5 * cr.norm();
            fg.normal = cr;
        }
        fg.normal.normalize();
        if (fg.normal.dot(fg.barycenter - geo.barycenter) < 0.0)
            fg.normal = -fg.normal;

        if (fg.measure <= 1e-14 * std::pow(fg.diameter, dim - 1))
            throw MeshError("face " + std::to_string(fg.face_id) + " is degenerate");

        geo.faces.push_back(std::move(fg));
    }
    return geo;
}

inline QuadratureRule cell_rule(const CellGeometry& geo, int order)
{
    return map_rule(simplex_rule(geo.dim, order), geo.vertices);
}

inline QuadratureRule face_rule(const CellGeometry& geo, int local_face, int order)
{
    return map_rule(simplex_rule(geo.dim - 1, order),
                    geo.faces[local_face].vertices);
}

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

/// Unit cube (0,1)^3 split into n^3 subcubes of 6 tetrahedra each (Kuhn
/// split, all sharing the main diagonal, face-to-face across subcubes).
/// Boundary tags: x0, x1, y0, y1, z0, z1.
inline Mesh generate_cube_mesh(int n)
{
    if (n < 1)
        throw MeshError("generate_cube_mesh: need n >= 1");

    Mesh mesh;
    mesh.dim = 3;

    const int nv = n + 1;
    auto vid = [nv](int i, int j, int k) { return (i * nv + j) * nv + k; };

    mesh.vertices.resize(nv * nv * nv, 3);
    for (int i = 0; i <= n; i++)
        for (int j = 0; j <= n; j++)
            for (int k = 0; k <= n; k++)
                mesh.vertices.row(vid(i, j, k)) << double(i) / n, double(j) / n,
                    double(k) / n;

    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                             {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++)
            for (int k = 0; k < n; k++)
                for (const auto& p : perms) {
                    int a[3] = {i, j, k};
                    std::array<int, 4> tet;
                    tet[0] = vid(a[0], a[1], a[2]);
                    a[p[0]]++;
                    tet[1] = vid(a[0], a[1], a[2]);
                    a[p[1]]++;
                    tet[2] = vid(a[0], a[1], a[2]);
                    a[p[2]]++;
                    tet[3] = vid(a[0], a[1], a[2]);

                    Mat verts(4, 3);
                    for (int v = 0; v < 4; v++)
                        verts.row(v) = mesh.vertices.row(tet[v]);
                    if (detail::simplex_measure(verts) < 0.0)
                        std::swap(tet[1], tet[2]);
                    mesh.cells.push_back(tet);
                }

    finalize_connectivity(mesh);

    const char* names[6] = {"x0", "x1", "y0", "y1", "z0", "z1"};
    for (int f = 0; f < mesh.num_faces(); f++) {
        if (!mesh.is_boundary_face(f))
            continue;
        for (int axis = 0; axis < 3; axis++)
            for (int side = 0; side < 2; side++) {
                bool on = true;
                for (int v = 0; v < 3; v++)
                    if (std::abs(mesh.vertices(mesh.faces[f][v], axis) - side) > 1e-12)
                        on = false;
                if (on)
                    mesh.face_tags[f] = names[2 * axis + side];
            }
        if (mesh.face_tags[f].empty())
            throw MeshError("cube boundary face not matched to any side");
    }
    return mesh;
}

/// Annulus R0 < |X| < R1 triangulated by n_radial rings of n_angular sectors,
/// each quad split into two triangles.  Vertices sit exactly on the circles;
/// boundary tags: inner, outer.
inline Mesh generate_annulus_mesh(double R0, double R1, int n_radial, int n_angular)
{
    if (!(0.0 < R0 && R0 < R1))
        throw MeshError("generate_annulus_mesh: need 0 < R0 < R1");
    if (n_radial < 1 || n_angular < 3)
        throw MeshError("generate_annulus_mesh: need n_radial >= 1, n_angular >= 3");

    Mesh mesh;
    mesh.dim = 2;

    auto vid = [n_angular](int ring, int j) { return ring * n_angular + j; };

    mesh.vertices.resize((n_radial + 1) * n_angular, 2);
    for (int ring = 0; ring <= n_radial; ring++) {
        const double r = R0 + (R1 - R0) * ring / n_radial;
        for (int j = 0; j < n_angular; j++) {
            const double th = 2.0 * std::numbers::pi * j / n_angular;
            mesh.vertices.row(vid(ring, j)) << r * std::cos(th), r * std::sin(th);
        }
    }

    for (int ring = 0; ring < n_radial; ring++)
        for (int j = 0; j < n_angular; j++) {
            const int jn = (j + 1) % n_angular;
            const int a = vid(ring, j), b = vid(ring + 1, j);
            const int c = vid(ring + 1, jn), d = vid(ring, jn);
            mesh.cells.push_back({a, b, c, -1});
            mesh.cells.push_back({a, c, d, -1});
        }

    finalize_connectivity(mesh);

    for (int f = 0; f < mesh.num_faces(); f++) {
        if (!mesh.is_boundary_face(f))
            continue;
        const double ra = mesh.vertices.row(mesh.faces[f][0]).norm();
        const double rb = mesh.vertices.row(mesh.faces[f][1]).norm();
        if (std::abs(ra - R0) < 1e-12 * R1 && std::abs(rb - R0) < 1e-12 * R1)
            mesh.face_tags[f] = "inner";
        else if (std::abs(ra - R1) < 1e-12 * R1 && std::abs(rb - R1) < 1e-12 * R1)
            mesh.face_tags[f] = "outer";
        else
            throw MeshError("annulus boundary face not on either circle");
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// gmsh ASCII v2.2
// ---------------------------------------------------------------------------

namespace detail {

inline std::string next_line(std::istream& in, const char* ctx)
{
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (!line.empty())
            return line;
    }
    throw MeshError(std::string("gmsh: unexpected end of file while reading ") + ctx);
}

} // namespace detail

/// Read a gmsh ASCII v2.2 mesh.  Volume elements must be 4-node tetrahedra
/// (3D) or 3-node triangles (2D); boundary elements of codimension one carry
/// the physical tag of their surface.  Tags are resolved through
/// $PhysicalNames when present, otherwise named "phys<N>".  Untagged boundary
/// faces get the tag "untagged".
inline Mesh load_gmsh(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw MeshError("cannot open mesh file: " + path);

    std::map<std::pair<int, int>, std::string> physical_names;
    std::map<long, int> node_index;
    std::vector<std::array<double, 3>> nodes;

    struct RawElement {
        int type;
        int phys;
        std::vector<long> nodes;
    };
    std::vector<RawElement> elements;
    bool format_seen = false;

    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (line == "$MeshFormat") {
            std::istringstream ls(detail::next_line(in, "$MeshFormat"));
            double version;
            int file_type = -1, data_size;
            ls >> version >> file_type >> data_size;
            if (std::abs(version - 2.2) > 1e-9 || file_type != 0)
                throw MeshError("gmsh: only ASCII v2.2 files are supported (got version " +
                                std::to_string(version) + ")");
            format_seen = true;
        } else if (line == "$PhysicalNames") {
            const int n = std::stoi(detail::next_line(in, "$PhysicalNames"));
            for (int i = 0; i < n; i++) {
                std::istringstream ls(detail::next_line(in, "$PhysicalNames"));
                int dim, id;
                std::string name;
                ls >> dim >> id;
                std::getline(ls, name);
                const auto a = name.find('"');
                const auto b = name.rfind('"');
                if (a != std::string::npos && b > a)
                    name = name.substr(a + 1, b - a - 1);
                physical_names[{dim, id}] = name;
            }
        } else if (line == "$Nodes") {
            const long n = std::stol(detail::next_line(in, "$Nodes"));
            for (long i = 0; i < n; i++) {
                std::istringstream ls(detail::next_line(in, "$Nodes"));
                long id;
                double x, y, z;
                if (!(ls >> id >> x >> y >> z))
                    throw MeshError("gmsh: malformed node line");
                node_index[id] = static_cast<int>(nodes.size());
                nodes.push_back({x, y, z});
            }
        } else if (line == "$Elements") {
            const long n = std::stol(detail::next_line(in, "$Elements"));
            for (long i = 0; i < n; i++) {
                std::istringstream ls(detail::next_line(in, "$Elements"));
                long id;
                int type, ntags;
                if (!(ls >> id >> type >> ntags))
                    throw MeshError("gmsh: malformed element line");
                RawElement el;
                el.type = type;
                el.phys = 0;
                for (int t = 0; t < ntags; t++) {
                    int tag;
                    ls >> tag;
                    if (t == 0)
                        el.phys = tag;
                }
                int nn = 0;
                switch (type) {
                case 1: nn = 2; break;  // line
                case 2: nn = 3; break;  // triangle
                case 4: nn = 4; break;  // tetrahedron
                case 15: nn = 1; break; // point, ignored below
                default:
                    throw MeshError("gmsh: unsupported element type " +
                                    std::to_string(type) +
                                    " (only simplicial meshes are handled)");
                }
                el.nodes.resize(nn);
                for (int v = 0; v < nn; v++)
                    if (!(ls >> el.nodes[v]))
                        throw MeshError("gmsh: element references missing nodes");
                elements.push_back(std::move(el));
            }
        }
        // other sections are skipped
    }
    if (!format_seen)
        throw MeshError("gmsh: missing $MeshFormat section in " + path);
    if (nodes.empty())
        throw MeshError("gmsh: no nodes in " + path);

    const bool has_tets =
        std::any_of(elements.begin(), elements.end(),
                    [](const RawElement& e) { return e.type == 4; });
    const bool has_tris =
        std::any_of(elements.begin(), elements.end(),
                    [](const RawElement& e) { return e.type == 2; });
    if (!has_tets && !has_tris)
        throw MeshError("gmsh: no volume elements in " + path);

    Mesh mesh;
    mesh.dim = has_tets ? 3 : 2;

    mesh.vertices.resize(static_cast<Eigen::Index>(nodes.size()), mesh.dim);
    for (std::size_t i = 0; i < nodes.size(); i++) {
        for (int c = 0; c < mesh.dim; c++)
            mesh.vertices(static_cast<Eigen::Index>(i), c) = nodes[i][c];
        if (mesh.dim == 2 && std::abs(nodes[i][2]) > 1e-12)
            throw MeshError("gmsh: 2D mesh has nodes off the z=0 plane");
    }

    const int cell_type = (mesh.dim == 3) ? 4 : 2;
    const int bnd_type = (mesh.dim == 3) ? 2 : 1;

    auto resolve = [&](long id) {
        auto it = node_index.find(id);
        if (it == node_index.end())
            throw MeshError("gmsh: element references unknown node " + std::to_string(id));
        return it->second;
    };

    for (const auto& el : elements) {
        if (el.type != cell_type)
            continue;
        std::array<int, 4> cell = {-1, -1, -1, -1};
        for (std::size_t v = 0; v < el.nodes.size(); v++)
            cell[v] = resolve(el.nodes[v]);

        Mat verts(mesh.dim + 1, mesh.dim);
        for (int v = 0; v <= mesh.dim; v++)
            verts.row(v) = mesh.vertices.row(cell[v]);
        if (detail::simplex_measure(verts) < 0.0)
            std::swap(cell[1], cell[2]);
        mesh.cells.push_back(cell);
    }
    if (mesh.cells.empty())
        throw MeshError("gmsh: no cells of the expected type in " + path);

    finalize_connectivity(mesh);

    std::map<std::array<int, 3>, int> face_lookup;
    for (int f = 0; f < mesh.num_faces(); f++)
        face_lookup[mesh.faces[f]] = f;

    for (const auto& el : elements) {
        if (el.type != bnd_type)
            continue;
        std::array<int, 3> key = {-1, -1, -1};
        for (std::size_t v = 0; v < el.nodes.size(); v++)
            key[v] = resolve(el.nodes[v]);
        std::sort(key.begin(), key.begin() + mesh.vertices_per_face());

        auto it = face_lookup.find(key);
        if (it == face_lookup.end())
            throw MeshError("gmsh: tagged boundary element is not a face of any cell");
        if (!mesh.is_boundary_face(it->second))
            throw MeshError("gmsh: tagged element lies on an interior face");

        std::string name = "phys" + std::to_string(el.phys);
        auto nit = physical_names.find({mesh.dim - 1, el.phys});
        if (nit != physical_names.end())
            name = nit->second;
        mesh.face_tags[it->second] = name;
    }

    for (int f = 0; f < mesh.num_faces(); f++)
        if (mesh.is_boundary_face(f) && mesh.face_tags[f].empty())
            mesh.face_tags[f] = "untagged";

    return mesh;
}

/// Write a mesh as gmsh ASCII v2.2 with one physical surface per distinct
/// boundary tag.
inline void write_gmsh(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw MeshError("cannot open for writing: " + path);
    out.precision(16);

    std::map<std::string, int> tag_ids;
    for (int f = 0; f < mesh.num_faces(); f++)
        if (mesh.is_boundary_face(f) && !mesh.face_tags[f].empty())
            if (!tag_ids.count(mesh.face_tags[f]))
                tag_ids[mesh.face_tags[f]] = static_cast<int>(tag_ids.size()) + 1;
    const int volume_phys = static_cast<int>(tag_ids.size()) + 1;

    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    out << "$PhysicalNames\n" << tag_ids.size() + 1 << "\n";
    for (const auto& [name, id] : tag_ids)
        out << mesh.dim - 1 << " " << id << " \"" << name << "\"\n";
    out << mesh.dim << " " << volume_phys << " \"volume\"\n";
    out << "$EndPhysicalNames\n";

    out << "$Nodes\n" << mesh.num_vertices() << "\n";
    for (int v = 0; v < mesh.num_vertices(); v++) {
        out << v + 1;
        for (int c = 0; c < mesh.dim; c++)
            out << " " << mesh.vertices(v, c);
        for (int c = mesh.dim; c < 3; c++)
            out << " 0";
        out << "\n";
    }
    out << "$EndNodes\n";

    std::vector<int> bnd;
    for (int f = 0; f < mesh.num_faces(); f++)
        if (mesh.is_boundary_face(f) && !mesh.face_tags[f].empty())
            bnd.push_back(f);

    const int bnd_type = (mesh.dim == 3) ? 2 : 1;
    const int cell_type = (mesh.dim == 3) ? 4 : 2;
    long id = 1;
    out << "$Elements\n" << bnd.size() + mesh.cells.size() << "\n";
    for (int f : bnd) {
        out << id++ << " " << bnd_type << " 2 " << tag_ids[mesh.face_tags[f]]
            << " " << tag_ids[mesh.face_tags[f]];
        for (int v = 0; v < mesh.vertices_per_face(); v++)
            out << " " << mesh.faces[f][v] + 1;
        out << "\n";
    }
    for (const auto& cell : mesh.cells) {
        out << id++ << " " << cell_type << " 2 " << volume_phys << " " << volume_phys;
        for (int v = 0; v < mesh.dim + 1; v++)
            out << " " << cell[v] + 1;
        out << "\n";
    }
    out << "$EndElements\n";
}

} // namespace hhodef
