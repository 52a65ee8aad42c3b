// Generates the coarse sample meshes shipped for the smoke cases: the
// indented block, the hollow cylinder, and the ball with two spherical
// voids carved out.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>

#include <hhodef/sample_meshes.hpp>

using namespace hhodef;

namespace {

void write_and_summarize(const Mesh& mesh, const std::string& path)
{
    write_gmsh(mesh, path);
    std::map<std::string, int> tag_counts;
    for (int f : mesh.boundary_faces())
        tag_counts[mesh.face_tags[f]]++;
    std::printf("%s: %d cells, %d faces, boundary", path.c_str(),
                mesh.num_cells(), mesh.num_faces());
    for (const auto& [tag, count] : tag_counts)
        std::printf(" %s=%d", tag.c_str(), count);
    std::printf("\n");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sample mesh generator"};
    std::string out = "meshes";
    int block_n = 4;
    int cyl_radial = 1, cyl_angular = 12, cyl_axial = 8;
    int sphere_n = 6;
    app.add_option("--out", out, "output directory");
    app.add_option("--block-n", block_n, "block subdivisions per edge");
    app.add_option("--cylinder-radial", cyl_radial, "cylinder radial layers");
    app.add_option("--cylinder-angular", cyl_angular, "cylinder angular sectors");
    app.add_option("--cylinder-axial", cyl_axial, "cylinder axial layers");
    app.add_option("--sphere-n", sphere_n, "sphere lattice subdivisions");
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out);

        write_and_summarize(generate_block_mesh(block_n),
                            out + "/block_coarse.msh");
        write_and_summarize(generate_cylinder_mesh(0.75, 1.0, 4.0, cyl_radial,
                                                   cyl_angular, cyl_axial),
                            out + "/cylinder_coarse.msh");

        const std::vector<std::pair<Vec, double>> voids = {
            {(Vec(3) << -0.7, -0.7, 0.0).finished(), 0.15},
            {(Vec(3) << 0.25, 0.25, 0.25).finished(), 0.2}};
        write_and_summarize(generate_sphere_mesh(sphere_n, voids),
                            out + "/sphere_coarse.msh");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
