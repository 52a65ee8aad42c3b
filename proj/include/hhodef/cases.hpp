#pragma once

#include <numbers>
#include <string>

#include "postproc.hpp"
#include "sample_meshes.hpp"

namespace hhodef {

/// One boundary value problem wired to meshes: geometry per refinement
/// level, boundary roles and data, material law, and the exact solution
/// when one is known.
struct CaseDefinition {
    std::string name;
    int dim = 3;
    std::function<Mesh(int)> mesh_for_level;
    ProblemDefinition problem;
    std::function<Vec(const Vec&)> exact_u;    // null when unknown
    std::function<Mat(const Vec&)> exact_grad; // null when unknown
    bool self_reference = false; // errors measured against a finer solve
};

struct ManufacturedFields {
    std::function<Vec(const Vec&)> u;
    std::function<Mat(const Vec&)> grad;
    std::function<Vec(const Vec&)> f;
};

/// Closed-form displacement with constant-J stretch part and two sinusoidal
/// shear modes, together with the body force that balances it for the
/// logarithmic Neohookean law.  Because det F is constant in X and the
/// cofactor rows are divergence free, the force reduces to the shear terms;
/// the same pair also solves the small-strain equations exactly.
inline ManufacturedFields manufactured_fields(double alpha, double gamma,
                                              double mu, double lambda)
{
    const double pi = std::numbers::pi;
    const double c1 = 1.0 / lambda + alpha;
    const double c2 = 1.0 / lambda +
                      (alpha + gamma + alpha * gamma) /
                          (1.0 + alpha + gamma + alpha * gamma);
    const double c3 = 1.0 / lambda + gamma;

    ManufacturedFields mf;
    mf.u = [=](const Vec& X) {
        Vec u(3);
        u << c1 * X(0) + alpha * std::sin(pi * X(1)), -c2 * X(1),
            c3 * X(2) + gamma * std::sin(pi * X(0));
        return u;
    };
    mf.grad = [=](const Vec& X) {
        Mat g = Mat::Zero(3, 3);
        g(0, 0) = c1;
        g(0, 1) = alpha * pi * std::cos(pi * X(1));
        g(1, 1) = -c2;
        g(2, 0) = gamma * pi * std::cos(pi * X(0));
        g(2, 2) = c3;
        return g;
    };
    mf.f = [=](const Vec& X) {
        Vec f(3);
        f << mu * alpha * pi * pi * std::sin(pi * X(1)), 0.0,
            mu * gamma * pi * pi * std::sin(pi * X(0));
        return f;
    };
    return mf;
}

/// Per-case defaults applied by the CLI when the corresponding flag is not
/// given: shear modulus, first Lame parameter, stabilization weight.
struct CaseDefaults {
    double mu = 1.0;
    double lambda = 10.0;
    double beta0 = 1.0;
};

inline CaseDefaults case_defaults(const std::string& name)
{
    if (name == "annulus")
        return {0.333, 1666.44, 100.0};
    if (name == "block")
        return {1.0, 4999.0, 100.0};
    if (name == "cylinder")
        return {0.1, 1.0, 100.0};
    if (name == "sphere")
        return {1.0, 1.0, 100.0};
    return {1.0, 10.0, 1.0};
}

inline const std::vector<std::string>& known_cases()
{
    static const std::vector<std::string> names = {
        "manufactured", "manufactured_neumann", "linear_smooth", "linear_patch",
        "annulus",      "block",                "cylinder",      "sphere"};
    return names;
}

namespace detail {

inline double case_param(const RunConfig& cfg, const std::string& key, double dflt)
{
    auto it = cfg.case_params.find(key);
    return it == cfg.case_params.end() ? dflt : it->second;
}

inline std::function<Mesh(int)> mesh_from_file(const RunConfig& cfg)
{
    if (cfg.mesh_file.empty())
        throw ConfigError("case '" + cfg.case_name +
                          "' needs an externally supplied mesh (--mesh)");
    const std::string path = cfg.mesh_file;
    return [path](int) { return load_gmsh(path); };
}

/* traction of the exact state on a fixed-normal boundary plane */
inline std::function<Vec(const Vec&)>
exact_traction(const ManufacturedFields& mf, MaterialLaw law,
               const MaterialParams& mp, const Vec& normal)
{
    return [=](const Vec& X) {
        const Mat F = Mat::Identity(3, 3) + mf.grad(X);
        return Vec(evaluate_material(law, F, mp).P * normal);
    };
}

} // namespace detail

inline CaseDefinition make_case(const RunConfig& cfg)
{
    const std::string& name = cfg.case_name;
    CaseDefinition cs;
    cs.name = name;
    cs.problem.material = {cfg.mu, cfg.lambda};

    const bool manufactured_like =
        name == "manufactured" || name == "manufactured_neumann" ||
        name == "linear_smooth" || name == "linear_patch";

    if (manufactured_like) {
        cs.dim = 3;
        cs.mesh_for_level = [](int level) {
            return generate_cube_mesh(1 << level);
        };
        cs.problem.law = (name == "linear_smooth" || name == "linear_patch")
                             ? MaterialLaw::LinearElastic
                             : MaterialLaw::Neohookean;

        if (name == "linear_patch") {
            Mat A(3, 3);
            A << 0.10, 0.05, 0.00, 0.02, -0.04, 0.03, 0.00, 0.01, 0.06;
            const Vec b = (Vec(3) << 0.01, -0.02, 0.005).finished();
            cs.exact_u = [=](const Vec& X) { return Vec(A * X + b); };
            cs.exact_grad = [=](const Vec&) { return A; };
        } else {
            const double alpha = detail::case_param(cfg, "alpha", 0.1);
            const double gamma = detail::case_param(cfg, "gamma", 0.1);
            const ManufacturedFields mf =
                manufactured_fields(alpha, gamma, cfg.mu, cfg.lambda);
            cs.exact_u = mf.u;
            cs.exact_grad = mf.grad;
            cs.problem.body_force = mf.f;
        }

        for (const char* tag : {"x0", "x1", "y0", "y1", "z0", "z1"}) {
            cs.problem.roles[tag] = BoundaryRole::Dirichlet;
            cs.problem.dirichlet[tag] = cs.exact_u;
        }
        if (name == "manufactured_neumann") {
            const ManufacturedFields mf =
                manufactured_fields(detail::case_param(cfg, "alpha", 0.1),
                                    detail::case_param(cfg, "gamma", 0.1),
                                    cfg.mu, cfg.lambda);
            const std::pair<const char*, Vec> sides[] = {
                {"x1", Vec::Unit(3, 0)}, {"y1", Vec::Unit(3, 1)},
                {"z1", Vec::Unit(3, 2)}};
            for (const auto& [tag, n] : sides) {
                cs.problem.roles[tag] = BoundaryRole::Neumann;
                cs.problem.dirichlet.erase(tag);
                cs.problem.neumann[tag] = detail::exact_traction(
                    mf, cs.problem.law, cs.problem.material, n);
            }
        }
        return cs;
    }

    if (name == "annulus") {
        cs.dim = 2;
        const double R0 = 0.5, R1 = 1.0;
        const double r0 = detail::case_param(cfg, "r0", 1.5);
        if (r0 < R0)
            throw ConfigError("annulus: need r0 >= inner radius 0.5");
        cs.mesh_for_level = [=](int level) {
            return generate_annulus_mesh(R0, R1, 1 << level, 8 << level);
        };
        cs.problem.law = MaterialLaw::Neohookean;
        cs.problem.roles["inner"] = BoundaryRole::Dirichlet;
        cs.problem.roles["outer"] = BoundaryRole::Neumann;
        const double pull = (r0 - R0) / R0;
        cs.problem.dirichlet["inner"] = [pull](const Vec& X) {
            return Vec(pull * X);
        };
        cs.self_reference = true;
        return cs;
    }

    if (name == "block") {
        cs.dim = 3;
        cs.mesh_for_level = detail::mesh_from_file(cfg);
        cs.problem.law = MaterialLaw::Neohookean;
        cs.problem.roles["bottom"] = BoundaryRole::Dirichlet;
        cs.problem.roles["indent"] = BoundaryRole::Dirichlet;
        cs.problem.roles["free"] = BoundaryRole::Neumann;
        const double depth = detail::case_param(cfg, "indent_depth", 0.8);
        cs.problem.dirichlet["indent"] = [depth](const Vec&) {
            return Vec((Vec(3) << 0.0, 0.0, -depth).finished());
        };
        return cs;
    }

    if (name == "cylinder") {
        cs.dim = 3;
        cs.mesh_for_level = detail::mesh_from_file(cfg);
        cs.problem.law = MaterialLaw::Neohookean;
        cs.problem.roles["bottom"] = BoundaryRole::Dirichlet;
        cs.problem.roles["top"] = BoundaryRole::Dirichlet;
        cs.problem.roles["lateral"] = BoundaryRole::Neumann;
        const double sx = detail::case_param(cfg, "shift_x", -1.0);
        const double sz = detail::case_param(cfg, "shift_z", -1.0);
        cs.problem.dirichlet["top"] = [=](const Vec&) {
            return Vec((Vec(3) << sx, 0.0, sz).finished());
        };
        return cs;
    }

    if (name == "sphere") {
        cs.dim = 3;
        cs.mesh_for_level = detail::mesh_from_file(cfg);
        cs.problem.law = MaterialLaw::Cavitation;
        cs.problem.roles["outer"] = BoundaryRole::Dirichlet;
        cs.problem.roles["void"] = BoundaryRole::Neumann;
        const double r = detail::case_param(cfg, "r", 0.5);
        cs.problem.dirichlet["outer"] = [r](const Vec& X) { return Vec(r * X); };
        return cs;
    }

    throw ConfigError("unknown case '" + name + "'");
}

// ---------------------------------------------------------------------------
// case runner
// ---------------------------------------------------------------------------

struct LevelResult {
    Mesh mesh;
    std::vector<CellContext> ctxs;
    DofMap dofs;
    SolutionState state;
    NewtonTrace trace;
    ConvergenceRow row;
};

inline LevelResult run_level(const CaseDefinition& cs, const RunConfig& cfg,
                             int level)
{
    LevelResult res;
    res.mesh = cs.mesh_for_level(level);
    res.ctxs = build_cell_contexts(res.mesh, cs.problem, cfg.method, cfg.threads);
    res.dofs = build_dof_map(res.mesh, cs.problem, cfg.method.degree);
    res.state = make_zero_state(res.mesh, cfg.method.degree);
    res.trace = newton_solve(res.mesh, res.ctxs, res.dofs, cs.problem, cfg.method,
                             cfg.newton, res.state, cfg.threads);

    res.row.level = level;
    res.row.h = mesh_size(res.mesh);
    res.row.unknowns = res.dofs.num_free;
    res.row.newton_iterations = res.trace.total_iterations();
    if (cs.exact_u) {
        const ErrorNorms err = compute_errors(res.mesh, res.ctxs, res.state,
                                              cfg.method, cs.exact_u, cs.exact_grad);
        res.row.err_u = err.err_u;
        res.row.err_grad = err.err_grad;
    }
    return res;
}

namespace detail {

/* first cell whose barycentric coordinates of X are all nonnegative */
inline int locate_cell(const Mesh& mesh, const Vec& X)
{
    const int d = mesh.dim;
    int best = -1;
    double best_viol = std::numeric_limits<double>::max();
    for (int c = 0; c < mesh.num_cells(); c++) {
        Mat B(d, d);
        for (int j = 0; j < d; j++)
            B.col(j) = (mesh.vertices.row(mesh.cells[c][j + 1]) -
                        mesh.vertices.row(mesh.cells[c][0]))
                           .transpose();
        const Vec xi =
            B.partialPivLu().solve(X - mesh.vertices.row(mesh.cells[c][0]).transpose());
        double viol = std::max(0.0, xi.sum() - 1.0);
        for (int j = 0; j < d; j++)
            viol = std::max(viol, -xi(j));
        if (viol < 1e-10)
            return c;
        if (viol < best_viol) {
            best_viol = viol;
            best = c;
        }
    }
    return best; // nearest match for points just outside (curved boundaries)
}

} // namespace detail

/// Displacement and reconstructed gradient of a solved state at one point.
inline void evaluate_state_at(const LevelResult& res, const MethodConfig& mcfg,
                              const Vec& X, Vec& u, Mat& g)
{
    const int c = detail::locate_cell(res.mesh, X);
    const auto& geo = res.ctxs[c].geo;
    const ScalarBasis recb = ScalarBasis::on_cell(geo, mcfg.degree + 1);
    const Vec u_local = gather_local(res.mesh, res.state, c);
    u = eval_vector_poly(recb, Vec(res.ctxs[c].ops.D * u_local), X);
    const TensorBasis tb(geo, mcfg.degree, mcfg.grad_space);
    g = unvec_rm(tb.eval_vec(X) * (res.ctxs[c].ops.G * u_local), geo.dim);
}

struct CaseRun {
    ConvergenceReport report;
    std::vector<LevelResult> levels;
};

/// Solve every refinement level in sequence.  Cases without an exact
/// solution that ask for a self-reference get their errors from a solve two
/// levels finer (first method, degree 1, stabilized), sampled at cell
/// barycenters; the report marks this.
inline CaseRun run_case(const CaseDefinition& cs, const RunConfig& cfg)
{
    CaseRun run;
    for (int level = 1; level <= cfg.levels; level++) {
        run.levels.push_back(run_level(cs, cfg, level));
        run.report.rows.push_back(run.levels.back().row);
    }
    run.report.reference = cs.exact_u ? "exact" : "none";

    if (cs.self_reference && !cs.exact_u) {
        RunConfig ref_cfg = cfg;
        ref_cfg.method.method = Method::Stabilized;
        ref_cfg.method.degree = 1;
        ref_cfg.method.grad_space = GradSpace::Pk;
        if (ref_cfg.method.beta0 <= 0.0)
            ref_cfg.method.beta0 = case_defaults(cs.name).beta0;
        const LevelResult ref = run_level(cs, ref_cfg, cfg.levels + 2);

        for (std::size_t i = 0; i < run.levels.size(); i++) {
            auto& lev = run.levels[i];
            double eu2 = 0.0, eg2 = 0.0;
            for (int c = 0; c < lev.mesh.num_cells(); c++) {
                const auto& geo = lev.ctxs[c].geo;
                Vec uh, ur;
                Mat gh, gr;
                evaluate_state_at(lev, cfg.method, geo.barycenter, uh, gh);
                evaluate_state_at(ref, ref_cfg.method, geo.barycenter, ur, gr);
                eu2 += geo.measure * (uh - ur).squaredNorm();
                eg2 += geo.measure * (gh - gr).squaredNorm();
            }
            lev.row.err_u = std::sqrt(eu2);
            lev.row.err_grad = std::sqrt(eg2);
            run.report.rows[i] = lev.row;
        }
        run.report.reference = "self";
    }
    return run;
}

inline std::string artifact_basename(const RunConfig& cfg, int level)
{
    return cfg.case_name + "_" + to_string(cfg.method.method) + "_k" +
           std::to_string(cfg.method.degree) + "_" + std::to_string(level);
}

} // namespace hhodef
