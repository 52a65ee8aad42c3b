// Command line driver: solve one case (run), sweep refinement levels
// (convergence), or exercise the operator property suites (verify).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include <hhodef/cases.hpp>
#include <hhodef/diagnostics.hpp>

using namespace hhodef;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string save_config_path;
    CLI::Option* o_case = nullptr;
    CLI::Option* o_method = nullptr;
    CLI::Option* o_order = nullptr;
    CLI::Option* o_grad = nullptr;
    CLI::Option* o_beta0 = nullptr;
    CLI::Option* o_levels = nullptr;
    CLI::Option* o_mesh = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_mu = nullptr;
    CLI::Option* o_steps = nullptr;

    std::string case_name, method, grad_space, mesh, out;
    int order = 1, levels = 1, load_steps = 1;
    double beta0 = 1.0, lambda = 10.0, mu = 1.0;
};

void add_common_options(CLI::App* sub, CommonOpts& o)
{
    sub->add_option("--config", o.config_path, "read settings from a config file");
    sub->add_option("--save-config", o.save_config_path,
                    "write the effective settings to a config file");
    o.o_case = sub->add_option("--case", o.case_name, "test case name");
    o.o_method = sub->add_option("--method", o.method, "shho or uhho");
    o.o_order = sub->add_option("-k,--order", o.order, "face polynomial degree");
    o.o_grad = sub->add_option("--grad-space", o.grad_space, "pk, pkp1 or rtn");
    o.o_beta0 = sub->add_option("--beta0", o.beta0, "stabilization weight");
    o.o_levels = sub->add_option("--levels", o.levels, "number of refinement levels");
    o.o_mesh = sub->add_option("--mesh", o.mesh, "externally supplied gmsh mesh");
    o.o_out = sub->add_option("--out", o.out, "output directory");
    o.o_lambda = sub->add_option("--lambda", o.lambda, "first Lame parameter");
    o.o_mu = sub->add_option("--mu", o.mu, "shear modulus");
    o.o_steps = sub->add_option("--load-steps", o.load_steps, "load increments");
}

RunConfig effective_config(const CommonOpts& o)
{
    RunConfig cfg;
    const bool from_file = !o.config_path.empty();
    if (from_file)
        cfg = parse_config_file(o.config_path);

    if (o.o_case->count())
        cfg.case_name = o.case_name;
    if (o.o_method->count())
        cfg.method.method = parse_method(o.method);
    if (o.o_order->count())
        cfg.method.degree = o.order;
    if (o.o_grad->count())
        cfg.method.grad_space = parse_grad_space(o.grad_space);
    if (o.o_beta0->count())
        cfg.method.beta0 = o.beta0;
    if (o.o_levels->count())
        cfg.levels = o.levels;
    if (o.o_mesh->count())
        cfg.mesh_file = o.mesh;
    if (o.o_out->count())
        cfg.output_dir = o.out;
    if (o.o_lambda->count())
        cfg.lambda = o.lambda;
    if (o.o_mu->count())
        cfg.mu = o.mu;
    if (o.o_steps->count())
        cfg.newton.load_steps = o.load_steps;

    if (!from_file) {
        const CaseDefaults d = case_defaults(cfg.case_name);
        if (!o.o_mu->count())
            cfg.mu = d.mu;
        if (!o.o_lambda->count())
            cfg.lambda = d.lambda;
        if (!o.o_beta0->count())
            cfg.method.beta0 = d.beta0;
    }

    // keep the gradient space consistent when only the method was switched
    if (!o.o_grad->count()) {
        const bool mismatch =
            (cfg.method.stabilized() && cfg.method.grad_space != GradSpace::Pk) ||
            (!cfg.method.stabilized() && cfg.method.grad_space == GradSpace::Pk);
        if (mismatch)
            cfg.method.grad_space = default_grad_space(cfg.method.method);
    }

    if (const char* s = std::getenv("HHODEF_THREADS"))
        cfg.threads = std::max(1, std::atoi(s));

    cfg.method.validate();

    if (!o.save_config_path.empty()) {
        std::ofstream out(o.save_config_path);
        if (!out)
            throw ConfigError("cannot write config file: " + o.save_config_path);
        serialize_config(cfg, out);
        std::printf("wrote %s\n", o.save_config_path.c_str());
    }
    return cfg;
}

void print_report(const RunConfig& cfg, const ConvergenceReport& rep)
{
    std::printf("case %s, method %s, k=%d, grad space %s, beta0=%g, mu=%g, "
                "lambda=%g\n",
                cfg.case_name.c_str(), to_string(cfg.method.method).c_str(),
                cfg.method.degree, to_string(cfg.method.grad_space).c_str(),
                cfg.method.beta0, cfg.mu, cfg.lambda);
    if (rep.reference == "self")
        std::printf("errors measured against a fine-mesh self-reference, not "
                    "an exact solution\n");

    std::printf("%6s %10s %9s %13s %7s %13s %7s %6s\n", "level", "h", "unknowns",
                "err_u", "order", "err_grad", "order", "iters");
    for (std::size_t i = 0; i < rep.rows.size(); i++) {
        const auto& r = rep.rows[i];
        std::printf("%6d %10.4e %9d ", r.level, r.h, r.unknowns);
        if (rep.reference != "none") {
            std::printf("%13.6e ", r.err_u);
            i > 0 ? std::printf("%7.2f ", rep.order_u(i)) : std::printf("%7s ", "--");
            std::printf("%13.6e ", r.err_grad);
            i > 0 ? std::printf("%7.2f ", rep.order_grad(i))
                  : std::printf("%7s ", "--");
        } else {
            std::printf("%13s %7s %13s %7s ", "--", "--", "--", "--");
        }
        std::printf("%6d\n", r.newton_iterations);
    }
}

int cmd_solve(const CommonOpts& opts, bool with_artifacts, int default_levels)
{
    RunConfig cfg = effective_config(opts);
    if (!opts.o_levels->count() && opts.config_path.empty())
        cfg.levels = default_levels;
    const CaseDefinition cs = make_case(cfg);
    const CaseRun run = run_case(cs, cfg);

    print_report(cfg, run.report);
    std::filesystem::create_directories(cfg.output_dir);

    const std::string csv = cfg.output_dir + "/" +
                            artifact_basename(cfg, cfg.levels) + ".csv";
    write_csv(run.report, csv);
    std::printf("wrote %s\n", csv.c_str());

    if (!with_artifacts)
        return 0;

    for (const auto& lev : run.levels) {
        const std::string vtk = cfg.output_dir + "/" +
                                artifact_basename(cfg, lev.row.level) + ".vtk";
        export_vtk(lev.mesh, lev.ctxs, lev.state, cfg.method, cs.problem, vtk);
        std::printf("wrote %s\n", vtk.c_str());

        const TractionField tf =
            compute_tractions(lev.mesh, lev.ctxs, lev.state, cfg.method, cs.problem);
        const TractionChecks tc = check_traction_balance(
            lev.mesh, lev.ctxs, tf, cfg.method, cs.problem, lev.trace.final_load);
        const Vec vw = check_local_virtual_work(lev.mesh, lev.ctxs, lev.state, tf,
                                                cfg.method, cs.problem,
                                                lev.trace.final_load);
        std::printf("level %d tractions: interior mismatch %.2e, "
                    "Neumann mismatch %.2e, virtual-work defect %.2e\n",
                    lev.row.level, tc.max_interior_mismatch,
                    tc.max_neumann_mismatch, vw.maxCoeff());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// property suites
// ---------------------------------------------------------------------------

bool report(const char* name, bool pass, double value, double tol)
{
    std::printf("%s %s: %.3e (tol %.0e)\n", pass ? "PASS" : "FAIL", name, value,
                tol);
    return pass;
}

int cmd_verify()
{
    std::mt19937 rng(12345);
    bool ok = true;

    for (const auto law : {MaterialLaw::Neohookean, MaterialLaw::Cavitation}) {
        const MaterialParams mp{law == MaterialLaw::Cavitation ? 1.0 : 2.0, 7.0};
        const double err = tangent_fd_error(law, mp, 100, rng);
        const std::string name =
            std::string("tangent modulus vs finite differences (") +
            (law == MaterialLaw::Neohookean ? "neohookean" : "cavitation") + ")";
        ok &= report(name.c_str(), err <= 1e-6, err, 1e-6);
    }

    for (const auto law : {MaterialLaw::Neohookean, MaterialLaw::LinearElastic}) {
        const double err =
            manufactured_divergence_error(0.1, 0.1, 1.0, 10.0, law, 50, rng);
        const std::string name =
            std::string("manufactured body force balances div P (") +
            (law == MaterialLaw::Neohookean ? "neohookean" : "linear") + ")";
        ok &= report(name.c_str(), err <= 1e-6, err, 1e-6);
    }

    for (const int dim : {2, 3})
        for (const int k : {1, 2}) {
            double strong_rtn = 0.0, weak_pkp1 = 0.0, weak_pk = 0.0;
            for (int i = 0; i < 50; i++) {
                const CellGeometry geo = random_cell_geometry(dim, rng);
                const auto rtn = commuting_errors(geo, k, GradSpace::Rtn, rng);
                const auto pkp1 = commuting_errors(geo, k, GradSpace::Pkp1, rng);
                const auto pk = commuting_errors(geo, k, GradSpace::Pk, rng);
                strong_rtn = std::max(strong_rtn, rtn.strong);
                weak_pkp1 = std::max(weak_pkp1, pkp1.weak);
                weak_pk = std::max(weak_pk, pk.weak);
            }
            char name[96];
            std::snprintf(name, sizeof name,
                          "commuting identity, RTN strong (d=%d, k=%d)", dim, k);
            ok &= report(name, strong_rtn <= 1e-11, strong_rtn, 1e-11);
            std::snprintf(name, sizeof name,
                          "commuting identity, P^(k+1) weak (d=%d, k=%d)", dim, k);
            ok &= report(name, weak_pkp1 <= 1e-11, weak_pkp1, 1e-11);
            std::snprintf(name, sizeof name,
                          "commuting identity, P^k weak (d=%d, k=%d)", dim, k);
            ok &= report(name, weak_pk <= 1e-11, weak_pk, 1e-11);
        }

    for (const int dim : {2, 3})
        for (const int k : {1, 2}) {
            double worst = 0.0;
            for (int i = 0; i < 50; i++)
                worst = std::max(worst, stabilization_consistency(
                                            random_cell_geometry(dim, rng), k));
            char name[96];
            std::snprintf(name, sizeof name,
                          "stabilization consistency on P^(k+1) (d=%d, k=%d)",
                          dim, k);
            ok &= report(name, worst <= 1e-12, worst, 1e-12);
        }

    {
        bool kernel_ok = true;
        for (int i = 0; i < 10; i++) {
            const CellGeometry geo = random_cell_geometry(3, rng);
            kernel_ok = kernel_ok && seminorm_kernel_dimension(geo, 1) == 3;
        }
        std::printf("%s strain seminorm kernel = rigid translations\n",
                    kernel_ok ? "PASS" : "FAIL");
        ok &= kernel_ok;
    }

    for (const auto method : {Method::Stabilized, Method::Unstabilized}) {
        double lo[2], hi[2];
        bool positive = true;
        for (int lev = 0; lev < 2; lev++) {
            const Mesh mesh = generate_cube_mesh(1 << lev);
            lo[lev] = std::numeric_limits<double>::max();
            hi[lev] = 0.0;
            for (int c = 0; c < mesh.num_cells(); c++) {
                const auto b = equivalence_bounds(cell_geometry(mesh, c), 1, method);
                positive = positive && b.lower > 0.0;
                lo[lev] = std::min(lo[lev], b.lower);
                hi[lev] = std::max(hi[lev], b.upper);
            }
        }
        const double drift = std::max(
            {lo[0] / lo[1], lo[1] / lo[0], hi[0] / hi[1], hi[1] / hi[0]});
        char name[96];
        std::snprintf(name, sizeof name,
                      "norm equivalence bounds stable across refinement (%s)",
                      to_string(method).c_str());
        ok &= report(name, positive && drift < 2.0, drift, 2.0);
    }

    std::printf(ok ? "all property suites passed\n"
                   : "some property suites FAILED\n");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid high-order solver for finite-deformation "
                 "hyperelasticity on simplicial meshes"};
    app.require_subcommand(1);

    CommonOpts run_opts, conv_opts;
    CLI::App* run = app.add_subcommand("run", "solve a case and write artifacts");
    add_common_options(run, run_opts);
    CLI::App* conv =
        app.add_subcommand("convergence", "refinement study with error table");
    add_common_options(conv, conv_opts);
    CLI::App* verify =
        app.add_subcommand("verify", "run the operator property suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_solve(run_opts, true, 1);
        if (conv->parsed())
            return cmd_solve(conv_opts, false, 3);
        if (verify->parsed())
            return cmd_verify();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
