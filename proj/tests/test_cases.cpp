#include <gtest/gtest.h>

#include <hhodef/cases.hpp>
#include <hhodef/diagnostics.hpp>

#include <random>
#include <set>

using namespace hhodef;

namespace {

MethodConfig shho(int k, double beta0 = 1.0)
{
    MethodConfig m;
    m.method = Method::Stabilized;
    m.degree = k;
    m.grad_space = GradSpace::Pk;
    m.beta0 = beta0;
    return m;
}

Vec random_point(std::mt19937& rng)
{
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    Vec X(3);
    X << unif(rng), unif(rng), unif(rng);
    return X;
}

} // namespace

/* The body force must balance the analytic stress of the closed-form
 * displacement pointwise, for the nonlinear law it was derived under and for
 * the small-strain law it degenerates to. */
TEST(ManufacturedSolution, SatisfiesStrongEquilibrium)
{
    std::mt19937 rng(7);
    EXPECT_LT(manufactured_divergence_error(0.1, 0.1, 1.0, 10.0,
                                            MaterialLaw::Neohookean, 30, rng),
              1e-6);
    EXPECT_LT(manufactured_divergence_error(0.1, 0.1, 1.0, 10.0,
                                            MaterialLaw::LinearElastic, 30, rng),
              1e-6);
    EXPECT_LT(manufactured_divergence_error(0.2, 0.05, 2.0, 50.0,
                                            MaterialLaw::Neohookean, 30, rng),
              1e-6);
}

TEST(ManufacturedSolution, GradientMatchesFieldDifferences)
{
    const ManufacturedFields mf = manufactured_fields(0.1, 0.1, 1.0, 10.0);
    std::mt19937 rng(11);
    const double step = 1e-6;

    for (int s = 0; s < 10; s++) {
        const Vec X = random_point(rng);
        Mat fd(3, 3);
        for (int j = 0; j < 3; j++) {
            Vec Xp = X, Xm = X;
            Xp(j) += step;
            Xm(j) -= step;
            fd.col(j) = (mf.u(Xp) - mf.u(Xm)) / (2.0 * step);
        }
        EXPECT_LT((mf.grad(X) - fd).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_EQ(mf.f(X)(1), 0.0);
    }

    EXPECT_LT(mf.u(Vec::Zero(3)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(mf.grad(Vec::Zero(3))(0, 1), 0.1 * std::numbers::pi, 1e-15);
}

TEST(ManufacturedSolution, DegeneratesToAffineWithoutShear)
{
    const double lambda = 8.0;
    const ManufacturedFields mf = manufactured_fields(0.0, 0.0, 1.0, lambda);
    const Mat expected =
        (Vec(3) << 1.0 / lambda, -1.0 / lambda, 1.0 / lambda)
            .finished()
            .asDiagonal();

    std::mt19937 rng(13);
    for (int s = 0; s < 5; s++) {
        const Vec X = random_point(rng);
        EXPECT_LT(mf.f(X).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((mf.grad(X) - expected).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((mf.u(X) - expected * X).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(CaseCatalog, KnownCasesAndDefaults)
{
    const auto& names = known_cases();
    EXPECT_EQ(names.size(), 8u);
    EXPECT_NE(std::find(names.begin(), names.end(), "manufactured"),
              names.end());
    EXPECT_NE(std::find(names.begin(), names.end(), "sphere"), names.end());

    EXPECT_EQ(case_defaults("block").lambda, 4999.0);
    EXPECT_EQ(case_defaults("block").beta0, 100.0);
    EXPECT_EQ(case_defaults("cylinder").mu, 0.1);
    EXPECT_EQ(case_defaults("cylinder").lambda, 1.0);
    EXPECT_EQ(case_defaults("annulus").mu, 0.333);
    EXPECT_EQ(case_defaults("annulus").lambda, 1666.44);
    EXPECT_EQ(case_defaults("sphere").lambda, 1.0);
    EXPECT_EQ(case_defaults("manufactured").lambda, 10.0);
    EXPECT_EQ(case_defaults("manufactured").beta0, 1.0);
}

TEST(CaseCatalog, UnknownCaseThrows)
{
    RunConfig cfg;
    cfg.case_name = "warp_drive";
    EXPECT_THROW(make_case(cfg), ConfigError);
}

TEST(CaseCatalog, FileBackedCasesRequireMeshPath)
{
    for (const char* name : {"block", "cylinder", "sphere"}) {
        RunConfig cfg;
        cfg.case_name = name;
        EXPECT_THROW(make_case(cfg), ConfigError);
    }
}

TEST(CaseCatalog, ManufacturedNeumannSplitsBoundaryRoles)
{
    RunConfig cfg;
    cfg.case_name = "manufactured_neumann";
    const CaseDefinition cs = make_case(cfg);

    for (const char* tag : {"x0", "y0", "z0"}) {
        ASSERT_EQ(cs.problem.roles.at(tag), BoundaryRole::Dirichlet);
        EXPECT_TRUE(cs.problem.dirichlet.count(tag));
    }
    for (const char* tag : {"x1", "y1", "z1"}) {
        ASSERT_EQ(cs.problem.roles.at(tag), BoundaryRole::Neumann);
        EXPECT_FALSE(cs.problem.dirichlet.count(tag));
        EXPECT_TRUE(cs.problem.neumann.count(tag));
    }

    /* the prescribed traction is the normal stress of the exact state */
    const ManufacturedFields mf =
        manufactured_fields(0.1, 0.1, cfg.mu, cfg.lambda);
    const Vec X = (Vec(3) << 1.0, 0.3, 0.8).finished();
    const Mat F = Mat::Identity(3, 3) + mf.grad(X);
    const Vec expected =
        evaluate_material(MaterialLaw::Neohookean, F, {cfg.mu, cfg.lambda})
            .P.col(0);
    EXPECT_LT((cs.problem.neumann.at("x1")(X) - expected).cwiseAbs().maxCoeff(),
              1e-14);

    RunConfig plain = cfg;
    plain.case_name = "manufactured";
    const CaseDefinition all_dir = make_case(plain);
    for (const char* tag : {"x0", "x1", "y0", "y1", "z0", "z1"})
        EXPECT_EQ(all_dir.problem.roles.at(tag), BoundaryRole::Dirichlet);
    ASSERT_TRUE(static_cast<bool>(all_dir.problem.body_force));
    EXPECT_LT((all_dir.exact_u(X) - mf.u(X)).cwiseAbs().maxCoeff(), 1e-15);

    RunConfig lin = cfg;
    lin.case_name = "linear_smooth";
    const CaseDefinition smooth = make_case(lin);
    EXPECT_EQ(smooth.problem.law, MaterialLaw::LinearElastic);
    ASSERT_TRUE(static_cast<bool>(smooth.problem.body_force));
}

TEST(CaseCatalog, LinearPatchIsAffine)
{
    RunConfig cfg;
    cfg.case_name = "linear_patch";
    const CaseDefinition cs = make_case(cfg);
    EXPECT_EQ(cs.problem.law, MaterialLaw::LinearElastic);
    EXPECT_FALSE(static_cast<bool>(cs.problem.body_force));

    Mat A(3, 3);
    A << 0.10, 0.05, 0.00, 0.02, -0.04, 0.03, 0.00, 0.01, 0.06;
    Vec b(3);
    b << 0.01, -0.02, 0.005;

    std::mt19937 rng(17);
    for (int s = 0; s < 5; s++) {
        const Vec X = random_point(rng);
        EXPECT_LT((cs.exact_u(X) - (A * X + b)).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((cs.exact_grad(X) - A).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(CaseCatalog, FileBackedCaseLoadsMeshAndData)
{
    const std::string path = testing::TempDir() + "block_wiring.msh";
    const Mesh generated = generate_block_mesh(4);
    write_gmsh(generated, path);

    RunConfig cfg;
    cfg.case_name = "block";
    cfg.mesh_file = path;
    const CaseDefinition cs = make_case(cfg);
    EXPECT_EQ(cs.problem.law, MaterialLaw::Neohookean);
    EXPECT_EQ(cs.problem.roles.at("bottom"), BoundaryRole::Dirichlet);
    EXPECT_EQ(cs.problem.roles.at("indent"), BoundaryRole::Dirichlet);
    EXPECT_EQ(cs.problem.roles.at("free"), BoundaryRole::Neumann);
    const Vec indent = cs.problem.dirichlet.at("indent")(Vec::Zero(3));
    EXPECT_NEAR(indent(2), -0.8, 1e-15);

    const Mesh loaded = cs.mesh_for_level(1);
    EXPECT_EQ(loaded.num_cells(), generated.num_cells());
    std::set<std::string> tags;
    for (int f = 0; f < loaded.num_faces(); f++)
        if (loaded.is_boundary_face(f))
            tags.insert(loaded.face_tags[f]);
    EXPECT_EQ(tags, (std::set<std::string>{"bottom", "free", "indent"}));

    RunConfig deeper = cfg;
    deeper.case_params["indent_depth"] = 0.4;
    EXPECT_NEAR(make_case(deeper).problem.dirichlet.at("indent")(Vec::Zero(3))(2),
                -0.4, 1e-15);

    RunConfig cyl;
    cyl.case_name = "cylinder";
    cyl.mesh_file = path;
    cyl.case_params["shift_x"] = 0.3;
    cyl.case_params["shift_z"] = -0.2;
    const CaseDefinition cyl_cs = make_case(cyl);
    EXPECT_EQ(cyl_cs.problem.roles.at("lateral"), BoundaryRole::Neumann);
    const Vec top = cyl_cs.problem.dirichlet.at("top")(Vec::Zero(3));
    EXPECT_NEAR(top(0), 0.3, 1e-15);
    EXPECT_NEAR(top(1), 0.0, 1e-15);
    EXPECT_NEAR(top(2), -0.2, 1e-15);

    RunConfig sph;
    sph.case_name = "sphere";
    sph.mesh_file = path;
    const CaseDefinition sph_cs = make_case(sph);
    EXPECT_EQ(sph_cs.problem.law, MaterialLaw::Cavitation);
    EXPECT_EQ(sph_cs.problem.roles.at("void"), BoundaryRole::Neumann);
    const Vec X = (Vec(3) << 0.4, -0.2, 0.1).finished();
    EXPECT_LT((sph_cs.problem.dirichlet.at("outer")(X) - 0.5 * X)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
}

TEST(Annulus, RejectsInnerRadiusBelowGeometry)
{
    RunConfig cfg;
    cfg.case_name = "annulus";
    cfg.case_params["r0"] = 0.4;
    EXPECT_THROW(make_case(cfg), ConfigError);
}

TEST(Annulus, ZeroPullGivesZeroSolution)
{
    RunConfig cfg;
    cfg.case_name = "annulus";
    cfg.case_params["r0"] = 0.5; // boundary held at its reference position
    cfg.method = shho(1, 100.0);
    cfg.levels = 1;
    const CaseDefinition cs = make_case(cfg);
    ASSERT_TRUE(cs.self_reference);
    ASSERT_FALSE(static_cast<bool>(cs.exact_u));

    const CaseRun run = run_case(cs, cfg);
    EXPECT_EQ(run.report.reference, "self");
    ASSERT_EQ(run.report.rows.size(), 1u);
    EXPECT_LE(run.report.rows[0].err_u, 1e-10);
    EXPECT_LE(run.report.rows[0].err_grad, 1e-10);
    EXPECT_LE(run.report.rows[0].newton_iterations, 1);
}

TEST(Annulus, SelfReferenceMeasuresAgainstFinerSolve)
{
    RunConfig cfg;
    cfg.case_name = "annulus";
    cfg.case_params["r0"] = 0.6;
    cfg.method = shho(1);
    cfg.levels = 1;
    const CaseDefinition cs = make_case(cfg);

    const CaseRun run = run_case(cs, cfg);
    EXPECT_EQ(run.report.reference, "self");
    ASSERT_EQ(run.report.rows.size(), 1u);
    const auto& row = run.report.rows[0];
    EXPECT_GT(row.err_u, 1e-8);
    EXPECT_LT(row.err_u, 1e-1);
    EXPECT_GT(row.err_grad, row.err_u); // gradients converge more slowly
    EXPECT_GT(row.unknowns, 0);
    EXPECT_GE(row.newton_iterations, 1);
    ASSERT_TRUE(run.levels[0].trace.completed);
}

TEST(RunCase, ManufacturedErrorsDropAcrossLevels)
{
    RunConfig cfg;
    cfg.case_name = "manufactured";
    cfg.method = shho(1);
    cfg.levels = 2;
    const CaseDefinition cs = make_case(cfg);

    const CaseRun run = run_case(cs, cfg);
    EXPECT_EQ(run.report.reference, "exact");
    ASSERT_EQ(run.report.rows.size(), 2u);
    EXPECT_GT(run.report.rows[1].unknowns, run.report.rows[0].unknowns);
    EXPECT_LT(run.report.rows[1].err_u, run.report.rows[0].err_u);
    EXPECT_LT(run.report.rows[1].err_grad, run.report.rows[0].err_grad);
    EXPECT_GT(run.report.order_u(1), 1.5);
    EXPECT_GT(run.report.order_grad(1), 1.0);
}

TEST(ArtifactNames, EncodeCaseMethodDegreeLevel)
{
    RunConfig cfg;
    cfg.case_name = "manufactured";
    cfg.method = shho(1);
    EXPECT_EQ(artifact_basename(cfg, 3), "manufactured_shho_k1_3");

    cfg.case_name = "block";
    cfg.method.method = Method::Unstabilized;
    cfg.method.degree = 2;
    EXPECT_EQ(artifact_basename(cfg, 1), "block_uhho_k2_1");
}
