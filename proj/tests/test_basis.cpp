#include <gtest/gtest.h>

#include <hhodef/basis.hpp>
#include <hhodef/diagnostics.hpp>
#include <hhodef/mesh.hpp>

#include <random>

using namespace hhodef;

namespace {

QuadratureRule rule_on(const FaceGeometry& fg, int dim, int order)
{
    return map_rule(simplex_rule(dim - 1, order), fg.vertices);
}

} // namespace

TEST(MonomialExponents, GradedBlocksAreContiguous)
{
    for (int nvars = 1; nvars <= 3; nvars++) {
        const auto exps = monomial_exponents(nvars, 4);
        ASSERT_EQ(static_cast<int>(exps.size()), poly_space_dim(4, nvars));
        for (int m = 0; m <= 4; m++) {
            const int lo = m == 0 ? 0 : poly_space_dim(m - 1, nvars);
            const int hi = poly_space_dim(m, nvars);
            for (int i = lo; i < hi; i++)
                EXPECT_EQ(exps[i][0] + exps[i][1] + exps[i][2], m);
        }
    }
}

TEST(ScalarBasis, CellAndFaceGramsAreIdentity)
{
    const Mesh mesh = generate_cube_mesh(1);
    for (int c = 0; c < mesh.num_cells(); c++) {
        const CellGeometry geo = cell_geometry(mesh, c);
        for (int k = 1; k <= 3; k++) {
            const ScalarBasis b = ScalarBasis::on_cell(geo, k);
            const Mat M = gram(b, b, cell_rule(geo, 2 * k));
            EXPECT_LT((M - Mat::Identity(b.size(), b.size()))
                          .cwiseAbs()
                          .maxCoeff(),
                      1e-13);

            const ScalarBasis fb = ScalarBasis::on_face(geo.faces[0], 3, k);
            const Mat Mf = gram(fb, fb, face_rule(geo, 0, 2 * k));
            EXPECT_LT((Mf - Mat::Identity(fb.size(), fb.size()))
                          .cwiseAbs()
                          .maxCoeff(),
                      1e-13);
        }
    }
}

TEST(ScalarBasis, GradientsMatchFiniteDifferences)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double step = 1e-6;

    for (int dim = 2; dim <= 3; dim++) {
        const CellGeometry geo = random_cell_geometry(dim, rng);
        const ScalarBasis cell = ScalarBasis::on_cell(geo, 3);
        const ScalarBasis face =
            ScalarBasis::on_face(geo.faces[0], dim, 3);

        for (const ScalarBasis& b : {cell, face}) {
            Vec X = geo.barycenter;
            for (int c = 0; c < dim; c++)
                X(c) += 0.1 * unif(rng) * geo.diameter;

            const Mat G = b.gradients(X);
            for (int c = 0; c < dim; c++) {
                Vec Xp = X, Xm = X;
                Xp(c) += step;
                Xm(c) -= step;
                const Vec fd = (b.eval(Xp) - b.eval(Xm)) / (2.0 * step);
                EXPECT_LT((G.col(c) - fd).cwiseAbs().maxCoeff(),
                          1e-7 * (1.0 + G.cwiseAbs().maxCoeff()))
                    << "dim " << dim << " component " << c;
            }
        }
    }
}

/* Both cells adjacent to an interior face must expand face unknowns in the
 * same polynomials, otherwise the coupling blocks of the two cells refer to
 * different coefficients. */
TEST(ScalarBasis, SharedFaceFrameIsCellIndependent)
{
    const Mesh mesh = generate_cube_mesh(1);
    int tested = 0;
    for (int f = 0; f < mesh.num_faces(); f++) {
        if (mesh.is_boundary_face(f))
            continue;
        const int c0 = mesh.face_cells[f][0];
        const int c1 = mesh.face_cells[f][1];
        const CellGeometry g0 = cell_geometry(mesh, c0);
        const CellGeometry g1 = cell_geometry(mesh, c1);

        const auto local = [f](const CellGeometry& g) {
            for (const FaceGeometry& fg : g.faces)
                if (fg.face_id == f)
                    return fg;
            throw std::logic_error("face not found");
        };
        const FaceGeometry f0 = local(g0);
        const FaceGeometry f1 = local(g1);
        EXPECT_LT((f0.normal + f1.normal).norm(), 1e-13);

        const ScalarBasis b0 = ScalarBasis::on_face(f0, 3, 2);
        const ScalarBasis b1 = ScalarBasis::on_face(f1, 3, 2);
        const QuadratureRule rule = rule_on(f0, 3, 4);
        for (int q = 0; q < rule.num_points(); q++) {
            const Vec x = rule.points.row(q).transpose();
            EXPECT_LT((b0.eval(x) - b1.eval(x)).cwiseAbs().maxCoeff(), 1e-13);
        }
        tested++;
    }
    EXPECT_GT(tested, 0);
}

TEST(TensorBasis, DimensionsAndDegree)
{
    std::mt19937 rng(11);
    const CellGeometry g3 = random_cell_geometry(3, rng);
    const CellGeometry g2 = random_cell_geometry(2, rng);

    EXPECT_EQ(TensorBasis(g3, 1, GradSpace::Pk).size(), 4 * 9);
    EXPECT_EQ(TensorBasis(g3, 1, GradSpace::Pkp1).size(), 10 * 9);
    EXPECT_EQ(TensorBasis(g3, 1, GradSpace::Rtn).size(), 4 * 9 + 3 * 3);
    EXPECT_EQ(TensorBasis(g3, 2, GradSpace::Pkp1).size(), 20 * 9);
    EXPECT_EQ(TensorBasis(g3, 2, GradSpace::Rtn).size(), 10 * 9 + 6 * 3);

    EXPECT_EQ(TensorBasis(g2, 1, GradSpace::Pk).size(), 3 * 4);
    EXPECT_EQ(TensorBasis(g2, 1, GradSpace::Pkp1).size(), 6 * 4);
    EXPECT_EQ(TensorBasis(g2, 1, GradSpace::Rtn).size(), 3 * 4 + 2 * 2);

    EXPECT_EQ(TensorBasis(g3, 2, GradSpace::Pk).poly_degree(), 2);
    EXPECT_EQ(TensorBasis(g3, 2, GradSpace::Pkp1).poly_degree(), 3);
    EXPECT_EQ(TensorBasis(g3, 2, GradSpace::Rtn).poly_degree(), 3);
}

TEST(TensorBasis, NormalTracesMatchEvalVec)
{
    std::mt19937 rng(13);
    for (int dim = 2; dim <= 3; dim++) {
        const CellGeometry geo = random_cell_geometry(dim, rng);
        for (GradSpace space :
             {GradSpace::Pk, GradSpace::Pkp1, GradSpace::Rtn}) {
            const TensorBasis basis(geo, 2, space);
            const FaceGeometry& fg = geo.faces[dim]; // any face works
            const Vec x = fg.barycenter;

            const Mat E = basis.eval_vec(x);
            const Mat N = basis.normal_traces(x, fg.normal);
            for (int i = 0; i < basis.size(); i++) {
                const Vec direct = unvec_rm(E.col(i), dim) * fg.normal;
                EXPECT_LT((N.col(i) - direct).cwiseAbs().maxCoeff(), 1e-13);
            }
        }
    }
}

/* The defining property of the Rtn choice: every normal trace lies in
 * P^k(F; R^d), so face moments of degree k see the full reconstruction
 * space.  The plain P^{k+1} space does not have this property. */
TEST(TensorBasis, RtnNormalTracesHaveDegreeK)
{
    std::mt19937 rng(17);
    for (int dim = 2; dim <= 3; dim++) {
        for (int k = 1; k <= 2; k++) {
            const CellGeometry geo = random_cell_geometry(dim, rng);
            const auto trace_residual = [&](GradSpace space) {
                const TensorBasis basis(geo, k, space);
                double worst = 0.0;
                for (const FaceGeometry& fg : geo.faces) {
                    const ScalarBasis fb = ScalarBasis::on_face(fg, dim, k);
                    const QuadratureRule rule = rule_on(fg, dim, 2 * (k + 2));
                    const Mat M = kron_id(gram(fb, fb, rule), dim);

                    Mat rhs = Mat::Zero(fb.size() * dim, basis.size());
                    Vec norm2 = Vec::Zero(basis.size());
                    for (int q = 0; q < rule.num_points(); q++) {
                        const Vec x = rule.points.row(q).transpose();
                        const Mat N = basis.normal_traces(x, fg.normal);
                        const Vec fv = fb.eval(x);
                        Mat test(fb.size() * dim, dim);
                        for (int s = 0; s < fb.size(); s++)
                            test.block(s * dim, 0, dim, dim) =
                                fv(s) * Mat::Identity(dim, dim);
                        rhs += rule.weights(q) * test * N;
                        norm2 += rule.weights(q) *
                                 N.colwise().squaredNorm().transpose();
                    }
                    const Mat coef = M.ldlt().solve(rhs);
                    /* || trace ||^2 - || projection ||^2 per column */
                    for (int i = 0; i < basis.size(); i++) {
                        const double res2 =
                            norm2(i) - coef.col(i).dot(rhs.col(i));
                        worst = std::max(worst, res2 / std::max(1.0, norm2(i)));
                    }
                }
                return worst;
            };

            EXPECT_LT(trace_residual(GradSpace::Rtn), 1e-12)
                << "dim " << dim << " k " << k;
            EXPECT_GT(trace_residual(GradSpace::Pkp1), 1e-6)
                << "dim " << dim << " k " << k;
        }
    }
}

TEST(TensorBasis, MassMatrixMatchesQuadratureAndIsSpd)
{
    std::mt19937 rng(19);
    for (int dim = 2; dim <= 3; dim++) {
        const CellGeometry geo = random_cell_geometry(dim, rng);
        for (GradSpace space :
             {GradSpace::Pk, GradSpace::Pkp1, GradSpace::Rtn}) {
            const TensorBasis basis(geo, 1, space);
            const QuadratureRule rule = cell_rule(geo, 2 * basis.poly_degree());

            const Mat M = mass_matrix(basis, rule);
            Mat naive = Mat::Zero(basis.size(), basis.size());
            for (int q = 0; q < rule.num_points(); q++) {
                const Mat E = basis.eval_vec(rule.points.row(q).transpose());
                naive += rule.weights(q) * E.transpose() * E;
            }
            EXPECT_LT((M - naive).cwiseAbs().maxCoeff(),
                      1e-13 * naive.cwiseAbs().maxCoeff());
            EXPECT_LT((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-14);

            Eigen::SelfAdjointEigenSolver<Mat> es(M);
            EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
        }
    }
}

TEST(TensorConventions, VecRmRoundTripAndContraction)
{
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Mat A(3, 3);
    for (int i = 0; i < 9; i++)
        A(i / 3, i % 3) = unif(rng);

    EXPECT_LT((unvec_rm(vec_rm(A), 3) - A).cwiseAbs().maxCoeff(), 1e-16);
    EXPECT_EQ(vec_rm(A)(1 * 3 + 2), A(1, 2));
}
