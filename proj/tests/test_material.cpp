#include <gtest/gtest.h>

#include <hhodef/diagnostics.hpp>
#include <hhodef/material.hpp>

#include <random>

using namespace hhodef;

namespace {

Mat random_matrix(int d, std::mt19937& rng)
{
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Mat M(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++)
            M(i, j) = unif(rng);
    return M;
}

} // namespace

TEST(TensorProducts, ContractionClosedForms)
{
    std::mt19937 rng(3);
    for (int d = 2; d <= 3; d++) {
        const Mat A = random_matrix(d, rng);
        const Mat B = random_matrix(d, rng);
        const Mat X = random_matrix(d, rng);

        const Mat c1 = unvec_rm(tensor_otimes(A, B) * vec_rm(X), d);
        EXPECT_LT((c1 - A * (B.cwiseProduct(X)).sum()).cwiseAbs().maxCoeff(),
                  1e-14);

        const Mat c2 = unvec_rm(tensor_otimes_lower(A, B) * vec_rm(X), d);
        EXPECT_LT((c2 - A * X.transpose() * B.transpose())
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-14);

        const Mat c3 = unvec_rm(tensor_otimes_upper(A, B) * vec_rm(X), d);
        EXPECT_LT((c3 - A * X * B.transpose()).cwiseAbs().maxCoeff(), 1e-14);

        /* identity of the pairing: 4th-order identity maps X to X */
        const Mat I = Mat::Identity(d, d);
        EXPECT_LT((unvec_rm(tensor_otimes_upper(I, I) * vec_rm(X), d) - X)
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-15);
    }
}

TEST(Neohookean, PinnedUniaxialValues)
{
    const MaterialParams mp{1.0, 1.0};
    Mat F = Mat::Identity(3, 3);
    F(0, 0) = 2.0;

    const MaterialResponse r = evaluate_neohookean(F, mp);
    const double ln2 = std::log(2.0);
    EXPECT_NEAR(r.P(0, 0), 1.5 + 0.5 * ln2, 1e-12);
    EXPECT_NEAR(r.P(1, 1), ln2, 1e-12);
    EXPECT_NEAR(r.P(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(r.psi, 1.5 - ln2 + 0.5 * ln2 * ln2, 1e-12);
}

TEST(Neohookean, StressFreeReferenceState)
{
    const MaterialParams mp{1.7, 0.4};
    const MaterialResponse r =
        evaluate_neohookean(Mat::Identity(3, 3), mp);
    EXPECT_NEAR(r.psi, 0.0, 1e-15);
    EXPECT_LT(r.P.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Cavitation, PinnedReferenceValues)
{
    const double mu = 0.8;
    const MaterialParams mp{mu, 2.0};
    const MaterialResponse r =
        evaluate_cavitation(Mat::Identity(3, 3), mp);

    EXPECT_NEAR(r.psi, 2.0 * mu / std::sqrt(3.0), 1e-13);
    const Mat expected =
        mu * (1.0 / std::sqrt(3.0) - 1.0) * Mat::Identity(3, 3);
    EXPECT_LT((r.P - expected).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Material, EnergyStressConsistency)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const MaterialParams mp{1.3, 2.7};
    const double step = 1e-6;

    for (MaterialLaw law : {MaterialLaw::Neohookean, MaterialLaw::Cavitation,
                            MaterialLaw::LinearElastic}) {
        for (int s = 0; s < 10; s++) {
            Mat F(3, 3);
            do {
                F = Mat::Identity(3, 3) + 0.4 * random_matrix(3, rng);
            } while (F.determinant() < 0.3);
            Mat H = random_matrix(3, rng);
            H /= H.norm();

            const MaterialResponse r = evaluate_material(law, F, mp);
            const double psip = evaluate_material(law, F + step * H, mp).psi;
            const double psim = evaluate_material(law, F - step * H, mp).psi;
            const double fd = (psip - psim) / (2.0 * step);
            EXPECT_NEAR(r.P.cwiseProduct(H).sum(), fd,
                        1e-7 * (1.0 + std::abs(fd)));
        }
    }
}

TEST(Material, TangentMatchesStressDifferences)
{
    std::mt19937 rng(11);
    for (MaterialLaw law :
         {MaterialLaw::Neohookean, MaterialLaw::Cavitation}) {
        const MaterialParams mp{1.0, 10.0};
        EXPECT_LT(tangent_fd_error(law, mp, 20, rng), 1e-6);
    }
}

TEST(Material, RejectsNonPositiveJacobian)
{
    const MaterialParams mp{1.0, 1.0};
    Mat flipped = Mat::Identity(3, 3);
    flipped(0, 0) = -1.0;
    EXPECT_THROW(evaluate_neohookean(flipped, mp), NonPositiveJacobian);
    EXPECT_THROW(evaluate_cavitation(flipped, mp), NonPositiveJacobian);

    Mat collapsed = Mat::Identity(3, 3);
    collapsed(2, 2) = 0.0;
    EXPECT_THROW(evaluate_neohookean(collapsed, mp), NonPositiveJacobian);

    /* the linearized law has no admissibility constraint */
    EXPECT_NO_THROW(evaluate_linear_elastic(flipped, mp));
}

TEST(LinearElastic, ClosedFormAndConstantTangent)
{
    std::mt19937 rng(13);
    const MaterialParams mp{2.0, 3.0};
    const Mat I = Mat::Identity(3, 3);

    const Mat H = 0.01 * random_matrix(3, rng);
    const MaterialResponse r = evaluate_linear_elastic(I + H, mp);
    const Mat eps = 0.5 * (H + H.transpose());
    const Mat sigma = 2.0 * mp.mu * eps + mp.lambda * eps.trace() * I;
    EXPECT_LT((r.P - sigma).cwiseAbs().maxCoeff(), 1e-14);

    const MaterialResponse r2 =
        evaluate_linear_elastic(I + 50.0 * random_matrix(3, rng), mp);
    EXPECT_LT((r.A - r2.A).cwiseAbs().maxCoeff(), 1e-12);

    EXPECT_NEAR(mp.poisson_ratio(), 3.0 / (2.0 * (3.0 + 2.0)), 1e-15);
}

/* At F = I all three laws linearize to the same isotropic modulus. */
TEST(Material, TangentsAgreeAtReferenceState)
{
    const MaterialParams mp{1.4, 0.9};
    const Mat I = Mat::Identity(3, 3);
    const Mat A_lin = evaluate_linear_elastic(I, mp).A;
    const Mat A_neo = evaluate_neohookean(I, mp).A;
    EXPECT_LT((A_lin - A_neo).cwiseAbs().maxCoeff(), 1e-13);
}
