#pragma once

#include <cmath>

#include "types.hpp"

namespace hhodef {

/* Fourth-order tensors are d^2 x d^2 matrices with row-major index pairing,
 * entry (i*d+j, k*d+l) = A_{ijkl}, so A : M = unvec_rm(A * vec_rm(M)).
 *
 *   otimes       (A (x) B)_{ijkl}  = A_ij B_kl
 *   otimes_lower (A (x)_ B)_{ijkl} = A_il B_jk
 *   otimes_upper (A (x)^ B)_{ijkl} = A_ik B_jl
 */
inline Mat tensor_otimes(const Mat& A, const Mat& B)
{
    const int d = static_cast<int>(A.rows());
    Mat T(d * d, d * d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++)
            for (int k = 0; k < d; k++)
                for (int l = 0; l < d; l++)
                    T(i * d + j, k * d + l) = A(i, j) * B(k, l);
    return T;
}

inline Mat tensor_otimes_lower(const Mat& A, const Mat& B)
{
    const int d = static_cast<int>(A.rows());
    Mat T(d * d, d * d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++)
            for (int k = 0; k < d; k++)
                for (int l = 0; l < d; l++)
                    T(i * d + j, k * d + l) = A(i, l) * B(j, k);
    return T;
}

inline Mat tensor_otimes_upper(const Mat& A, const Mat& B)
{
    const int d = static_cast<int>(A.rows());
    Mat T(d * d, d * d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++)
            for (int k = 0; k < d; k++)
                for (int l = 0; l < d; l++)
                    T(i * d + j, k * d + l) = A(i, k) * B(j, l);
    return T;
}

enum class MaterialLaw { Neohookean, Cavitation, LinearElastic };

struct MaterialParams {
    double mu = 1.0;
    double lambda = 1.0;

    double poisson_ratio() const { return lambda / (2.0 * (lambda + mu)); }
};

/// Energy density, first Piola-Kirchhoff stress P = dPsi/dF and elastic
/// modulus A = dP/dF at one deformation gradient.
struct MaterialResponse {
    double psi = 0.0;
    Mat P; // d x d
    Mat A; // d^2 x d^2
};

/// Compressible neohookean law with logarithmic volumetric term:
///   Psi(F) = mu/2 (F:F - d) - mu ln J + lambda/2 (ln J)^2,  J = det F.
/// Throws NonPositiveJacobian for J <= 0 so the load stepping can recover.
inline MaterialResponse evaluate_neohookean(const Mat& F, const MaterialParams& mp)
{
    const int d = static_cast<int>(F.rows());
    const double J = F.determinant();
    if (!(J > 0.0))
        throw NonPositiveJacobian("neohookean: det F = " + std::to_string(J));

    const Mat Fit = F.inverse().transpose();
    const double lnJ = std::log(J);

    MaterialResponse r;
    r.psi = 0.5 * mp.mu * (F.squaredNorm() - d) - mp.mu * lnJ +
            0.5 * mp.lambda * lnJ * lnJ;
    r.P = mp.mu * (F - Fit) + mp.lambda * lnJ * Fit;
    r.A = mp.mu * Mat::Identity(d * d, d * d) +
          (mp.mu - mp.lambda * lnJ) * tensor_otimes_lower(Fit, F.inverse()) +
          mp.lambda * tensor_otimes(Fit, Fit);
    return r;
}

/// Law with slow growth of the isochoric part, admitting cavitating
/// (locally near-infinite stretch) solutions:
///   Psi(F) = 2 mu 3^{-5/4} (F:F)^{3/4} - mu ln J + lambda/2 (ln J)^2.
inline MaterialResponse evaluate_cavitation(const Mat& F, const MaterialParams& mp)
{
    const int d = static_cast<int>(F.rows());
    const double J = F.determinant();
    if (!(J > 0.0))
        throw NonPositiveJacobian("cavitation law: det F = " + std::to_string(J));

    const Mat Fit = F.inverse().transpose();
    const double lnJ = std::log(J);
    const double i1 = F.squaredNorm(); // F : F
    const double c = mp.mu * std::pow(3.0, -0.25);

    MaterialResponse r;
    r.psi = 2.0 * mp.mu * std::pow(3.0, -1.25) * std::pow(i1, 0.75) -
            mp.mu * lnJ + 0.5 * mp.lambda * lnJ * lnJ;
    r.P = c * std::pow(i1, -0.25) * F - mp.mu * Fit + mp.lambda * lnJ * Fit;
    r.A = c * std::pow(i1, -0.25) * Mat::Identity(d * d, d * d) -
          0.5 * c * std::pow(i1, -1.25) * tensor_otimes(F, F) +
          (mp.mu - mp.lambda * lnJ) * tensor_otimes_lower(Fit, F.inverse()) +
          mp.lambda * tensor_otimes(Fit, Fit);
    return r;
}

/// Small-strain elasticity driven through the same interface: the "stress"
/// is sigma = 2 mu sym(grad u) + lambda tr(grad u) I with grad u = F - I, and
/// the modulus is constant.  Used for linear verification problems and for
/// conditioning studies.
inline MaterialResponse evaluate_linear_elastic(const Mat& F, const MaterialParams& mp)
{
    const int d = static_cast<int>(F.rows());
    const Mat I = Mat::Identity(d, d);
    const Mat eps = 0.5 * ((F - I) + (F - I).transpose());
    const double tr = eps.trace();

    MaterialResponse r;
    r.psi = mp.mu * eps.squaredNorm() + 0.5 * mp.lambda * tr * tr;
    r.P = 2.0 * mp.mu * eps + mp.lambda * tr * I;
    r.A = mp.mu * (Mat::Identity(d * d, d * d) + tensor_otimes_lower(I, I)) +
          mp.lambda * tensor_otimes(I, I);
    return r;
}

inline MaterialResponse evaluate_material(MaterialLaw law, const Mat& F,
                                          const MaterialParams& mp)
{
    switch (law) {
    case MaterialLaw::Neohookean:
        return evaluate_neohookean(F, mp);
    case MaterialLaw::Cavitation:
        return evaluate_cavitation(F, mp);
    case MaterialLaw::LinearElastic:
        return evaluate_linear_elastic(F, mp);
    }
    throw std::logic_error("evaluate_material: unknown law");
}

} // namespace hhodef
