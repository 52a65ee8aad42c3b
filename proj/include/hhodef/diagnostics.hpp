#pragma once

#include <random>

#include "cases.hpp"
#include "local_ops.hpp"
#include "material.hpp"

namespace hhodef {

/// Simplex with vertices drawn uniformly in the unit box, rejected until its
/// measure clears a quality floor so the scaled bases stay well conditioned.
inline CellGeometry random_cell_geometry(int dim, std::mt19937& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double fact = 1.0;
    for (int j = 2; j <= dim; j++)
        fact *= j;

    for (;;) {
        Mesh mesh;
        mesh.dim = dim;
        mesh.vertices.resize(dim + 1, dim);
        for (int v = 0; v <= dim; v++)
            for (int c = 0; c < dim; c++)
                mesh.vertices(v, c) = unif(rng);

        const double vol = detail::simplex_measure(mesh.vertices);
        const double diam = detail::points_diameter(mesh.vertices);
        if (std::abs(vol) < 0.1 * std::pow(diam, dim) / fact)
            continue;

        std::array<int, 4> cell = {0, 1, 2, dim == 3 ? 3 : -1};
        if (vol < 0.0)
            std::swap(cell[1], cell[2]);
        mesh.cells.push_back(cell);
        finalize_connectivity(mesh);
        return cell_geometry(mesh, 0);
    }
}

// ---------------------------------------------------------------------------
// reconstruction identities
// ---------------------------------------------------------------------------

/// Residuals of the projection identities satisfied by the gradient
/// reconstruction applied to the reduction of a smooth field v (here a
/// random vector polynomial of degree k+2, so all quadratures are exact):
///   strong:  G(I(v)) = Pi_R(grad v)          (holds for the RTN-type space)
///   weak:    Pi_Pk(G(I(v)) - grad v) = 0     (holds for every space)
/// Both are returned relative to the norm of the projected gradient.
struct CommutingErrors {
    double strong = 0.0;
    double weak = 0.0;
};

inline CommutingErrors commuting_errors(const CellGeometry& geo, int k,
                                        GradSpace space, std::mt19937& rng)
{
    const int d = geo.dim;
    const ScalarBasis smooth = ScalarBasis::on_cell(geo, k + 2);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Mat C(smooth.size(), d);
    for (Eigen::Index i = 0; i < C.rows(); i++)
        for (int c = 0; c < d; c++)
            C(i, c) = unif(rng);

    auto v = [&](const Vec& x) { return Vec(C.transpose() * smooth.eval(x)); };
    auto grad_v = [&](const Vec& x) { return Mat(C.transpose() * smooth.gradients(x)); };

    const int order = std::min(max_quadrature_order, 2 * (k + 2));
    const QuadratureRule rule = cell_rule(geo, order);

    Mat grad_mass;
    const Mat G = build_gradient_reconstruction(geo, k, space, &grad_mass);
    const Vec Iv = reduction(geo, k, v, order);
    const Vec Gv = G * Iv;

    const TensorBasis tb(geo, k, space);
    const Vec Pg = project_tensor_field(geo, tb, grad_v, rule);

    CommutingErrors out;
    const Vec diff = Gv - Pg;
    out.strong = std::sqrt(diff.dot(grad_mass * diff) /
                           std::max(1e-300, Pg.dot(grad_mass * Pg)));

    const TensorBasis tbk(geo, k, GradSpace::Pk);
    auto gap = [&](const Vec& x) {
        return Mat(unvec_rm(tb.eval_vec(x) * Gv, d) - grad_v(x));
    };
    const Vec wdiff = project_tensor_field(geo, tbk, gap, rule);
    const Vec wref = project_tensor_field(geo, tbk, grad_v, rule);
    const Mat Mk = mass_matrix(tbk, cell_rule(geo, 2 * k));
    out.weak = std::sqrt(wdiff.dot(Mk * wdiff) /
                         std::max(1e-300, wref.dot(Mk * wref)));
    return out;
}

/// Largest stabilization output over the reductions of a full basis of
/// P^{k+1}(T;R^d), normalized by the input size.  Zero up to roundoff when
/// the stabilization is consistent.
inline double stabilization_consistency(const CellGeometry& geo, int k)
{
    const auto ops = build_local_operators(geo, k, GradSpace::Pk, true);
    const ScalarBasis rich = ScalarBasis::on_cell(geo, k + 1);
    const int d = geo.dim;

    double worst = 0.0;
    for (Eigen::Index s = 0; s < rich.size(); s++)
        for (int c = 0; c < d; c++) {
            auto w = [&](const Vec& x) {
                Vec val = Vec::Zero(d);
                val(c) = rich.eval(x)(s);
                return val;
            };
            const Vec Iw = reduction(geo, k, w, 2 * k + 2);
            const Vec Sw = ops.S * Iw;
            worst = std::max(worst, Sw.cwiseAbs().maxCoeff() /
                                        std::max(1.0, Iw.cwiseAbs().maxCoeff()));
        }
    return worst;
}

inline int seminorm_kernel_dimension(const CellGeometry& geo, int k,
                                     double tol = 1e-10)
{
    const Mat N = seminorm_gram(geo, k);
    Eigen::SelfAdjointEigenSolver<Mat> es(N);
    const double scale = es.eigenvalues().maxCoeff();
    int dim = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); i++)
        if (es.eigenvalues()(i) < tol * scale)
            dim++;
    return dim;
}

/// Extremal generalized eigenvalues of the method's local energy form
/// against the discrete strain seminorm, both restricted to the complement
/// of the rigid translations.  Positive lower bounds uniformly in h are the
/// coercivity statements for the two variants.
struct EquivalenceBounds {
    double lower = 0.0;
    double upper = 0.0;
};

inline EquivalenceBounds equivalence_bounds(const CellGeometry& geo, int k,
                                            Method method)
{
    const GradSpace space =
        method == Method::Stabilized ? GradSpace::Pk : GradSpace::Rtn;
    const auto ops =
        build_local_operators(geo, k, space, method == Method::Stabilized);

    Mat A = ops.G.transpose() * ops.grad_mass * ops.G;
    if (method == Method::Stabilized)
        A += ops.stab_gram;
    const Mat B = seminorm_gram(geo, k);

    Eigen::SelfAdjointEigenSolver<Mat> esB(B);
    const double bmax = esB.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < esB.eigenvalues().size(); i++)
        if (esB.eigenvalues()(i) > 1e-12 * bmax)
            keep.push_back(i);

    Mat W(B.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); j++)
        W.col(static_cast<Eigen::Index>(j)) =
            esB.eigenvectors().col(keep[j]) / std::sqrt(esB.eigenvalues()(keep[j]));

    Eigen::SelfAdjointEigenSolver<Mat> esM(Mat(W.transpose() * A * W));
    return {esM.eigenvalues().minCoeff(), esM.eigenvalues().maxCoeff()};
}

// ---------------------------------------------------------------------------
// material and manufactured-solution checks
// ---------------------------------------------------------------------------

/// Worst relative mismatch between the tangent modulus contracted with a
/// random direction and a central finite difference of the stress, over
/// random deformation gradients with det F in [0.2, 5].
inline double tangent_fd_error(MaterialLaw law, const MaterialParams& mp,
                               int n_samples, std::mt19937& rng,
                               double step = 1e-6)
{
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int d = 3;
    double worst = 0.0;

    for (int s = 0; s < n_samples; s++) {
        Mat F(d, d);
        for (;;) {
            for (int i = 0; i < d; i++)
                for (int j = 0; j < d; j++)
                    F(i, j) = (i == j) + 0.5 * unif(rng);
            const double J = F.determinant();
            if (J >= 0.2 && J <= 5.0)
                break;
        }
        Mat dF(d, d);
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++)
                dF(i, j) = unif(rng);
        dF /= dF.norm();

        const MaterialResponse resp = evaluate_material(law, F, mp);
        const Mat AdF = unvec_rm(resp.A * vec_rm(dF), d);
        const Mat Pp = evaluate_material(law, F + step * dF, mp).P;
        const Mat Pm = evaluate_material(law, F - step * dF, mp).P;
        const Mat fd = (Pp - Pm) / (2.0 * step);
        worst = std::max(worst, (AdF - fd).norm() / fd.norm());
    }
    return worst;
}

/// Residual of the strong-form equilibrium div P + f = 0 for the
/// manufactured pair, with the divergence taken by central differences of
/// the analytic stress at random interior points.
inline double manufactured_divergence_error(double alpha, double gamma,
                                            double mu, double lambda,
                                            MaterialLaw law, int n_samples,
                                            std::mt19937& rng,
                                            double step = 1e-5)
{
    const ManufacturedFields mf = manufactured_fields(alpha, gamma, mu, lambda);
    const MaterialParams mp{mu, lambda};
    std::uniform_real_distribution<double> unif(0.05, 0.95);

    auto stress = [&](const Vec& X) {
        return evaluate_material(law, Mat(Mat::Identity(3, 3) + mf.grad(X)), mp).P;
    };

    double worst = 0.0;
    for (int s = 0; s < n_samples; s++) {
        Vec X(3);
        X << unif(rng), unif(rng), unif(rng);
        Vec divP = Vec::Zero(3);
        for (int j = 0; j < 3; j++) {
            Vec Xp = X, Xm = X;
            Xp(j) += step;
            Xm(j) -= step;
            divP += (stress(Xp).col(j) - stress(Xm).col(j)) / (2.0 * step);
        }
        worst = std::max(worst, (divP + mf.f(X)).lpNorm<Eigen::Infinity>());
    }
    return worst;
}

} // namespace hhodef
