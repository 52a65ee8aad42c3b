#pragma once

#include <utility>

#include "basis.hpp"
#include "mesh.hpp"
#include "types.hpp"

namespace hhodef {

/// Local unknowns of one cell: a vector-valued cell polynomial of degree k
/// followed by one vector-valued face polynomial of degree k per face, in
/// cell_faces order.  Vector components are interleaved (index s*d + c).
struct LocalDofLayout {
    int d = 0;
    int k = 0;
    int cell_scalars = 0;
    int face_scalars = 0;
    int ncell = 0;
    int nface = 0;
    int nfaces = 0;
    int ndof = 0;

    int face_offset(int lf) const { return ncell + lf * nface; }
};

inline LocalDofLayout dof_layout(const CellGeometry& geo, int k)
{
    LocalDofLayout L;
    L.d = geo.dim;
    L.k = k;
    L.cell_scalars = poly_space_dim(k, geo.dim);
    L.face_scalars = poly_space_dim(k, geo.dim - 1);
    L.ncell = L.d * L.cell_scalars;
    L.nface = L.d * L.face_scalars;
    L.nfaces = static_cast<int>(geo.faces.size());
    L.ndof = L.ncell + L.nfaces * L.nface;
    return L;
}

// ---------------------------------------------------------------------------
// L2 projections and the reduction operator
// ---------------------------------------------------------------------------

/// Coefficients of the L2 projection of a vector field onto P^k(T; R^d).
template <class F>
Vec project_cell(const CellGeometry& geo, int k, F&& field, int quad_order)
{
    const ScalarBasis basis = ScalarBasis::on_cell(geo, k);
    const QuadratureRule rule = cell_rule(geo, quad_order);
    const int d = geo.dim;

    Mat rhs = Mat::Zero(basis.size(), d);
    for (int q = 0; q < rule.num_points(); q++) {
        const Vec x = rule.points.row(q).transpose();
        rhs += rule.weights(q) * basis.eval(x) * field(x).transpose();
    }
    const Mat sol = gram(basis, basis, rule).llt().solve(rhs);

    Vec coeffs(basis.size() * d);
    for (int s = 0; s < basis.size(); s++)
        for (int c = 0; c < d; c++)
            coeffs(s * d + c) = sol(s, c);
    return coeffs;
}

/// Coefficients of the L2 projection onto P^k(F; R^d) for one face.
template <class F>
Vec project_face(const CellGeometry& geo, int local_face, int k, F&& field,
                 int quad_order)
{
    const auto& fg = geo.faces[local_face];
    const ScalarBasis basis = ScalarBasis::on_face(fg, geo.dim, k);
    const QuadratureRule rule = face_rule(geo, local_face, quad_order);
    const int d = geo.dim;

    Mat rhs = Mat::Zero(basis.size(), d);
    for (int q = 0; q < rule.num_points(); q++) {
        const Vec x = rule.points.row(q).transpose();
        rhs += rule.weights(q) * basis.eval(x) * field(x).transpose();
    }
    const Mat sol = gram(basis, basis, rule).llt().solve(rhs);

    Vec coeffs(basis.size() * d);
    for (int s = 0; s < basis.size(); s++)
        for (int c = 0; c < d; c++)
            coeffs(s * d + c) = sol(s, c);
    return coeffs;
}

/// Reduction (interpolation) onto the local HHO space: cell projection
/// stacked with the face projections.
template <class F>
Vec reduction(const CellGeometry& geo, int k, F&& field, int quad_order)
{
    const LocalDofLayout L = dof_layout(geo, k);
    Vec dofs(L.ndof);
    dofs.head(L.ncell) = project_cell(geo, k, field, quad_order);
    for (int lf = 0; lf < L.nfaces; lf++)
        dofs.segment(L.face_offset(lf), L.nface) =
            project_face(geo, lf, k, field, quad_order);
    return dofs;
}

/// L2 projection of a matrix-valued field onto a tensor basis, using the
/// given rule for the right-hand side (pass the same rule the residual
/// assembly uses so the equilibrated tractions inherit its accuracy).
template <class F>
Vec project_tensor_field(const CellGeometry& geo, const TensorBasis& basis,
                         F&& field, const QuadratureRule& rule)
{
    (void)geo;
    Vec rhs = Vec::Zero(basis.size());
    for (int q = 0; q < rule.num_points(); q++) {
        const Vec x = rule.points.row(q).transpose();
        rhs += rule.weights(q) *
               (basis.eval_vec(x).transpose() * vec_rm(field(x)));
    }
    return mass_matrix(basis, rule).ldlt().solve(rhs);
}

// ---------------------------------------------------------------------------
// polynomial evaluation from coefficient vectors
// ---------------------------------------------------------------------------

inline Vec eval_vector_poly(const ScalarBasis& basis, const Vec& coeffs, const Vec& X)
{
    const int d = basis.ambient_dim();
    const Vec sv = basis.eval(X);
    Vec v = Vec::Zero(d);
    for (int s = 0; s < basis.size(); s++)
        for (int c = 0; c < d; c++)
            v(c) += coeffs(s * d + c) * sv(s);
    return v;
}

/* Gradient (i,j) = d_j v_i of an interleaved vector polynomial. */
inline Mat eval_vector_poly_grad(const ScalarBasis& basis, const Vec& coeffs, const Vec& X)
{
    const int d = basis.ambient_dim();
    const Mat g = basis.gradients(X);
    Mat G = Mat::Zero(d, d);
    for (int s = 0; s < basis.size(); s++)
        for (int c = 0; c < d; c++)
            G.row(c) += coeffs(s * d + c) * g.row(s);
    return G;
}

// ---------------------------------------------------------------------------
// local operators
// ---------------------------------------------------------------------------

/// Gradient reconstruction G_T: dofs -> coefficients in the tensor basis,
/// defined by (G_T(v), tau)_T = (grad v_T, tau)_T + (v_dT - v_T, tau n)_dT
/// for all tau in the chosen space.  Optionally returns the Gram matrix of
/// the tensor basis (needed for energy norms of reconstructed gradients).
inline Mat build_gradient_reconstruction(const CellGeometry& geo, int k,
                                         GradSpace space, Mat* mass_out = nullptr)
{
    const LocalDofLayout L = dof_layout(geo, k);
    const int d = geo.dim;
    const TensorBasis tb(geo, k, space);
    const ScalarBasis cellb = ScalarBasis::on_cell(geo, k);
    const QuadratureRule crule = cell_rule(geo, 2 * (k + 1));

    const Mat MR = mass_matrix(tb, crule);
    Mat B = Mat::Zero(tb.size(), L.ndof);

    for (int q = 0; q < crule.num_points(); q++) {
        const Vec x = crule.points.row(q).transpose();
        const Mat E = tb.eval_vec(x);           // d^2 x nR
        const Mat g = cellb.gradients(x);       // cell_scalars x d
        Mat Dphi = Mat::Zero(d * d, L.ncell);   // vec_rm of grad(phi_s e_c)
        for (int s = 0; s < L.cell_scalars; s++)
            for (int c = 0; c < d; c++)
                for (int j = 0; j < d; j++)
                    Dphi(c * d + j, s * d + c) = g(s, j);
        B.leftCols(L.ncell) += crule.weights(q) * E.transpose() * Dphi;
    }

    for (int lf = 0; lf < L.nfaces; lf++) {
        const auto& fg = geo.faces[lf];
        const ScalarBasis fb = ScalarBasis::on_face(fg, d, k);
        const QuadratureRule frule = face_rule(geo, lf, 2 * k + 2);
        for (int q = 0; q < frule.num_points(); q++) {
            const Vec x = frule.points.row(q).transpose();
            const Mat N = tb.normal_traces(x, fg.normal); // d x nR
            const Vec phi = cellb.eval(x);
            const Vec psi = fb.eval(x);
            Mat Pc = Mat::Zero(d, L.ncell);
            for (int s = 0; s < L.cell_scalars; s++)
                for (int c = 0; c < d; c++)
                    Pc(c, s * d + c) = phi(s);
            Mat Pf = Mat::Zero(d, L.nface);
            for (int s = 0; s < L.face_scalars; s++)
                for (int c = 0; c < d; c++)
                    Pf(c, s * d + c) = psi(s);
            B.leftCols(L.ncell) -= frule.weights(q) * N.transpose() * Pc;
            B.middleCols(L.face_offset(lf), L.nface) +=
                frule.weights(q) * N.transpose() * Pf;
        }
    }

    if (mass_out)
        *mass_out = MR;
    return MR.ldlt().solve(B);
}

/// Displacement reconstruction D_T: dofs -> coefficients of a degree-(k+1)
/// vector polynomial, solving the local Neumann problem
///   (grad D, grad w)_T = (grad v_T, grad w)_T + (v_dT - v_T, grad w n)_dT
/// with the zero-mean kernel fixed by int_T D = int_T v_T.  The constant
/// modes are removed from the solve and recovered from the mean constraint.
inline Mat build_displacement_reconstruction(const CellGeometry& geo, int k)
{
    const LocalDofLayout L = dof_layout(geo, k);
    const int d = geo.dim;
    const ScalarBasis wb = ScalarBasis::on_cell(geo, k + 1);
    const QuadratureRule crule = cell_rule(geo, 2 * (k + 1));
    const int nws = wb.size();
    const int nW = d * nws;

    const Mat Ks = stiffness(wb, crule);
    Mat B = Mat::Zero(nW, L.ndof);
    B.leftCols(L.ncell) = kron_id(Ks.leftCols(L.cell_scalars), d);

    for (int lf = 0; lf < L.nfaces; lf++) {
        const auto& fg = geo.faces[lf];
        const ScalarBasis fb = ScalarBasis::on_face(fg, d, k);
        const QuadratureRule frule = face_rule(geo, lf, 2 * k + 2);
        Mat Bc = Mat::Zero(nws, L.cell_scalars);
        Mat Bf = Mat::Zero(nws, L.face_scalars);
        for (int q = 0; q < frule.num_points(); q++) {
            const Vec x = frule.points.row(q).transpose();
            const Vec gn = wb.gradients(x) * fg.normal; // nws
            Bc -= frule.weights(q) * gn *
                  wb.eval(x).head(L.cell_scalars).transpose();
            Bf += frule.weights(q) * gn * fb.eval(x).transpose();
        }
        B.leftCols(L.ncell) += kron_id(Bc, d);
        B.middleCols(L.face_offset(lf), L.nface) = kron_id(Bf, d);
    }

    // drop the d constant modes (their stiffness rows vanish), solve, then
    // restore them from the mean constraint
    const Mat K_red = kron_id(Ks.bottomRightCorner(nws - 1, nws - 1), d);
    const Mat D_red = K_red.llt().solve(B.bottomRows(nW - d));

    Vec moments(nws); // int_T of each scalar monomial
    moments.setZero();
    for (int q = 0; q < crule.num_points(); q++)
        moments += crule.weights(q) * wb.eval(crule.points.row(q).transpose());

    Mat D = Mat::Zero(nW, L.ndof);
    D.bottomRows(nW - d) = D_red;
    for (int c = 0; c < d; c++) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(L.ndof);
        for (int s = 0; s < L.cell_scalars; s++)
            row(s * d + c) = moments(s);
        for (int s = 1; s < nws; s++)
            row -= moments(s) * D.row(s * d + c);
        D.row(c) = row / moments(0); // moments(0) = |T|
    }
    return D;
}

/// Face-wise stabilization S_dT: dofs -> stacked face polynomial coefficients
///   S(v) = Pi_dT( v_dT - D(v)|_dT - (v_T - Pi_T^k D(v))|_dT ),
/// plus the weighted Gram S^T Gamma S with Gamma|_F = h_F^{-1} M_F, which is
/// the quadratic form beta-independent part of the penalty.  Vanishes on
/// reductions of degree-(k+1) polynomials, which is the property the tests
/// pin down.
inline std::pair<Mat, Mat> build_stabilization(const CellGeometry& geo, int k,
                                               const Mat& D)
{
    const LocalDofLayout L = dof_layout(geo, k);
    const int d = geo.dim;
    const ScalarBasis wb = ScalarBasis::on_cell(geo, k + 1);
    const QuadratureRule crule = cell_rule(geo, 2 * (k + 1));

    const Mat Ms = gram(wb, wb, crule);
    const Mat M1 = kron_id(Ms.topLeftCorner(L.cell_scalars, L.cell_scalars), d);
    const Mat M2 = kron_id(Ms.topRows(L.cell_scalars), d);

    // v_T - Pi_T^k D(v), as cell-polynomial coefficients
    Mat proj1 = -M1.llt().solve(M2 * D);
    proj1.block(0, 0, L.ncell, L.ncell) += Mat::Identity(L.ncell, L.ncell);

    Mat S = Mat::Zero(L.nfaces * L.nface, L.ndof);
    Mat stab_gram = Mat::Zero(L.ndof, L.ndof);

    for (int lf = 0; lf < L.nfaces; lf++) {
        const auto& fg = geo.faces[lf];
        const ScalarBasis fb = ScalarBasis::on_face(fg, d, k);
        const QuadratureRule frule = face_rule(geo, lf, 2 * k + 2);

        const Mat Msf = gram(fb, fb, frule);
        const Mat TrW = gram(fb, wb, frule); // face x cell(k+1) trace moments
        const Mat MF = kron_id(Msf, d);
        const auto llt = MF.llt();

        Mat SF = -llt.solve(kron_id(TrW, d) * D +
                            kron_id(TrW.leftCols(L.cell_scalars), d) * proj1);
        SF.block(0, L.face_offset(lf), L.nface, L.nface) +=
            Mat::Identity(L.nface, L.nface);

        S.middleRows(lf * L.nface, L.nface) = SF;
        stab_gram += (1.0 / fg.diameter) * SF.transpose() * MF * SF;
    }
    return {S, stab_gram};
}

/// Gram matrix of the strain semi-norm
///   |v|_{1,T}^2 = ||grad v_T||_T^2 + sum_F h_F^{-1} ||v_T - v_F||_F^2
/// as a quadratic form on the local dofs.  Its kernel consists of the dof
/// vectors representing one global constant (dimension d).
inline Mat seminorm_gram(const CellGeometry& geo, int k)
{
    const LocalDofLayout L = dof_layout(geo, k);
    const int d = geo.dim;
    const ScalarBasis cellb = ScalarBasis::on_cell(geo, k);
    const QuadratureRule crule = cell_rule(geo, 2 * (k + 1));

    Mat A = Mat::Zero(L.ndof, L.ndof);
    A.topLeftCorner(L.ncell, L.ncell) = kron_id(stiffness(cellb, crule), d);

    for (int lf = 0; lf < L.nfaces; lf++) {
        const auto& fg = geo.faces[lf];
        const ScalarBasis fb = ScalarBasis::on_face(fg, d, k);
        const QuadratureRule frule = face_rule(geo, lf, 2 * k + 2);
        const double w = 1.0 / fg.diameter;

        const Mat Mcc = gram(cellb, cellb, frule);
        const Mat Mcf = gram(cellb, fb, frule);
        const Mat Mff = gram(fb, fb, frule);

        A.topLeftCorner(L.ncell, L.ncell) += w * kron_id(Mcc, d);
        A.block(0, L.face_offset(lf), L.ncell, L.nface) -= w * kron_id(Mcf, d);
        A.block(L.face_offset(lf), 0, L.nface, L.ncell) -=
            w * kron_id(Mcf.transpose(), d);
        A.block(L.face_offset(lf), L.face_offset(lf), L.nface, L.nface) +=
            w * kron_id(Mff, d);
    }
    return A;
}

struct LocalOperators {
    LocalDofLayout layout;
    Mat G;         // gradient reconstruction, ngrad x ndof
    Mat grad_mass; // Gram of the tensor basis
    Mat D;         // displacement reconstruction, into P^{k+1}(T;R^d)
    Mat S;         // stabilization, stacked face blocks x ndof (stabilized only)
    Mat stab_gram; // S^T Gamma S (stabilized only)
};

inline LocalOperators build_local_operators(const CellGeometry& geo, int k,
                                            GradSpace space, bool with_stabilization)
{
    LocalOperators ops;
    ops.layout = dof_layout(geo, k);
    ops.G = build_gradient_reconstruction(geo, k, space, &ops.grad_mass);
    ops.D = build_displacement_reconstruction(geo, k);
    if (with_stabilization)
        std::tie(ops.S, ops.stab_gram) = build_stabilization(geo, k, ops.D);
    return ops;
}

} // namespace hhodef
