#pragma once

#include <fstream>
#include <iomanip>
#include <limits>
#include <vector>

#include "assembly.hpp"

namespace hhodef {

inline double mesh_size(const Mesh& mesh)
{
    double h = 0.0;
    for (int c = 0; c < mesh.num_cells(); c++) {
        Mat verts(mesh.dim + 1, mesh.dim);
        for (int v = 0; v <= mesh.dim; v++)
            verts.row(v) = mesh.vertices.row(mesh.cells[c][v]);
        h = std::max(h, detail::points_diameter(verts));
    }
    return h;
}

// ---------------------------------------------------------------------------
// error norms
// ---------------------------------------------------------------------------

struct ErrorNorms {
    double err_u = 0.0;    // || u - D(u_h) ||_L2
    double err_grad = 0.0; // || grad u - G(u_h) ||_L2
};

/// L2 errors of the reconstructed displacement and gradient against a smooth
/// reference, integrated with exactness >= 2(k+2) so the quadrature does not
/// pollute the observed rates.  The displacement is measured through the
/// degree-(k+1) reconstruction; the raw cell polynomial saturates one order
/// earlier and would hide the superconvergence of the stabilized method.
template <class FU, class FG>
ErrorNorms compute_errors(const Mesh& mesh, const std::vector<CellContext>& ctxs,
                          const SolutionState& state, const MethodConfig& mcfg,
                          FU&& exact_u, FG&& exact_grad, int quad_order = 0)
{
    const int k = mcfg.degree;
    if (quad_order <= 0)
        quad_order = std::min(max_quadrature_order, 2 * (k + 2));

    double eu2 = 0.0, eg2 = 0.0;
    for (int c = 0; c < mesh.num_cells(); c++) {
        const auto& geo = ctxs[c].geo;
        const ScalarBasis recb = ScalarBasis::on_cell(geo, k + 1);
        const TensorBasis tb(geo, k, mcfg.grad_space);
        const Vec u_local = gather_local(mesh, state, c);
        const Vec Du = ctxs[c].ops.D * u_local;
        const Vec Gu = ctxs[c].ops.G * u_local;
        const QuadratureRule rule = cell_rule(geo, quad_order);

        for (int q = 0; q < rule.num_points(); q++) {
            const Vec x = rule.points.row(q).transpose();
            const double w = rule.weights(q);
            const Vec du = eval_vector_poly(recb, Du, x) - exact_u(x);
            eu2 += w * du.squaredNorm();
            const Mat dG = unvec_rm(tb.eval_vec(x) * Gu, geo.dim) - exact_grad(x);
            eg2 += w * dG.squaredNorm();
        }
    }
    return {std::sqrt(eu2), std::sqrt(eg2)};
}

// ---------------------------------------------------------------------------
// equilibrated tractions
// ---------------------------------------------------------------------------

/// Face tractions T_{T,F} as polynomials of degree k on each face, seen from
/// each adjacent cell: coefficients indexed [cell][local face].
///
/// Unstabilized: T = Pi_F( Pi_R(P) n ), the face projection of the normal
/// trace of the stress projected on the gradient space.  Stabilized: the
/// same plus the penalty contribution, read off the face rows of the
/// stabilization form so that it matches the discrete equilibrium exactly.
struct TractionField {
    std::vector<std::vector<Vec>> coeffs;
};

inline TractionField compute_tractions(const Mesh& mesh,
                                       const std::vector<CellContext>& ctxs,
                                       const SolutionState& state,
                                       const MethodConfig& mcfg,
                                       const ProblemDefinition& prob)
{
    const int k = mcfg.degree;
    TractionField tf;
    tf.coeffs.resize(mesh.num_cells());

    for (int c = 0; c < mesh.num_cells(); c++) {
        const auto& ctx = ctxs[c];
        const auto& L = ctx.ops.layout;
        const int d = L.d;
        const TensorBasis tb(ctx.geo, k, mcfg.grad_space);
        const Vec u = gather_local(mesh, state, c);
        const Vec Gu = ctx.ops.G * u;
        const Vec idvec = vec_rm(Mat::Identity(d, d));

        // Pi_R(P): right-hand side with the same bulk rule as the residual
        Vec rhs = Vec::Zero(tb.size());
        for (int q = 0; q < ctx.bulk.num_points(); q++) {
            const Vec x = ctx.bulk.points.row(q).transpose();
            const Mat E = tb.eval_vec(x);
            const Mat F = unvec_rm(idvec + E * Gu, d);
            const MaterialResponse resp = evaluate_material(prob.law, F, prob.material);
            rhs += ctx.bulk.weights(q) * (E.transpose() * vec_rm(resp.P));
        }
        const Vec Pproj = ctx.ops.grad_mass.ldlt().solve(rhs);

        Vec stab;
        if (mcfg.stabilized())
            stab = mcfg.beta0 * prob.material.mu * (ctx.ops.stab_gram * u);

        tf.coeffs[c].resize(L.nfaces);
        for (int lf = 0; lf < L.nfaces; lf++) {
            const ScalarBasis fb = ScalarBasis::on_face(ctx.geo.faces[lf], d, k);
            const QuadratureRule frule = face_rule(ctx.geo, lf, data_face_order(k));
            const Vec n = ctx.geo.faces[lf].normal;

            Mat Msf = Mat::Zero(fb.size(), fb.size());
            Mat rhsf = Mat::Zero(fb.size(), d);
            for (int q = 0; q < frule.num_points(); q++) {
                const Vec x = frule.points.row(q).transpose();
                const Vec psi = fb.eval(x);
                const Vec tn = tb.normal_traces(x, n) * Pproj;
                Msf += frule.weights(q) * psi * psi.transpose();
                rhsf += frule.weights(q) * psi * tn.transpose();
            }
            const Mat sol = Msf.llt().solve(rhsf);

            Vec coef(L.nface);
            for (int s = 0; s < L.face_scalars; s++)
                for (int cc = 0; cc < d; cc++)
                    coef(s * d + cc) = sol(s, cc);

            if (mcfg.stabilized()) {
                const Mat MF = kron_id(Msf, d);
                coef += MF.llt().solve(stab.segment(L.face_offset(lf), L.nface));
            }
            tf.coeffs[c][lf] = coef;
        }
    }
    return tf;
}

struct TractionChecks {
    double max_interior_mismatch = 0.0; // max_F || T^- + T^+ ||_L2(F)
    double max_neumann_mismatch = 0.0;  // max_F || T - Pi_F(t T_n) ||_L2(F)
};

/// Law of action and reaction on interior faces and consistency with the
/// prescribed traction on Neumann faces.  At a converged state both are of
/// the order of the Newton tolerance.
inline TractionChecks check_traction_balance(const Mesh& mesh,
                                             const std::vector<CellContext>& ctxs,
                                             const TractionField& tf,
                                             const MethodConfig& mcfg,
                                             const ProblemDefinition& prob,
                                             double load_factor)
{
    const int k = mcfg.degree;
    TractionChecks checks;

    std::vector<std::vector<Vec>> by_face(mesh.num_faces());
    std::vector<std::pair<int, int>> face_owner(mesh.num_faces(), {-1, -1});
    for (int c = 0; c < mesh.num_cells(); c++)
        for (std::size_t lf = 0; lf < mesh.cell_faces[c].size(); lf++) {
            const int f = mesh.cell_faces[c][lf];
            by_face[f].push_back(tf.coeffs[c][lf]);
            if (face_owner[f].first < 0)
                face_owner[f] = {c, static_cast<int>(lf)};
        }

    for (int f = 0; f < mesh.num_faces(); f++) {
        const auto [c, lf] = face_owner[f];
        const auto& geo = ctxs[c].geo;
        const ScalarBasis fb = ScalarBasis::on_face(geo.faces[lf], geo.dim, k);
        const QuadratureRule frule = face_rule(geo, lf, data_face_order(k));
        const Mat MF = kron_id(gram(fb, fb, frule), geo.dim);

        if (!mesh.is_boundary_face(f)) {
            const Vec sum = by_face[f][0] + by_face[f][1];
            checks.max_interior_mismatch = std::max(
                checks.max_interior_mismatch, std::sqrt(sum.dot(MF * sum)));
        } else {
            auto it = prob.roles.find(mesh.face_tags[f]);
            if (it == prob.roles.end() || it->second != BoundaryRole::Neumann)
                continue;
            Vec target = Vec::Zero(MF.rows());
            auto data = prob.neumann.find(mesh.face_tags[f]);
            if (data != prob.neumann.end() && data->second) {
                auto scaled = [&](const Vec& x) {
                    return Vec(load_factor * data->second(x));
                };
                target = project_face(geo, lf, k, scaled, data_face_order(k));
            }
            const Vec diff = by_face[f][0] - target;
            checks.max_neumann_mismatch = std::max(
                checks.max_neumann_mismatch, std::sqrt(diff.dot(MF * diff)));
        }
    }
    return checks;
}

/// Cell-wise defect of the local virtual work identity
///   (P, grad w)_T - sum_F (T_{T,F}, w)_F - (t f, w)_T  for all w in P^k(T;R^d),
/// computed from the traction field (not from the residual), so it verifies
/// that the exported tractions actually equilibrate each cell.
inline Vec check_local_virtual_work(const Mesh& mesh,
                                    const std::vector<CellContext>& ctxs,
                                    const SolutionState& state,
                                    const TractionField& tf,
                                    const MethodConfig& mcfg,
                                    const ProblemDefinition& prob,
                                    double load_factor)
{
    const int k = mcfg.degree;
    Vec defects(mesh.num_cells());

    for (int c = 0; c < mesh.num_cells(); c++) {
        const auto& ctx = ctxs[c];
        const auto& L = ctx.ops.layout;
        const int d = L.d;
        const ScalarBasis cellb = ScalarBasis::on_cell(ctx.geo, k);
        const TensorBasis tb(ctx.geo, k, mcfg.grad_space);
        const Vec Gu = ctx.ops.G * gather_local(mesh, state, c);
        const Vec idvec = vec_rm(Mat::Identity(d, d));

        Vec work = Vec::Zero(L.ncell);
        for (int q = 0; q < ctx.bulk.num_points(); q++) {
            const Vec x = ctx.bulk.points.row(q).transpose();
            const Mat F = unvec_rm(idvec + tb.eval_vec(x) * Gu, d);
            const MaterialResponse resp = evaluate_material(prob.law, F, prob.material);
            const Mat g = cellb.gradients(x);
            for (int s = 0; s < L.cell_scalars; s++)
                for (int cc = 0; cc < d; cc++)
                    work(s * d + cc) +=
                        ctx.bulk.weights(q) * resp.P.row(cc).dot(g.row(s));
        }

        for (int lf = 0; lf < L.nfaces; lf++) {
            const ScalarBasis fb = ScalarBasis::on_face(ctx.geo.faces[lf], d, k);
            const QuadratureRule frule = face_rule(ctx.geo, lf, data_face_order(k));
            for (int q = 0; q < frule.num_points(); q++) {
                const Vec x = frule.points.row(q).transpose();
                const Vec T = eval_vector_poly(fb, tf.coeffs[c][lf], x);
                const Vec phi = cellb.eval(x);
                for (int s = 0; s < L.cell_scalars; s++)
                    for (int cc = 0; cc < d; cc++)
                        work(s * d + cc) -= frule.weights(q) * phi(s) * T(cc);
            }
        }

        work -= load_factor * ctx.load_unit.head(L.ncell);
        defects(c) = work.cwiseAbs().maxCoeff();
    }
    return defects;
}

// ---------------------------------------------------------------------------
// derived fields and export
// ---------------------------------------------------------------------------

struct DerivedFields {
    std::vector<double> jacobian;  // det F at the cell barycenter
    std::vector<double> von_mises; // from the Cauchy stress J^{-1} P F^T
};

inline DerivedFields compute_derived_fields(const Mesh& mesh,
                                            const std::vector<CellContext>& ctxs,
                                            const SolutionState& state,
                                            const MethodConfig& mcfg,
                                            const ProblemDefinition& prob)
{
    DerivedFields out;
    out.jacobian.resize(mesh.num_cells());
    out.von_mises.resize(mesh.num_cells());

    for (int c = 0; c < mesh.num_cells(); c++) {
        const auto& ctx = ctxs[c];
        const int d = ctx.geo.dim;
        const TensorBasis tb(ctx.geo, mcfg.degree, mcfg.grad_space);
        const Vec Gu = ctx.ops.G * gather_local(mesh, state, c);
        const Mat F = unvec_rm(vec_rm(Mat::Identity(d, d)) +
                                   tb.eval_vec(ctx.geo.barycenter) * Gu,
                               d);
        const double J = F.determinant();
        out.jacobian[c] = J;

        const MaterialResponse resp = evaluate_material(prob.law, F, prob.material);
        const Mat sigma = (1.0 / J) * resp.P * F.transpose();
        const Mat dev = sigma - (sigma.trace() / d) * Mat::Identity(d, d);
        out.von_mises[c] = std::sqrt(1.5 * dev.squaredNorm());
    }
    return out;
}

/// Legacy ASCII VTK unstructured grid with the vertex-averaged displacement
/// as point data and the derived fields as cell data.
inline void export_vtk(const Mesh& mesh, const std::vector<CellContext>& ctxs,
                       const SolutionState& state, const MethodConfig& mcfg,
                       const ProblemDefinition& prob, const std::string& path)
{
    const DerivedFields fields =
        compute_derived_fields(mesh, ctxs, state, mcfg, prob);

    Mat disp = Mat::Zero(mesh.num_vertices(), 3);
    Vec mult = Vec::Zero(mesh.num_vertices());
    for (int c = 0; c < mesh.num_cells(); c++) {
        const ScalarBasis cellb = ScalarBasis::on_cell(ctxs[c].geo, mcfg.degree);
        for (int v = 0; v <= mesh.dim; v++) {
            const int gv = mesh.cells[c][v];
            const Vec u = eval_vector_poly(cellb, state.cell_dofs[c],
                                           mesh.vertices.row(gv).transpose());
            disp.row(gv).head(mesh.dim) += u.transpose();
            mult(gv) += 1.0;
        }
    }
    for (int v = 0; v < mesh.num_vertices(); v++)
        disp.row(v) /= std::max(1.0, mult(v));

    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << std::setprecision(12);

    out << "# vtk DataFile Version 2.0\nhhodef solution\nASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (int v = 0; v < mesh.num_vertices(); v++) {
        for (int cc = 0; cc < mesh.dim; cc++)
            out << mesh.vertices(v, cc) << " ";
        for (int cc = mesh.dim; cc < 3; cc++)
            out << 0.0 << " ";
        out << "\n";
    }

    const int npc = mesh.vertices_per_cell();
    out << "CELLS " << mesh.num_cells() << " " << mesh.num_cells() * (npc + 1) << "\n";
    for (const auto& cell : mesh.cells) {
        out << npc;
        for (int v = 0; v < npc; v++)
            out << " " << cell[v];
        out << "\n";
    }
    out << "CELL_TYPES " << mesh.num_cells() << "\n";
    for (int c = 0; c < mesh.num_cells(); c++)
        out << (mesh.dim == 3 ? 10 : 5) << "\n";

    out << "POINT_DATA " << mesh.num_vertices() << "\n";
    out << "VECTORS displacement double\n";
    for (int v = 0; v < mesh.num_vertices(); v++)
        out << disp(v, 0) << " " << disp(v, 1) << " " << disp(v, 2) << "\n";

    out << "CELL_DATA " << mesh.num_cells() << "\n";
    out << "SCALARS jacobian double 1\nLOOKUP_TABLE default\n";
    for (double j : fields.jacobian)
        out << j << "\n";
    out << "SCALARS von_mises double 1\nLOOKUP_TABLE default\n";
    for (double s : fields.von_mises)
        out << s << "\n";
}

// ---------------------------------------------------------------------------
// convergence reporting
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    int unknowns = 0;
    double err_u = std::numeric_limits<double>::quiet_NaN();
    double err_grad = std::numeric_limits<double>::quiet_NaN();
    int newton_iterations = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::string reference = "exact"; // exact | self | none

    /* log(e_{i-1}/e_i) / log(h_{i-1}/h_i); NaN on the first row */
    double order_u(std::size_t i) const
    {
        if (i == 0 || i >= rows.size())
            return std::numeric_limits<double>::quiet_NaN();
        return std::log(rows[i - 1].err_u / rows[i].err_u) /
               std::log(rows[i - 1].h / rows[i].h);
    }
    double order_grad(std::size_t i) const
    {
        if (i == 0 || i >= rows.size())
            return std::numeric_limits<double>::quiet_NaN();
        return std::log(rows[i - 1].err_grad / rows[i].err_grad) /
               std::log(rows[i - 1].h / rows[i].h);
    }
};

inline void write_csv(const ConvergenceReport& report, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << std::setprecision(12);
    out << "level,h,unknowns,err_u,order_u,err_grad,order_grad,"
           "newton_iterations,reference\n";
    for (std::size_t i = 0; i < report.rows.size(); i++) {
        const auto& r = report.rows[i];
        out << r.level << "," << r.h << "," << r.unknowns << ",";
        if (report.reference != "none") {
            out << r.err_u << ",";
            if (i > 0)
                out << report.order_u(i);
            out << "," << r.err_grad << ",";
            if (i > 0)
                out << report.order_grad(i);
        } else {
            out << ",,,";
        }
        out << "," << r.newton_iterations << "," << report.reference << "\n";
    }
}

} // namespace hhodef
