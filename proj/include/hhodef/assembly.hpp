#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <thread>
#include <vector>

#include "config.hpp"
#include "local_ops.hpp"
#include "material.hpp"
#include "mesh.hpp"

namespace hhodef {

enum class BoundaryRole { Dirichlet, Neumann };

using BoundaryData = std::map<std::string, std::function<Vec(const Vec&)>>;

/// Solver-facing description of one boundary value problem.  Boundary data
/// and loads are given at full load; the driver ramps them linearly.  Tags
/// without an entry in the data maps get homogeneous data (clamped faces,
/// traction-free faces).
struct ProblemDefinition {
    MaterialLaw law = MaterialLaw::Neohookean;
    MaterialParams material;
    std::map<std::string, BoundaryRole> roles; // boundary tag -> role
    std::function<Vec(const Vec&)> body_force; // null = zero
    BoundaryData dirichlet;                    // tag -> u_d(X)
    BoundaryData neumann;                      // tag -> T_n(X)
};

/* Face quadrature order used for boundary data (Neumann loads, Dirichlet
 * projections) and, in the postprocessing, for the matching traction
 * projections.  Keeping the two in sync is what makes the equilibration
 * checks close at the Newton tolerance. */
inline int data_face_order(int k)
{
    return 2 * k + 2;
}

// ---------------------------------------------------------------------------
// dof bookkeeping
// ---------------------------------------------------------------------------

/// Global unknowns are the face dofs of non-Dirichlet faces; Dirichlet faces
/// hold projected boundary data and are eliminated strongly.
struct DofMap {
    int nface = 0;                // dofs per face
    std::vector<int> face_offset; // global offset, or -1 on Dirichlet faces
    int num_free = 0;

    bool is_dirichlet(int f) const { return face_offset[f] < 0; }
};

inline DofMap build_dof_map(const Mesh& mesh, const ProblemDefinition& prob, int k)
{
    DofMap map;
    map.nface = mesh.dim * poly_space_dim(k, mesh.dim - 1);
    map.face_offset.assign(mesh.num_faces(), 0);

    for (int f = 0; f < mesh.num_faces(); f++) {
        if (!mesh.is_boundary_face(f))
            continue;
        const auto& tag = mesh.face_tags[f];
        auto it = prob.roles.find(tag);
        if (it == prob.roles.end())
            throw ConfigError("boundary tag '" + tag +
                              "' has no assigned role in this case");
        if (it->second == BoundaryRole::Dirichlet)
            map.face_offset[f] = -1;
    }

    int next = 0;
    for (int f = 0; f < mesh.num_faces(); f++) {
        if (map.face_offset[f] < 0)
            continue;
        map.face_offset[f] = next;
        next += map.nface;
    }
    map.num_free = next;
    return map;
}

// ---------------------------------------------------------------------------
// cached per-cell data
// ---------------------------------------------------------------------------

struct CellContext {
    CellGeometry geo;
    LocalOperators ops;
    QuadratureRule bulk; // mapped volume rule for the nonlinear integrands
    Vec load_unit;       // (f, phi)_T and (T_n, psi)_F at unit load factor
};

inline int num_threads_from_env()
{
    if (const char* s = std::getenv("HHODEF_THREADS")) {
        const int n = std::atoi(s);
        if (n >= 1)
            return n;
    }
    return 1;
}

template <class F>
void parallel_for(int n, int nthreads, F&& body)
{
    if (nthreads <= 1 || n <= 1) {
        for (int i = 0; i < n; i++)
            body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(nthreads);
    std::vector<std::thread> pool;
    const int chunk = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; t++)
        pool.emplace_back([&, t]() {
            try {
                const int lo = t * chunk;
                const int hi = std::min(n, lo + chunk);
                for (int i = lo; i < hi; i++)
                    body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

inline std::vector<CellContext> build_cell_contexts(const Mesh& mesh,
                                                    const ProblemDefinition& prob,
                                                    const MethodConfig& mcfg,
                                                    int nthreads = 1)
{
    std::vector<CellContext> ctxs(mesh.num_cells());
    parallel_for(mesh.num_cells(), nthreads, [&](int c) {
        CellContext ctx;
        ctx.geo = cell_geometry(mesh, c);
        ctx.ops = build_local_operators(ctx.geo, mcfg.degree, mcfg.grad_space,
                                        mcfg.stabilized());
        ctx.bulk = cell_rule(ctx.geo, mcfg.bulk_quad_order());

        const auto& L = ctx.ops.layout;
        ctx.load_unit = Vec::Zero(L.ndof);

        if (prob.body_force) {
            const ScalarBasis cellb = ScalarBasis::on_cell(ctx.geo, L.k);
            for (int q = 0; q < ctx.bulk.num_points(); q++) {
                const Vec x = ctx.bulk.points.row(q).transpose();
                const Vec fx = prob.body_force(x);
                const Vec phi = cellb.eval(x);
                for (int s = 0; s < L.cell_scalars; s++)
                    for (int cc = 0; cc < L.d; cc++)
                        ctx.load_unit(s * L.d + cc) +=
                            ctx.bulk.weights(q) * phi(s) * fx(cc);
            }
        }

        for (int lf = 0; lf < L.nfaces; lf++) {
            const int f = mesh.cell_faces[c][lf];
            if (!mesh.is_boundary_face(f))
                continue;
            auto it = prob.roles.find(mesh.face_tags[f]);
            if (it == prob.roles.end() || it->second != BoundaryRole::Neumann)
                continue;
            auto data = prob.neumann.find(mesh.face_tags[f]);
            if (data == prob.neumann.end() || !data->second)
                continue;
            const ScalarBasis fb = ScalarBasis::on_face(ctx.geo.faces[lf], L.d, L.k);
            const QuadratureRule frule = face_rule(ctx.geo, lf, data_face_order(L.k));
            for (int q = 0; q < frule.num_points(); q++) {
                const Vec x = frule.points.row(q).transpose();
                const Vec tn = data->second(x);
                const Vec psi = fb.eval(x);
                for (int s = 0; s < L.face_scalars; s++)
                    for (int cc = 0; cc < L.d; cc++)
                        ctx.load_unit(L.face_offset(lf) + s * L.d + cc) +=
                            frule.weights(q) * psi(s) * tn(cc);
            }
        }
        ctxs[c] = std::move(ctx);
    });
    return ctxs;
}

// ---------------------------------------------------------------------------
// local residual / tangent and static condensation
// ---------------------------------------------------------------------------

struct LocalSystem {
    Vec r;
    Mat K;
};

/// Residual and (optionally) consistent tangent of one cell:
///   r = G^T (P(F), tau) + beta S^T Gamma S u - t (loads)
///   K = G^T (A(F) tau, tau) G + beta S^T Gamma S
/// with F = I + reconstructed gradient at each quadrature point.
inline LocalSystem local_system(const CellContext& ctx, const MethodConfig& mcfg,
                                const ProblemDefinition& prob, const Vec& u_local,
                                double load_factor, bool want_tangent)
{
    const auto& L = ctx.ops.layout;
    const int d = L.d;
    const TensorBasis tb(ctx.geo, L.k, mcfg.grad_space);
    const Vec Gu = ctx.ops.G * u_local;
    const Vec idvec = vec_rm(Mat::Identity(d, d));

    Vec rR = Vec::Zero(tb.size());
    Mat KR;
    if (want_tangent)
        KR = Mat::Zero(tb.size(), tb.size());

    for (int q = 0; q < ctx.bulk.num_points(); q++) {
        const Vec x = ctx.bulk.points.row(q).transpose();
        const Mat E = tb.eval_vec(x);
        const Mat F = unvec_rm(idvec + E * Gu, d);
        const MaterialResponse resp = evaluate_material(prob.law, F, prob.material);
        rR += ctx.bulk.weights(q) * (E.transpose() * vec_rm(resp.P));
        if (want_tangent)
            KR += ctx.bulk.weights(q) * (E.transpose() * resp.A * E);
    }

    LocalSystem sys;
    sys.r = ctx.ops.G.transpose() * rR - load_factor * ctx.load_unit;
    if (want_tangent)
        sys.K = ctx.ops.G.transpose() * KR * ctx.ops.G;

    if (mcfg.stabilized()) {
        const double beta = mcfg.beta0 * prob.material.mu;
        sys.r += beta * (ctx.ops.stab_gram * u_local);
        if (want_tangent)
            sys.K += beta * ctx.ops.stab_gram;
    }
    return sys;
}

/// Schur complement onto the face dofs.  rec_K and rec_r recover the cell
/// increment: du_T = -(rec_r + rec_K du_F).
struct CondensedSystem {
    Mat K_ff;
    Vec r_f;
    Mat rec_K;
    Vec rec_r;
};

inline CondensedSystem condense(const LocalSystem& sys, int ncell)
{
    const auto n = sys.r.size();
    const auto nf = n - ncell;

    const auto lu = sys.K.topLeftCorner(ncell, ncell).partialPivLu();
    CondensedSystem out;
    out.rec_K = lu.solve(sys.K.topRightCorner(ncell, nf));
    out.rec_r = lu.solve(sys.r.head(ncell));
    out.K_ff = sys.K.bottomRightCorner(nf, nf) -
               sys.K.bottomLeftCorner(nf, ncell) * out.rec_K;
    out.r_f = sys.r.tail(nf) - sys.K.bottomLeftCorner(nf, ncell) * out.rec_r;
    return out;
}

// ---------------------------------------------------------------------------
// global assembly and Newton
// ---------------------------------------------------------------------------

struct SolutionState {
    std::vector<Vec> cell_dofs;
    std::vector<Vec> face_dofs;
};

inline SolutionState make_zero_state(const Mesh& mesh, int k)
{
    SolutionState st;
    const int ncell = mesh.dim * poly_space_dim(k, mesh.dim);
    const int nface = mesh.dim * poly_space_dim(k, mesh.dim - 1);
    st.cell_dofs.assign(mesh.num_cells(), Vec::Zero(ncell));
    st.face_dofs.assign(mesh.num_faces(), Vec::Zero(nface));
    return st;
}

inline Vec gather_local(const Mesh& mesh, const SolutionState& state, int c)
{
    const auto& faces = mesh.cell_faces[c];
    const auto ncell = state.cell_dofs[c].size();
    const auto nface = state.face_dofs.empty() ? 0 : state.face_dofs[0].size();
    Vec u(ncell + static_cast<Eigen::Index>(faces.size()) * nface);
    u.head(ncell) = state.cell_dofs[c];
    for (std::size_t i = 0; i < faces.size(); i++)
        u.segment(ncell + static_cast<Eigen::Index>(i) * nface, nface) =
            state.face_dofs[faces[i]];
    return u;
}

struct AssembledSystem {
    Eigen::SparseMatrix<double> K;
    Vec residual;              // condensed residual on free face dofs
    double cell_residual_norm = 0.0;
    std::vector<CondensedSystem> cells; // recovery data, indexed by cell
};

/* Dirichlet data enters through the Newton update, not the state: when
 * dirichlet_gap is given (target minus current coefficients per constrained
 * face), the coupling columns of the condensed tangent push the gap into the
 * right hand side.  Overwriting the face coefficients directly instead would
 * hand the very first residual evaluation a discontinuous displacement whose
 * reconstructed gradient can reach det F <= 0 at finite loads. */
inline AssembledSystem assemble_global(const Mesh& mesh,
                                       const std::vector<CellContext>& ctxs,
                                       const DofMap& dofs,
                                       const ProblemDefinition& prob,
                                       const MethodConfig& mcfg,
                                       const SolutionState& state,
                                       double load_factor,
                                       const std::vector<Vec>* dirichlet_gap = nullptr,
                                       int nthreads = 1)
{
    AssembledSystem out;
    out.cells.resize(mesh.num_cells());
    std::vector<double> cell_res2(mesh.num_cells(), 0.0);

    parallel_for(mesh.num_cells(), nthreads, [&](int c) {
        const Vec u = gather_local(mesh, state, c);
        const LocalSystem sys =
            local_system(ctxs[c], mcfg, prob, u, load_factor, true);
        cell_res2[c] = sys.r.head(ctxs[c].ops.layout.ncell).squaredNorm();
        out.cells[c] = condense(sys, ctxs[c].ops.layout.ncell);
    });

    double cr2 = 0.0;
    for (double v : cell_res2)
        cr2 += v;
    out.cell_residual_norm = std::sqrt(cr2);

    const int nf = dofs.nface;
    out.residual = Vec::Zero(dofs.num_free);
    std::vector<Eigen::Triplet<double>> trips;

    for (int c = 0; c < mesh.num_cells(); c++) {
        const auto& faces = mesh.cell_faces[c];
        const auto& cond = out.cells[c];
        for (std::size_t i = 0; i < faces.size(); i++) {
            const int gi = dofs.face_offset[faces[i]];
            if (gi < 0)
                continue;
            out.residual.segment(gi, nf) +=
                cond.r_f.segment(static_cast<Eigen::Index>(i) * nf, nf);
            for (std::size_t j = 0; j < faces.size(); j++) {
                const int gj = dofs.face_offset[faces[j]];
                const auto jb = static_cast<Eigen::Index>(j) * nf;
                if (gj < 0) {
                    if (dirichlet_gap && (*dirichlet_gap)[faces[j]].size() > 0)
                        out.residual.segment(gi, nf) +=
                            cond.K_ff.block(static_cast<Eigen::Index>(i) * nf, jb,
                                            nf, nf) *
                            (*dirichlet_gap)[faces[j]];
                    continue;
                }
                for (int a = 0; a < nf; a++)
                    for (int b = 0; b < nf; b++)
                        trips.emplace_back(
                            gi + a, gj + b,
                            cond.K_ff(static_cast<Eigen::Index>(i) * nf + a, jb + b));
            }
        }
    }

    out.K.resize(dofs.num_free, dofs.num_free);
    out.K.setFromTriplets(trips.begin(), trips.end());
    return out;
}

inline Vec solve_linear(const Eigen::SparseMatrix<double>& K, const Vec& rhs)
{
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed "
                          "(singular or structurally deficient system)");
    const Vec x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU solve failed");
    return x;
}

struct LoadStepLog {
    double load_factor = 0.0;
    int iterations = 0;
    std::vector<double> residual_history; // condensed residual norms
    double tolerance = 0.0;
    int bisections = 0; // step halvings needed before this step succeeded
};

struct NewtonTrace {
    std::vector<LoadStepLog> steps;
    double final_load = 0.0;
    bool completed = false;

    int total_iterations() const
    {
        int n = 0;
        for (const auto& s : steps)
            n += s.iterations;
        return n;
    }
};

/// Incremental load driver: ramps Dirichlet data and loads linearly over
/// load_steps uniform increments, runs Newton with static condensation at
/// each target, and halves the increment (up to step_bisection_limit times)
/// when an iteration fails to converge or meets det F <= 0.  After a
/// successful step the increment grows back towards the nominal one.
inline NewtonTrace newton_solve(const Mesh& mesh,
                                const std::vector<CellContext>& ctxs,
                                const DofMap& dofs,
                                const ProblemDefinition& prob,
                                const MethodConfig& mcfg,
                                const NewtonConfig& ncfg, SolutionState& state,
                                int nthreads = 1)
{
    // unit-load Dirichlet coefficients per Dirichlet face
    std::vector<Vec> dirichlet_unit(mesh.num_faces());
    for (int c = 0; c < mesh.num_cells(); c++)
        for (std::size_t lf = 0; lf < mesh.cell_faces[c].size(); lf++) {
            const int f = mesh.cell_faces[c][lf];
            if (!dofs.is_dirichlet(f) || dirichlet_unit[f].size() > 0)
                continue;
            auto data = prob.dirichlet.find(mesh.face_tags[f]);
            if (data == prob.dirichlet.end() || !data->second)
                dirichlet_unit[f] = Vec::Zero(dofs.nface);
            else
                dirichlet_unit[f] =
                    project_face(ctxs[c].geo, static_cast<int>(lf), mcfg.degree,
                                 data->second, data_face_order(mcfg.degree));
        }

    auto newton_at = [&](double t, LoadStepLog& log) -> bool {
        std::vector<Vec> gap(mesh.num_faces());
        double gap2 = 0.0;
        for (int f = 0; f < mesh.num_faces(); f++)
            if (dofs.is_dirichlet(f)) {
                gap[f] = t * dirichlet_unit[f] - state.face_dofs[f];
                gap2 += gap[f].squaredNorm();
            }
        const double gap_tol = 1e-12 * (1.0 + std::sqrt(gap2));

        AssembledSystem sys;
        try {
            sys = assemble_global(mesh, ctxs, dofs, prob, mcfg, state, t, &gap,
                                  nthreads);
        } catch (const NonPositiveJacobian&) {
            return false;
        }

        const double r0 = sys.residual.norm();
        const double tol = std::max(ncfg.abs_tol, ncfg.rel_tol * r0);
        log.load_factor = t;
        log.tolerance = tol;
        log.residual_history = {r0};

        for (int it = 0;; it++) {
            if (sys.residual.norm() <= tol && sys.cell_residual_norm <= tol &&
                std::sqrt(gap2) <= gap_tol) {
                log.iterations = it;
                return true;
            }
            if (it >= ncfg.max_iterations)
                return false;

            const Vec dface = solve_linear(sys.K, Vec(-sys.residual));
            const double merit = sys.residual.norm() + sys.cell_residual_norm;

            /* Backtrack on admissibility and on residual growth.  A trial
             * state with det F <= 0 somewhere only means the full update
             * overshot, so shrink it rather than rejecting the whole load
             * increment.  Since the tangent is consistent, the Newton
             * direction shrinks every residual norm for small enough steps,
             * so demanding a decrease keeps the iteration from wandering
             * off when the tangent is indefinite (pre-stressed states,
             * strongly nonlinear regimes). */
            double alpha = ncfg.damping;
            bool accepted = false;
            for (int bt = 0; bt < 12 && !accepted; bt++, alpha *= 0.5) {
                SolutionState trial = state;
                for (int f = 0; f < mesh.num_faces(); f++) {
                    if (dofs.is_dirichlet(f))
                        trial.face_dofs[f] += alpha * gap[f];
                    else
                        trial.face_dofs[f] +=
                            alpha * dface.segment(dofs.face_offset[f], dofs.nface);
                }
                for (int c = 0; c < mesh.num_cells(); c++) {
                    const auto& faces = mesh.cell_faces[c];
                    Vec df = Vec::Zero(static_cast<Eigen::Index>(faces.size()) *
                                       dofs.nface);
                    for (std::size_t i = 0; i < faces.size(); i++) {
                        const int g = dofs.face_offset[faces[i]];
                        const auto ib = static_cast<Eigen::Index>(i) * dofs.nface;
                        if (g >= 0)
                            df.segment(ib, dofs.nface) = dface.segment(g, dofs.nface);
                        else
                            df.segment(ib, dofs.nface) = gap[faces[i]];
                    }
                    trial.cell_dofs[c] -=
                        alpha * (sys.cells[c].rec_r + sys.cells[c].rec_K * df);
                }

                std::vector<Vec> tgap(mesh.num_faces());
                double tgap2 = 0.0;
                for (int f = 0; f < mesh.num_faces(); f++)
                    if (dofs.is_dirichlet(f)) {
                        tgap[f] = t * dirichlet_unit[f] - trial.face_dofs[f];
                        tgap2 += tgap[f].squaredNorm();
                    }

                AssembledSystem tsys;
                try {
                    tsys = assemble_global(mesh, ctxs, dofs, prob, mcfg, trial,
                                           t, &tgap, nthreads);
                } catch (const NonPositiveJacobian&) {
                    continue;
                }
                const double tmerit =
                    tsys.residual.norm() + tsys.cell_residual_norm;
                if (tmerit > (1.0 - 1e-4 * alpha) * merit && tmerit > 0.5 * tol)
                    continue;
                sys = std::move(tsys);
                state = std::move(trial);
                gap = std::move(tgap);
                gap2 = tgap2;
                accepted = true;
            }
            if (!accepted)
                return false;
            log.residual_history.push_back(sys.residual.norm());
        }
    };

    NewtonTrace trace;
    const double dt0 = 1.0 / std::max(1, ncfg.load_steps);
    double t = 0.0;
    double dt = dt0;
    int bisections = 0;

    while (t < 1.0 - 1e-12) {
        if (ncfg.stop_after_steps > 0 &&
            static_cast<int>(trace.steps.size()) >= ncfg.stop_after_steps)
            break;

        const double t_try = std::min(t + dt, 1.0);
        const SolutionState saved = state;

        LoadStepLog log;
        log.bisections = bisections;
        if (newton_at(t_try, log)) {
            trace.steps.push_back(std::move(log));
            t = t_try;
            dt = std::min(2.0 * dt, dt0);
            bisections = 0;
        } else {
            state = saved;
            if (++bisections > ncfg.step_bisection_limit)
                throw SolverError(
                    "Newton failed to converge at load factor " +
                    std::to_string(t_try) + " after " +
                    std::to_string(ncfg.step_bisection_limit) + " bisections");
            dt *= 0.5;
        }
    }

    trace.final_load = t;
    trace.completed = t >= 1.0 - 1e-12 || ncfg.stop_after_steps > 0;
    return trace;
}

} // namespace hhodef
