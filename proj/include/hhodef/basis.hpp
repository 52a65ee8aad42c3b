#pragma once

#include <vector>

#include "mesh.hpp"
#include "types.hpp"

namespace hhodef {

/* Multi-indices of total degree <= degree in graded lexicographic order:
 * degree blocks are contiguous, so the monomials of exact degree m occupy
 * [poly_space_dim(m-1), poly_space_dim(m)).  That slicing is what the
 * homogeneous part of the RTN-type basis below relies on. */
inline std::vector<std::array<int, 3>> monomial_exponents(int nvars, int degree)
{
    std::vector<std::array<int, 3>> out;
    for (int total = 0; total <= degree; total++) {
        if (nvars == 1) {
            out.push_back({total, 0, 0});
        } else if (nvars == 2) {
            for (int a = total; a >= 0; a--)
                out.push_back({a, total - a, 0});
        } else {
            for (int a = total; a >= 0; a--)
                for (int b = total - a; b >= 0; b--)
                    out.push_back({a, b, total - a - b});
        }
    }
    return out;
}

/// Scaled translated monomials x -> prod_v xi_v^alpha_v with local coordinates
/// xi = frame * (X - origin) / scale, L2-orthonormalized on their cell or
/// face by the factories below.  The orthonormalizing transform is lower
/// triangular in the graded monomial order, so the first dim P^m functions
/// still span P^m for every m <= degree; the degree-block slicing that the
/// tensor-valued basis relies on survives the change of basis.  On faces the
/// frame is the orthonormal tangential basis obtained by Gram-Schmidt on the
/// edge vectors from the lowest-index vertex, which is deterministic, so both
/// cells sharing a face agree on the face polynomials.
class ScalarBasis {
public:
    ScalarBasis(int nvars, Vec origin, Mat frame, double scale, int degree)
        : nvars_(nvars), degree_(degree), origin_(std::move(origin)),
          frame_(std::move(frame)), scale_(scale),
          exps_(monomial_exponents(nvars, degree))
    {
    }

    static ScalarBasis on_cell(const CellGeometry& geo, int degree)
    {
        ScalarBasis basis(geo.dim, geo.barycenter,
                          Mat::Identity(geo.dim, geo.dim), 0.5 * geo.diameter,
                          degree);
        basis.orthonormalize(cell_rule(geo, 2 * degree));
        return basis;
    }

    static ScalarBasis on_face(const FaceGeometry& fg, int ambient_dim, int degree)
    {
        const int nvars = ambient_dim - 1;
        Mat frame(nvars, ambient_dim);
        Vec t1 = (fg.vertices.row(1) - fg.vertices.row(0)).transpose();
        t1.normalize();
        frame.row(0) = t1.transpose();
        if (nvars == 2) {
            Vec t2 = (fg.vertices.row(2) - fg.vertices.row(0)).transpose();
            t2 -= t2.dot(t1) * t1;
            t2.normalize();
            frame.row(1) = t2.transpose();
        }
        ScalarBasis basis(nvars, fg.barycenter, frame, 0.5 * fg.diameter,
                          degree);
        basis.orthonormalize(map_rule(simplex_rule(nvars, 2 * degree),
                                      fg.vertices));
        return basis;
    }

    int size() const { return static_cast<int>(exps_.size()); }
    int degree() const { return degree_; }
    int nvars() const { return nvars_; }
    int ambient_dim() const { return static_cast<int>(frame_.cols()); }
    const std::vector<std::array<int, 3>>& exponents() const { return exps_; }

    Vec local_coords(const Vec& X) const
    {
        return frame_ * (X - origin_) / scale_;
    }

    Vec eval(const Vec& X) const
    {
        const Vec xi = local_coords(X);
        Vec vals(size());
        for (int i = 0; i < size(); i++) {
            double v = 1.0;
            for (int c = 0; c < nvars_; c++)
                for (int p = 0; p < exps_[i][c]; p++)
                    v *= xi(c);
            vals(i) = v;
        }
        return ortho_.size() > 0 ? Vec(ortho_ * vals) : vals;
    }

    /* Gradients with respect to the ambient coordinates, size() x ambient_dim. */
    Mat gradients(const Vec& X) const
    {
        const Vec xi = local_coords(X);
        Mat grads = Mat::Zero(size(), ambient_dim());
        for (int i = 0; i < size(); i++) {
            for (int c = 0; c < nvars_; c++) {
                if (exps_[i][c] == 0)
                    continue;
                double v = exps_[i][c];
                for (int cc = 0; cc < nvars_; cc++) {
                    const int p = exps_[i][cc] - (cc == c ? 1 : 0);
                    for (int q = 0; q < p; q++)
                        v *= xi(cc);
                }
                grads.row(i) += (v / scale_) * frame_.row(c);
            }
        }
        return ortho_.size() > 0 ? Mat(ortho_ * grads) : grads;
    }

private:
    /* Replace the monomials by combinations with unit Gram matrix.  Two
     * Cholesky passes: the second starts from a nearly orthonormal set, so
     * the result is orthonormal to machine precision even when the monomial
     * Gram matrix is badly conditioned (degree 3 on a thin cell reaches
     * condition numbers ~1e6, which a single pass would inherit as ~1e-10
     * errors in every projection downstream). */
    void orthonormalize(const QuadratureRule& rule)
    {
        for (int pass = 0; pass < 2; pass++) {
            Mat M = Mat::Zero(size(), size());
            for (int q = 0; q < rule.num_points(); q++) {
                const Vec v = eval(rule.points.row(q).transpose());
                M.selfadjointView<Eigen::Lower>().rankUpdate(v, rule.weights(q));
            }
            const Mat L = Mat(M.selfadjointView<Eigen::Lower>()).llt().matrixL();
            const Mat T = L.triangularView<Eigen::Lower>().solve(
                Mat::Identity(size(), size()));
            ortho_ = ortho_.size() > 0 ? Mat(T * ortho_) : T;
        }
    }

    int nvars_;
    int degree_;
    Vec origin_;
    Mat frame_; // nvars x ambient_dim, orthonormal rows
    double scale_;
    std::vector<std::array<int, 3>> exps_;
    Mat ortho_; // lower triangular; empty means raw monomials
};

// ---------------------------------------------------------------------------
// moment matrices
// ---------------------------------------------------------------------------

/* Sum_q w_q a(x_q) b(x_q)^T */
inline Mat gram(const ScalarBasis& a, const ScalarBasis& b, const QuadratureRule& rule)
{
    Mat M = Mat::Zero(a.size(), b.size());
    for (int q = 0; q < rule.num_points(); q++) {
        const Vec x = rule.points.row(q).transpose();
        M += rule.weights(q) * a.eval(x) * b.eval(x).transpose();
    }
    return M;
}

/* Sum_q w_q grad(a)(x_q) . grad(b)(x_q)^T */
inline Mat stiffness(const ScalarBasis& a, const QuadratureRule& rule)
{
    Mat K = Mat::Zero(a.size(), a.size());
    for (int q = 0; q < rule.num_points(); q++) {
        const Mat G = a.gradients(rule.points.row(q).transpose());
        K += rule.weights(q) * G * G.transpose();
    }
    return K;
}

/* Expand a scalar moment matrix to the vector-valued basis with interleaved
 * components (function index s*d + c <-> scalar s, component c):
 * kron(A, I_d). */
inline Mat kron_id(const Mat& A, int d)
{
    Mat M = Mat::Zero(A.rows() * d, A.cols() * d);
    for (Eigen::Index i = 0; i < A.rows(); i++)
        for (Eigen::Index j = 0; j < A.cols(); j++)
            for (int c = 0; c < d; c++)
                M(i * d + c, j * d + c) = A(i, j);
    return M;
}

// ---------------------------------------------------------------------------
// tensor-valued bases for the gradient reconstruction
// ---------------------------------------------------------------------------

enum class GradSpace {
    Pk,   // P^k(T; R^{dxd})
    Pkp1, // P^{k+1}(T; R^{dxd})
    Rtn   // P^k(T; R^{dxd}) + (homogeneous P^k scalars) * xi^T, row by row
};

/// Matrix-valued basis on a cell.  Functions are indexed entry-major on top
/// of the scalar basis: index s*d^2 + i*d + j is the scalar monomial s placed
/// at entry (i,j).  The Rtn space appends, for every homogeneous scalar h of
/// exact degree k and every row r, the matrix e_r (h(xi) xi)^T.  Centered and
/// scaled coordinates span the same space as physical ones since the space is
/// invariant under translation and isotropic scaling; they behave much better
/// in the Gram matrices.  The normal trace of every member lies in
/// P^k(F; R^d) on each hyperplane, which is what makes the strong commuting
/// identity of the reconstruction hold for this choice.
class TensorBasis {
public:
    TensorBasis(const CellGeometry& geo, int k, GradSpace space)
        : space_(space), d_(geo.dim), k_(k),
          scalars_(ScalarBasis::on_cell(geo, space == GradSpace::Pk ? k : k + 1))
    {
        if (space == GradSpace::Rtn) {
            n_poly_ = poly_space_dim(k, d_);
            n_hom_ = homogeneous_dim(k, d_);
        } else {
            n_poly_ = scalars_.size();
            n_hom_ = 0;
        }
    }

    int size() const { return n_poly_ * d_ * d_ + n_hom_ * d_; }
    int dim() const { return d_; }
    GradSpace space() const { return space_; }
    const ScalarBasis& scalars() const { return scalars_; }

    /* Degree bound of the space (k for Pk, else k+1). */
    int poly_degree() const { return space_ == GradSpace::Pk ? k_ : k_ + 1; }

    /* d^2 x size; column i holds vec_rm of the i-th matrix at X. */
    Mat eval_vec(const Vec& X) const
    {
        const Vec sv = scalars_.eval(X);
        Mat E = Mat::Zero(d_ * d_, size());
        for (int s = 0; s < n_poly_; s++)
            for (int e = 0; e < d_ * d_; e++)
                E(e, s * d_ * d_ + e) = sv(s);
        if (n_hom_ > 0) {
            const Vec xi = scalars_.local_coords(X);
            const int h0 = poly_space_dim(k_ - 1, d_);
            for (int h = 0; h < n_hom_; h++)
                for (int r = 0; r < d_; r++)
                    for (int j = 0; j < d_; j++)
                        E(r * d_ + j, n_poly_ * d_ * d_ + h * d_ + r) =
                            sv(h0 + h) * xi(j);
        }
        return E;
    }

    /* d x size; column i holds tau_i(X) * n. */
    Mat normal_traces(const Vec& X, const Vec& n) const
    {
        const Vec sv = scalars_.eval(X);
        Mat N = Mat::Zero(d_, size());
        for (int s = 0; s < n_poly_; s++)
            for (int i = 0; i < d_; i++)
                for (int j = 0; j < d_; j++)
                    N(i, s * d_ * d_ + i * d_ + j) = sv(s) * n(j);
        if (n_hom_ > 0) {
            const Vec xi = scalars_.local_coords(X);
            const double xin = xi.dot(n);
            const int h0 = poly_space_dim(k_ - 1, d_);
            for (int h = 0; h < n_hom_; h++)
                for (int r = 0; r < d_; r++)
                    N(r, n_poly_ * d_ * d_ + h * d_ + r) = sv(h0 + h) * xin;
        }
        return N;
    }

private:
    GradSpace space_;
    int d_;
    int k_;
    ScalarBasis scalars_;
    int n_poly_;
    int n_hom_;
};

/// Gram matrix of a tensor basis.  The full polynomial spaces expand the
/// scalar Gram; the Rtn space is assembled by quadrature.
inline Mat mass_matrix(const TensorBasis& basis, const QuadratureRule& rule)
{
    if (basis.space() != GradSpace::Rtn) {
        ScalarBasis s = basis.scalars();
        return kron_id(gram(s, s, rule), basis.dim() * basis.dim());
    }
    Mat M = Mat::Zero(basis.size(), basis.size());
    for (int q = 0; q < rule.num_points(); q++) {
        const Mat E = basis.eval_vec(rule.points.row(q).transpose());
        M.selfadjointView<Eigen::Lower>().rankUpdate(E.transpose(), rule.weights(q));
    }
    return Mat(M.selfadjointView<Eigen::Lower>());
}

} // namespace hhodef
