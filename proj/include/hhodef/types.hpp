#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hhodef {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/* Thrown when a deformation gradient with det(F) <= 0 is encountered at a
 * quadrature point.  The Newton driver catches it and bisects the load step,
 * so it must stay recoverable (no assert). */
class NonPositiveJacobian : public std::runtime_error {
public:
    explicit NonPositiveJacobian(const std::string& what)
        : std::runtime_error(what) {}
};

class MeshError : public std::runtime_error {
public:
    explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

inline std::int64_t binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    std::int64_t r = 1;
    for (int i = 0; i < k; i++)
        r = r * (n - i) / (i + 1);
    return r;
}

/* dim P^k(R^d) */
inline int poly_space_dim(int degree, int dim)
{
    return static_cast<int>(binomial(degree + dim, dim));
}

/* dim of homogeneous polynomials of exact degree k in d variables */
inline int homogeneous_dim(int degree, int dim)
{
    return static_cast<int>(binomial(degree + dim - 1, dim - 1));
}

/* Row-major vectorization of a d x d matrix: index i*d + j <-> entry (i,j).
 * Fourth-order tensors A_{ijkl} are stored as d^2 x d^2 matrices with the
 * same pairing, so (A : M) = unvec(A_mat * vec(M)). */
inline Vec vec_rm(const Mat& M)
{
    const auto d = M.rows();
    Vec v(d * d);
    for (Eigen::Index i = 0; i < d; i++)
        for (Eigen::Index j = 0; j < d; j++)
            v(i * d + j) = M(i, j);
    return v;
}

inline Mat unvec_rm(const Vec& v, int d)
{
    Mat M(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++)
            M(i, j) = v(i * d + j);
    return M;
}

} // namespace hhodef
