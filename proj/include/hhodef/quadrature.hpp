#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "types.hpp"

namespace hhodef {

/* Quadrature nodes and weights.  For reference rules the points live on the
 * unit simplex {x >= 0, sum(x) <= 1} and the weights sum to its measure
 * 1/dim!.  map_rule() produces rules in physical coordinates. */
struct QuadratureRule {
    Mat points;  // npts x dim
    Vec weights; // npts

    int num_points() const { return static_cast<int>(weights.size()); }
};

namespace detail {

/* Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n, then mapped to
 * [0,1].  n points integrate degree 2n-1 exactly. */
inline QuadratureRule gauss_legendre_unit(int npts)
{
    Mat pts(npts, 1);
    Vec wts(npts);
    for (int i = 0; i < npts; i++) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (npts + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; it++) {
            double p0 = 1.0, p1 = x;
            if (npts == 1) { p1 = x; }
            for (int n = 2; n <= npts; n++) {
                const double p2 = ((2 * n - 1) * x * p1 - (n - 1) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = npts * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15)
                break;
        }
        pts(i, 0) = 0.5 * (1.0 + x);
        wts(i) = 1.0 / ((1.0 - x * x) * dp * dp); // 2/((1-x^2)P'^2) scaled by 1/2
    }
    return {pts, wts};
}

inline void enumerate_compositions(int total, int parts, std::vector<int>& cur,
                                   std::vector<std::vector<int>>& out)
{
    if (parts == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int v = total; v >= 0; v--) {
        cur.push_back(v);
        enumerate_compositions(total - v, parts - 1, cur, out);
        cur.pop_back();
    }
}

/* Grundmann-Moller simplex rule of index s (exact for degree 2s+1) on the
 * unit simplex in dimension dim.  Fully symmetric; weights alternate in sign,
 * which is harmless for the polynomial integrands used here. */
inline QuadratureRule grundmann_moller(int dim, int index)
{
    const int s = index;
    const int deg = 2 * s + 1;

    std::vector<Vec> pts;
    std::vector<double> wts;
    for (int i = 0; i <= s; i++) {
        // weight via logs to keep intermediates tame
        const double num = std::pow(static_cast<double>(deg + dim - 2 * i),
                                    static_cast<double>(deg));
        double denom = std::pow(2.0, 2.0 * s);
        for (int j = 2; j <= i; j++)
            denom *= j;
        for (int j = 2; j <= deg + dim - i; j++)
            denom *= j;
        const double w = ((i % 2) ? -1.0 : 1.0) * num / denom;

        std::vector<std::vector<int>> betas;
        std::vector<int> scratch;
        enumerate_compositions(s - i, dim + 1, scratch, betas);
        for (const auto& beta : betas) {
            Vec p(dim);
            for (int c = 0; c < dim; c++)
                p(c) = static_cast<double>(2 * beta[c + 1] + 1) /
                       static_cast<double>(deg + dim - 2 * i);
            pts.push_back(p);
            wts.push_back(w);
        }
    }

    QuadratureRule rule;
    rule.points.resize(static_cast<Eigen::Index>(pts.size()), dim);
    rule.weights.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t q = 0; q < pts.size(); q++) {
        rule.points.row(static_cast<Eigen::Index>(q)) = pts[q].transpose();
        rule.weights(static_cast<Eigen::Index>(q)) = wts[q];
    }
    return rule;
}

} // namespace detail

inline constexpr int max_quadrature_order = 10;

/* Reference rule on the unit simplex of the given dimension, exact for
 * polynomials up to `order`. */
inline QuadratureRule simplex_rule(int dim, int order)
{
    if (order < 0 || order > max_quadrature_order)
        throw std::invalid_argument("simplex_rule: unsupported exactness order " +
                                    std::to_string(order));
    if (dim == 1) {
        const int npts = order / 2 + 1; // 2n-1 >= order
        return detail::gauss_legendre_unit(npts);
    }
    if (dim == 2 || dim == 3)
        return detail::grundmann_moller(dim, order / 2);
    throw std::invalid_argument("simplex_rule: unsupported dimension " +
                                std::to_string(dim));
}

/* Push a reference rule to the simplex spanned by `vertices` (one vertex per
 * row, dim+1 rows).  Works for faces embedded in a higher-dimensional space:
 * the weight scale is then the Gram determinant of the affine map. */
inline QuadratureRule map_rule(const QuadratureRule& ref, const Mat& vertices)
{
    const int dim = static_cast<int>(ref.points.cols());
    const int sdim = static_cast<int>(vertices.cols());
    if (vertices.rows() != dim + 1)
        throw std::invalid_argument("map_rule: vertex count does not match rule dimension");

    Mat B(sdim, dim);
    for (int j = 0; j < dim; j++)
        B.col(j) = (vertices.row(j + 1) - vertices.row(0)).transpose();

    double scale;
    if (dim == sdim) {
        scale = std::abs(B.determinant());
    } else {
        scale = std::sqrt((B.transpose() * B).determinant());
    }

    QuadratureRule out;
    out.points.resize(ref.points.rows(), sdim);
    out.weights = ref.weights * scale;
    for (Eigen::Index q = 0; q < ref.points.rows(); q++)
        out.points.row(q) = vertices.row(0) +
                            (B * ref.points.row(q).transpose()).transpose();
    return out;
}

} // namespace hhodef
