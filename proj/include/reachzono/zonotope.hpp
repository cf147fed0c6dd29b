#ifndef REACHZONO_ZONOTOPE_HPP_
#define REACHZONO_ZONOTOPE_HPP_

/**
 * @file zonotope.hpp
 * @brief Zonotope value type and its basic algebra.
 *
 * A zonotope Z = (c | G) is the set { c + sum_i beta_i g_i : beta_i in [-1, 1] }.
 * Generators are stored as the columns of a dense D x n matrix, so an affine
 * map W x + b acts as (W c + b | W G).
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linprog.hpp"

namespace reachzono
{

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultMembershipTolerance = 1e-9;
/// Floor applied inside the logarithm of size_measure for zero-width dimensions.
inline constexpr double kSizeFloor = 1e-12;

class Zonotope
{
public:
    Zonotope() = default;

    /// Point zonotope (no generators).
    explicit Zonotope(Vector center) : Zonotope(center, Matrix(center.size(), 0)) {}

    Zonotope(Vector center, Matrix generators) : center_(std::move(center)), generators_(std::move(generators))
    {
        if (generators_.rows() != center_.size())
            throw DimensionError("zonotope: generators have length " + std::to_string(generators_.rows()) +
                                 ", center has length " + std::to_string(center_.size()));
        if (!center_.allFinite() || !generators_.allFinite())
            throw InvalidArgument("zonotope: entries must be finite");
    }

    const Vector& center() const { return center_; }
    /// Column i is generator g_i.
    const Matrix& generators() const { return generators_; }

    std::size_t dim() const { return static_cast<std::size_t>(center_.size()); }
    std::size_t num_generators() const { return static_cast<std::size_t>(generators_.cols()); }

    /// c + G beta.
    Vector point(const Vector& beta) const
    {
        if (beta.size() != generators_.cols())
            throw DimensionError("zonotope: coefficient vector has wrong length");
        Vector p = center_;
        for (Eigen::Index i = 0; i < generators_.cols(); ++i)
            p += beta[i] * generators_.col(i);
        return p;
    }

    /// delta g = sum_i |g_i|.
    Vector radius() const
    {
        if (generators_.cols() == 0)
            return Vector::Zero(center_.size());
        return generators_.cwiseAbs().rowwise().sum();
    }

    bool operator==(const Zonotope& other) const
    {
        return center_.size() == other.center_.size() && generators_.cols() == other.generators_.cols() &&
               center_ == other.center_ && generators_ == other.generators_;
    }

private:
    Vector center_;
    Matrix generators_;
};

struct IntervalHull
{
    Vector lower;
    Vector upper;

    std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
};

inline IntervalHull interval_hull(const Zonotope& z)
{
    const Vector r = z.radius();
    return {z.center() - r, z.center() + r};
}

/// Axis-aligned zonotope spanning [lower, upper] with one generator per dimension.
inline Zonotope box_zonotope(const Vector& lower, const Vector& upper)
{
    if (lower.size() != upper.size())
        throw DimensionError("box: bound vectors differ in length");
    const Vector half = 0.5 * (upper - lower);
    return Zonotope(lower + half, Matrix(half.asDiagonal()));
}

inline Zonotope linear_transform(const Zonotope& z, const Matrix& w, const Vector& b)
{
    if (static_cast<std::size_t>(w.cols()) != z.dim())
        throw DimensionError("linear_transform: weight matrix has " + std::to_string(w.cols()) +
                             " columns, zonotope has dimension " + std::to_string(z.dim()));
    if (b.size() != w.rows())
        throw DimensionError("linear_transform: bias length " + std::to_string(b.size()) +
                             " does not match " + std::to_string(w.rows()) + " output rows");
    return Zonotope(w * z.center() + b, w * z.generators());
}

/// Zero the center and every generator entry on the listed dimensions.
inline Zonotope project(const Zonotope& z, std::span<const std::size_t> dims)
{
    Vector c = z.center();
    Matrix g = z.generators();
    for (const auto d : dims)
    {
        if (d >= z.dim())
            throw DimensionError("project: dimension " + std::to_string(d) + " out of range for dimension " +
                                 std::to_string(z.dim()));
        c[static_cast<Eigen::Index>(d)] = 0.0;
        g.row(static_cast<Eigen::Index>(d)).setZero();
    }
    return Zonotope(std::move(c), std::move(g));
}

/**
 * Membership by LP feasibility: is there beta in [-1, 1]^n with
 * |c + G beta - p| <= tol in every coordinate?
 *
 * Throws SolverFailure if the LP cannot be decided.
 */
inline bool contains_point(const Zonotope& z, const Vector& p, double tol = kDefaultMembershipTolerance)
{
    if (static_cast<std::size_t>(p.size()) != z.dim())
        throw DimensionError("contains_point: point has length " + std::to_string(p.size()) +
                             ", zonotope has dimension " + std::to_string(z.dim()));
    if (!(tol >= 0.0))
        throw InvalidArgument("contains_point: tolerance must be nonnegative");

    const Vector offset = p - z.center();
    const Vector r = z.radius();
    // The interval hull is a superset; reject cheaply outside it.
    if (((offset.cwiseAbs() - r).array() > tol).any())
        return false;
    if (z.num_generators() == 0)
        return true;

    const auto d = static_cast<Eigen::Index>(z.dim());
    const auto n = static_cast<Eigen::Index>(z.num_generators());
    const double slack = 0.5 * tol;
    LinearProgram lp;
    lp.objective = Vector::Zero(n);
    lp.a.resize(2 * d, n);
    lp.a.topRows(d) = z.generators();
    lp.a.bottomRows(d) = -z.generators();
    lp.b.resize(2 * d);
    lp.b.head(d) = offset.array() + slack;
    lp.b.tail(d) = -offset.array() + slack;
    lp.lower = Vector::Constant(n, -1.0);
    lp.upper = Vector::Constant(n, 1.0);

    const auto outcome = solve(lp, 0.25 * tol);
    switch (outcome.status)
    {
    case LpStatus::Optimal: return true;
    case LpStatus::Infeasible: return false;
    default:
        throw SolverFailure(std::string("contains_point: LP returned ") + to_string(outcome.status));
    }
}

/// `count` points c + G beta with beta uniform on [-1, 1]^n.
inline std::vector<Vector> sample(const Zonotope& z, std::size_t count, std::uint64_t seed)
{
    if (count == 0)
        throw InvalidArgument("sample: count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vector> out;
    out.reserve(count);
    Vector beta(static_cast<Eigen::Index>(z.num_generators()));
    for (std::size_t k = 0; k < count; ++k)
    {
        for (Eigen::Index i = 0; i < beta.size(); ++i)
            beta[i] = unit(rng);
        out.push_back(z.point(beta));
    }
    return out;
}

/// sum_d log (delta g)_d, with zero widths floored at kSizeFloor.
inline double size_measure(const Zonotope& z)
{
    const Vector r = z.radius();
    double s = 0.0;
    for (Eigen::Index d = 0; d < r.size(); ++d)
        s += std::log(std::max(r[d], kSizeFloor));
    return s;
}

/// Geometric mean of the interval-hull side lengths, (prod_d 2 (delta g)_d)^(1/D).
inline double scaled_volume(const Zonotope& z)
{
    if (z.dim() == 0)
        return 0.0;
    const Vector r = z.radius();
    if ((r.array() <= 0.0).any())
        return 0.0;
    // Log domain; the plain product under/overflows for wide layers.
    double log_sum = 0.0;
    for (Eigen::Index d = 0; d < r.size(); ++d)
        log_sum += std::log(2.0 * r[d]);
    return std::exp(log_sum / static_cast<double>(r.size()));
}

/// Axis-aligned over-approximation of the union of `zs` via their interval hulls.
inline Zonotope merge_union(std::span<const Zonotope> zs)
{
    if (zs.empty())
        throw InvalidArgument("merge_union: empty zonotope list");
    const auto dim = zs.front().dim();
    auto hull = interval_hull(zs.front());
    for (const auto& z : zs.subspan(1))
    {
        if (z.dim() != dim)
            throw DimensionError("merge_union: zonotopes differ in dimension");
        const auto h = interval_hull(z);
        hull.lower = hull.lower.cwiseMin(h.lower);
        hull.upper = hull.upper.cwiseMax(h.upper);
    }
    return box_zonotope(hull.lower, hull.upper);
}

} // namespace reachzono

#endif
