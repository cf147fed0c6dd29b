#ifndef REACHZONO_RELU_REACH_HPP_
#define REACHZONO_RELU_REACH_HPP_

/**
 * @file relu_reach.hpp
 * @brief Over- and under-approximation of ReLU(Z) by sets of zonotopes, and
 *        layer-by-layer propagation of zonotope sets through a network.
 *
 * For one zonotope Z the dimensions split into three groups through the
 * interval hull: negative (mapped to zero, projected away exactly), positive
 * (identity) and crossing. Every subset R_k of the crossing dimensions names a
 * quadrant S_k of Z (nonpositive on R_k, nonnegative elsewhere). Each S_k is
 * approximated by a zonotope whose generators are scaled copies of those of Z:
 *
 *  - over:  closed-form scaling factors alpha_j with a shifted center, so that
 *           S_k is contained in the result;
 *  - under: a linear program maximizing sum_i alpha_i subject to the result
 *           lying inside Z and inside the quadrant.
 *
 * The approximation is then projected to zero on R_k, which is exact for ReLU.
 *
 * Quadrants are enumerated by binary counting over the ascending list of
 * crossing dimensions: bit i set means the i-th crossing dimension is in R_k.
 * Code 0 is the all-nonnegative quadrant.
 */

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linprog.hpp"
#include "network.hpp"
#include "zonotope.hpp"

namespace reachzono
{

enum class Direction
{
    Over,
    Under
};

inline const char* to_string(Direction d) { return d == Direction::Over ? "over" : "under"; }

struct DimClassification
{
    std::vector<std::size_t> negative;
    std::vector<std::size_t> positive;
    /// Ascending.
    std::vector<std::size_t> crossing;
};

/// upper <= 0 goes to negative first, then lower >= 0 to positive, the rest crosses.
inline DimClassification classify_dims(const Zonotope& z)
{
    const auto hull = interval_hull(z);
    DimClassification out;
    for (std::size_t d = 0; d < z.dim(); ++d)
    {
        const auto i = static_cast<Eigen::Index>(d);
        if (hull.upper[i] <= 0.0)
            out.negative.push_back(d);
        else if (hull.lower[i] >= 0.0)
            out.positive.push_back(d);
        else
            out.crossing.push_back(d);
    }
    return out;
}

inline constexpr std::int64_t kSaturatedQuadrants = std::numeric_limits<std::int64_t>::max();

inline std::int64_t quadrant_count_for(std::size_t crossing)
{
    if (crossing > 62)
        return kSaturatedQuadrants;
    return std::int64_t{1} << crossing;
}

/// 2^|crossing dims|, saturating at kSaturatedQuadrants above 2^62.
inline std::int64_t count_quadrants(const Zonotope& z) { return quadrant_count_for(classify_dims(z).crossing.size()); }

/// A quadrant R_k: the crossing dimensions constrained nonpositive.
struct Quadrant
{
    std::uint64_t code = 0;
    std::vector<std::size_t> nonpositive;
};

inline Quadrant make_quadrant(std::span<const std::size_t> crossing, std::uint64_t code)
{
    Quadrant q{code, {}};
    for (std::size_t i = 0; i < crossing.size() && i < 64; ++i)
        if ((code >> i) & 1U)
            q.nonpositive.push_back(crossing[i]);
    return q;
}

namespace detail
{

inline std::vector<char> dim_mask(std::size_t dim, std::span<const std::size_t> dims)
{
    std::vector<char> mask(dim, 0);
    for (const auto d : dims)
    {
        if (d >= dim)
            throw DimensionError("quadrant: dimension " + std::to_string(d) + " out of range");
        mask[d] = 1;
    }
    return mask;
}

} // namespace detail

/// Per-generator quantities of the over-approximation of one quadrant.
struct OverapproxTerms
{
    /// alpha_j in [0, 1].
    Vector alpha;
    /// o_j = sign(g_{j,d*}), +1 for a zero entry.
    std::vector<int> orientation;
    /// s_j = +1 if d* is outside R_k, -1 otherwise.
    std::vector<int> side;
    /// d*, the dimension attaining alpha_j.
    std::vector<std::size_t> limiting_dim;
};

inline OverapproxTerms overapprox_terms(const Zonotope& z, const Quadrant& q)
{
    const auto mask = detail::dim_mask(z.dim(), q.nonpositive);
    const auto& g = z.generators();
    const auto& c = z.center();
    const Vector r = z.radius();
    const auto n = g.cols();
    const auto dim = g.rows();

    OverapproxTerms t{Vector::Ones(n), std::vector<int>(n, 1), std::vector<int>(n, 1),
                      std::vector<std::size_t>(n, 0)};
    for (Eigen::Index j = 0; j < n; ++j)
    {
        double best = kInfinity;
        Eigen::Index best_d = 0;
        for (Eigen::Index d = 0; d < dim; ++d)
        {
            const double a = std::abs(g(d, j));
            double alpha = 1.0;
            if (a > 0.0)
            {
                if (!mask[static_cast<std::size_t>(d)])
                {
                    const double tp = c[d] - 2.0 * a + r[d];
                    if (tp < 0.0)
                        alpha = 1.0 - std::abs(tp) / (2.0 * a);
                }
                else
                {
                    const double tm = c[d] + 2.0 * a - r[d];
                    if (tm > 0.0)
                        alpha = 1.0 - std::abs(tm) / (2.0 * a);
                }
            }
            alpha = std::clamp(alpha, 0.0, 1.0);
            if (alpha < best)
            {
                best = alpha;
                best_d = d;
            }
        }
        if (dim == 0)
            best = 1.0;
        t.alpha[j] = best;
        t.limiting_dim[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best_d);
        t.orientation[static_cast<std::size_t>(j)] = dim > 0 && g(best_d, j) < 0.0 ? -1 : 1;
        t.side[static_cast<std::size_t>(j)] = dim > 0 && mask[static_cast<std::size_t>(best_d)] ? -1 : 1;
    }
    return t;
}

/**
 * Zonotope containing the quadrant subset S_k of `z`: g_j scaled by alpha_j,
 * center shifted by s_j (1 - alpha_j) o_j g_j. Generators with alpha_j = 0
 * are dropped. `z` is expected to be projected on its negative dimensions.
 */
inline Zonotope overapprox_quadrant(const Zonotope& z, const Quadrant& q)
{
    const auto t = overapprox_terms(z, q);
    const auto& g = z.generators();
    Vector center = z.center();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < g.cols(); ++j)
    {
        const auto ju = static_cast<std::size_t>(j);
        const double shrink = 1.0 - t.alpha[j];
        if (shrink > 0.0)
            center += (t.side[ju] * shrink * t.orientation[ju]) * g.col(j);
        if (t.alpha[j] > 0.0)
            kept.push_back(j);
    }
    Matrix gens(g.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k)
        gens.col(static_cast<Eigen::Index>(k)) = t.alpha[kept[k]] * g.col(kept[k]);
    return Zonotope(std::move(center), std::move(gens));
}

/**
 * LP over x = [alpha | delta] maximizing sum alpha_i subject to
 * |delta_i| <= 1 - alpha_i and the sign pattern of the quadrant holding on
 * all of (c + G delta | G diag(alpha)). Dimensions that are identically zero
 * contribute no row.
 */
inline LinearProgram underapprox_program(const Zonotope& z, const Quadrant& q)
{
    const auto mask = detail::dim_mask(z.dim(), q.nonpositive);
    const auto& g = z.generators();
    const auto& c = z.center();
    const auto n = g.cols();
    const auto dim = g.rows();

    std::vector<Eigen::Index> sign_rows;
    for (Eigen::Index d = 0; d < dim; ++d)
        if (c[d] != 0.0 || !g.row(d).isZero(0.0))
            sign_rows.push_back(d);

    // x = [alpha (n) | delta (n)]
    LinearProgram lp;
    lp.objective = Vector::Zero(2 * n);
    lp.objective.head(n).setOnes();
    lp.lower.resize(2 * n);
    lp.upper.resize(2 * n);
    lp.lower.head(n).setZero();
    lp.upper.head(n).setOnes();
    lp.lower.tail(n).setConstant(-1.0);
    lp.upper.tail(n).setConstant(1.0);

    const auto rows = 2 * n + static_cast<Eigen::Index>(sign_rows.size());
    lp.a = Matrix::Zero(rows, 2 * n);
    lp.b = Vector::Zero(rows);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        lp.a(2 * i, i) = 1.0;
        lp.a(2 * i, n + i) = 1.0;
        lp.b[2 * i] = 1.0;
        lp.a(2 * i + 1, i) = 1.0;
        lp.a(2 * i + 1, n + i) = -1.0;
        lp.b[2 * i + 1] = 1.0;
    }
    for (std::size_t k = 0; k < sign_rows.size(); ++k)
    {
        const auto d = sign_rows[k];
        const auto row = 2 * n + static_cast<Eigen::Index>(k);
        if (!mask[static_cast<std::size_t>(d)])
        {
            // c_d + G_d delta - |G_d| alpha >= 0
            lp.a.row(row).head(n) = g.row(d).cwiseAbs();
            lp.a.row(row).tail(n) = -g.row(d);
            lp.b[row] = c[d];
        }
        else
        {
            // c_d + G_d delta + |G_d| alpha <= 0
            lp.a.row(row).head(n) = g.row(d).cwiseAbs();
            lp.a.row(row).tail(n) = g.row(d);
            lp.b[row] = -c[d];
        }
    }

    return lp;
}

/**
 * Largest (by sum of scaling factors) zonotope (c + G delta | G diag(alpha))
 * inside both `z` and the quadrant. Variables are alpha_i in [0, 1] and
 * delta_i with |delta_i| <= 1 - alpha_i.
 *
 * Returns nullopt when the quadrant holds no point of `z`, and also when the
 * solver fails: dropping a quadrant keeps an under-approximation sound.
 */
inline std::optional<Zonotope> underapprox_quadrant(const Zonotope& z, const Quadrant& q,
                                                    double lp_tol = kDefaultLpTolerance)
{
    const auto outcome = solve(underapprox_program(z, q), lp_tol);
    if (outcome.status != LpStatus::Optimal)
        return std::nullopt;

    const auto& g = z.generators();
    const auto n = g.cols();
    const Vector& x = *outcome.solution;
    Vector center = z.center();
    Matrix gens(g.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double alpha = std::clamp(x[i], 0.0, 1.0);
        const double room = 1.0 - alpha;
        const double delta = std::clamp(x[n + i], -room, room);
        center += delta * g.col(i);
        gens.col(i) = alpha * g.col(i);
    }
    return Zonotope(std::move(center), std::move(gens));
}

/// One step of a zonotope's derivation.
struct Provenance
{
    enum class Kind : unsigned char
    {
        Quadrant,
        Hull,
        Merged
    };

    std::size_t parent = 0;
    std::uint64_t quadrant = 0;
    Kind kind = Kind::Quadrant;

    bool operator==(const Provenance&) const = default;
};

struct ReachSet
{
    Direction direction = Direction::Over;
    std::vector<Zonotope> zonotopes;
    /// trails[i] lists, layer by layer, how zonotopes[i] was derived.
    std::vector<std::vector<Provenance>> trails;

    std::size_t size() const { return zonotopes.size(); }
    bool empty() const { return zonotopes.empty(); }

    void push(Zonotope z, std::vector<Provenance> trail)
    {
        zonotopes.push_back(std::move(z));
        trails.push_back(std::move(trail));
    }
};

struct Budget
{
    /// A: cap on zonotopes approximating ReLU of one zonotope. nullopt = unlimited.
    std::optional<std::size_t> max_amp;
    /// B: cap on zonotopes per layer. nullopt = unlimited.
    std::optional<std::size_t> max_zono;

    static Budget unlimited() { return {}; }

    void validate() const
    {
        if ((max_amp && *max_amp < 1) || (max_zono && *max_zono < 1))
            throw InvalidArgument("budget: max-amp and max-zono must be at least 1");
    }
};

inline constexpr std::size_t kDefaultZonotopeCeiling = 1'000'000;

struct PropagationOptions
{
    /// Hard cap on the zonotopes held for one layer; exceeding it raises ResourceError.
    std::size_t zonotope_ceiling = kDefaultZonotopeCeiling;
    double lp_tol = kDefaultLpTolerance;
};

namespace detail
{

inline std::vector<Provenance> single_step(std::uint64_t code, Provenance::Kind kind)
{
    return {Provenance{0, code, kind}};
}

inline Zonotope positive_hull(const Zonotope& z)
{
    const auto h = interval_hull(z);
    return box_zonotope(h.lower.cwiseMax(0.0), h.upper.cwiseMax(0.0));
}

} // namespace detail

/**
 * Over-approximate ReLU(z). With more than `max_amp` quadrants the result is
 * the single interval hull of z restricted to the nonnegative orthant.
 */
inline ReachSet rso_relu(const Zonotope& z, std::optional<std::size_t> max_amp = std::nullopt,
                         const PropagationOptions& options = {})
{
    ReachSet out{Direction::Over, {}, {}};
    const auto cls = classify_dims(z);
    const Zonotope zp = project(z, cls.negative);
    if (cls.crossing.empty())
    {
        out.push(zp, detail::single_step(0, Provenance::Kind::Quadrant));
        return out;
    }

    const auto q = quadrant_count_for(cls.crossing.size());
    if (max_amp && q > static_cast<std::int64_t>(*max_amp))
    {
        out.push(detail::positive_hull(zp), detail::single_step(0, Provenance::Kind::Hull));
        return out;
    }
    if (q > static_cast<std::int64_t>(options.zonotope_ceiling))
        throw ResourceError("rso_relu: " + std::to_string(cls.crossing.size()) +
                            " crossing dimensions exceed the zonotope ceiling of " +
                            std::to_string(options.zonotope_ceiling));

    for (std::uint64_t code = 0; code < static_cast<std::uint64_t>(q); ++code)
    {
        const auto quad = make_quadrant(cls.crossing, code);
        out.push(project(overapprox_quadrant(zp, quad), quad.nonpositive),
                 detail::single_step(code, Provenance::Kind::Quadrant));
    }
    return out;
}

/**
 * Under-approximate ReLU(z). Quadrants are visited in enumeration order and
 * collection stops once `max_amp` zonotopes are found.
 */
inline ReachSet rsu_relu(const Zonotope& z, std::optional<std::size_t> max_amp = std::nullopt,
                         const PropagationOptions& options = {})
{
    ReachSet out{Direction::Under, {}, {}};
    const auto cls = classify_dims(z);
    const Zonotope zp = project(z, cls.negative);
    if (cls.crossing.empty())
    {
        out.push(zp, detail::single_step(0, Provenance::Kind::Quadrant));
        return out;
    }

    const auto q = quadrant_count_for(cls.crossing.size());
    auto visits = static_cast<std::uint64_t>(q);
    if (q > static_cast<std::int64_t>(options.zonotope_ceiling))
    {
        if (!max_amp)
            throw ResourceError("rsu_relu: " + std::to_string(cls.crossing.size()) +
                                " crossing dimensions exceed the zonotope ceiling of " +
                                std::to_string(options.zonotope_ceiling));
        // Stopping early only drops quadrants, which stays an under-approximation.
        visits = options.zonotope_ceiling;
    }

    for (std::uint64_t code = 0; code < visits; ++code)
    {
        const auto quad = make_quadrant(cls.crossing, code);
        auto under = underapprox_quadrant(zp, quad, options.lp_tol);
        if (!under)
            continue;
        out.push(project(*under, quad.nonpositive), detail::single_step(code, Provenance::Kind::Quadrant));
        if (max_amp && out.size() >= *max_amp)
            break;
    }
    return out;
}

namespace detail
{

inline void dedupe_points(ReachSet& rs)
{
    ReachSet out{rs.direction, {}, {}};
    for (std::size_t i = 0; i < rs.size(); ++i)
    {
        const auto& z = rs.zonotopes[i];
        if (z.generators().isZero(0.0))
        {
            const bool seen = std::any_of(out.zonotopes.begin(), out.zonotopes.end(), [&](const Zonotope& o) {
                return o.generators().isZero(0.0) && o.center() == z.center();
            });
            if (seen)
                continue;
        }
        out.push(std::move(rs.zonotopes[i]), std::move(rs.trails[i]));
    }
    rs = std::move(out);
}

/// Over: keep the B-1 largest and append the union of the rest.
/// Under: keep the B largest and drop the rest.
inline void enforce_max_zono(ReachSet& rs, std::size_t max_zono)
{
    if (rs.size() <= max_zono)
        return;
    std::vector<double> sizes(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
        sizes[i] = size_measure(rs.zonotopes[i]);
    std::vector<std::size_t> order(rs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });

    const std::size_t keep = rs.direction == Direction::Over ? max_zono - 1 : max_zono;
    std::vector<char> kept(rs.size(), 0);
    for (std::size_t k = 0; k < keep; ++k)
        kept[order[k]] = 1;

    ReachSet out{rs.direction, {}, {}};
    std::vector<Zonotope> rest;
    for (std::size_t i = 0; i < rs.size(); ++i)
    {
        if (kept[i])
            out.push(std::move(rs.zonotopes[i]), std::move(rs.trails[i]));
        else
            rest.push_back(std::move(rs.zonotopes[i]));
    }
    if (rs.direction == Direction::Over)
        out.push(merge_union(rest), {Provenance{0, 0, Provenance::Kind::Merged}});
    rs = std::move(out);
}

} // namespace detail

/**
 * Propagate `input` through `net`, applying RsO/RsU after every layer except
 * the last, with optional amplification and per-layer zonotope caps.
 */
inline ReachSet propagate_limited(const Network& net, const Zonotope& input, Direction direction,
                                  const Budget& budget, const PropagationOptions& options = {})
{
    budget.validate();
    if (input.dim() != net.input_width())
        throw DimensionError("propagate: input zonotope has dimension " + std::to_string(input.dim()) +
                             ", network expects " + std::to_string(net.input_width()));

    ReachSet rs{direction, {input}, {{}}};
    const auto& layers = net.layers();
    for (std::size_t k = 0; k < layers.size(); ++k)
    {
        for (auto& z : rs.zonotopes)
            z = linear_transform(z, layers[k].weights, layers[k].bias);
        if (k + 1 == layers.size())
            break;

        ReachSet next{direction, {}, {}};
        for (std::size_t i = 0; i < rs.size(); ++i)
        {
            const auto part = direction == Direction::Over ? rso_relu(rs.zonotopes[i], budget.max_amp, options)
                                                           : rsu_relu(rs.zonotopes[i], budget.max_amp, options);
            if (next.size() + part.size() > options.zonotope_ceiling)
                throw ResourceError("propagate: layer " + std::to_string(k) + " exceeds the zonotope ceiling of " +
                                    std::to_string(options.zonotope_ceiling));
            for (std::size_t j = 0; j < part.size(); ++j)
            {
                auto trail = rs.trails[i];
                auto step = part.trails[j].front();
                step.parent = i;
                trail.push_back(step);
                next.push(part.zonotopes[j], std::move(trail));
            }
        }
        detail::dedupe_points(next);
        if (budget.max_zono)
            detail::enforce_max_zono(next, *budget.max_zono);
        rs = std::move(next);
    }
    return rs;
}

inline ReachSet propagate(const Network& net, const Zonotope& input, Direction direction,
                          const PropagationOptions& options = {})
{
    return propagate_limited(net, input, direction, Budget::unlimited(), options);
}

} // namespace reachzono

#endif
