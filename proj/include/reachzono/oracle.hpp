#ifndef REACHZONO_ORACLE_HPP_
#define REACHZONO_ORACLE_HPP_

/**
 * @file oracle.hpp
 * @brief Brute-force and sampling baselines: forward sampling of the exact
 *        reachable set, corner enumeration of robustness scores, and an
 *        exhaustive grid search for adversarial inputs.
 */

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "zonotope.hpp"

namespace reachzono
{

inline constexpr double kDefaultCornerFraction = 0.5;
inline constexpr std::size_t kMaxBruteForceGenerators = 20;
inline constexpr std::size_t kMaxGridGenerators = 3;
/// Grids coarser than this are flagged in the search result.
inline constexpr std::size_t kRecommendedGridResolution = 100;

struct SampledSet
{
    std::vector<Vector> points;
    std::uint64_t seed = 0;
    std::size_t count = 0;
};

/**
 * Push `count` input points through `net`. Each point is a corner of the
 * input zonotope (beta in {-1, 1}^n) with probability `corner_fraction`,
 * otherwise beta is uniform on [-1, 1]^n.
 */
inline SampledSet sample_reachable(const Network& net, const Zonotope& input, std::size_t count, std::uint64_t seed,
                                   double corner_fraction = kDefaultCornerFraction)
{
    if (count == 0)
        throw InvalidArgument("sample_reachable: count must be positive");
    if (!(corner_fraction >= 0.0 && corner_fraction <= 1.0))
        throw InvalidArgument("sample_reachable: corner fraction must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution pick_corner(corner_fraction);

    SampledSet out{{}, seed, count};
    out.points.reserve(count);
    Vector beta(static_cast<Eigen::Index>(input.num_generators()));
    for (std::size_t k = 0; k < count; ++k)
    {
        bool corner = corner_fraction >= 1.0;
        if (corner_fraction > 0.0 && corner_fraction < 1.0)
            corner = pick_corner(rng);
        for (Eigen::Index i = 0; i < beta.size(); ++i)
            beta[i] = corner ? (coin(rng) ? 1.0 : -1.0) : unit(rng);
        out.points.push_back(net.forward(input.point(beta)));
    }
    return out;
}

/// Per-dimension max minus min over the sampled outputs.
inline Vector sampled_extents(const SampledSet& s)
{
    if (s.points.empty())
        throw InvalidArgument("sampled_extents: no points");
    Vector lo = s.points.front();
    Vector hi = s.points.front();
    for (const auto& p : s.points)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return hi - lo;
}

/// min over all corners beta in {-1, 1}^n of p_a - p_b. The objective is
/// linear in beta, so corners attain the minimum over the zonotope.
inline double brute_force_score(const Zonotope& z, std::size_t a, std::size_t b)
{
    if (a >= z.dim() || b >= z.dim())
        throw DimensionError("brute_force_score: class index out of range");
    const auto n = z.num_generators();
    if (n > kMaxBruteForceGenerators)
        throw InvalidArgument("brute_force_score: " + std::to_string(n) + " generators exceed the limit of " +
                              std::to_string(kMaxBruteForceGenerators));
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    const double base = z.center()[ia] - z.center()[ib];
    double best = kInfinity;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask)
    {
        double v = base;
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto col = static_cast<Eigen::Index>(i);
            const double diff = z.generators()(ia, col) - z.generators()(ib, col);
            v += ((mask >> i) & 1U) ? diff : -diff;
        }
        best = std::min(best, v);
    }
    return best;
}

struct GridSearchResult
{
    std::optional<Vector> witness;
    std::size_t evaluated = 0;
    /// beta-space distance between neighbouring grid points.
    double spacing = 0.0;
    bool coarse = false;
};

/**
 * Evaluate `net` on a regular grid of `resolution` points per generator axis
 * (beta in [-1, 1], endpoints included) and return the first input whose
 * predicted class differs from `a`.
 */
inline GridSearchResult grid_adversarial_search(const Network& net, const Zonotope& input, std::size_t a,
                                                std::size_t resolution)
{
    const auto n = input.num_generators();
    if (n > kMaxGridGenerators)
        throw InvalidArgument("grid_adversarial_search: " + std::to_string(n) +
                              " generators; exhaustive grids support at most " + std::to_string(kMaxGridGenerators));
    if (resolution == 0)
        throw InvalidArgument("grid_adversarial_search: resolution must be positive");

    GridSearchResult out;
    out.coarse = resolution < kRecommendedGridResolution;
    out.spacing = resolution > 1 ? 2.0 / static_cast<double>(resolution - 1) : 2.0;

    const auto coord = [&](std::size_t k) {
        return resolution == 1 ? 0.0 : -1.0 + out.spacing * static_cast<double>(k);
    };

    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i)
        total *= resolution;

    Vector beta(static_cast<Eigen::Index>(n));
    for (std::size_t idx = 0; idx < total; ++idx)
    {
        std::size_t rest = idx;
        for (std::size_t i = n; i-- > 0;)
        {
            beta[static_cast<Eigen::Index>(i)] = coord(rest % resolution);
            rest /= resolution;
        }
        const Vector x = input.point(beta);
        ++out.evaluated;
        if (argmax(net.forward(x)) != a)
        {
            out.witness = x;
            break;
        }
    }
    return out;
}

} // namespace reachzono

#endif
