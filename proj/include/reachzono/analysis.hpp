#ifndef REACHZONO_ANALYSIS_HPP_
#define REACHZONO_ANALYSIS_HPP_

/**
 * @file analysis.hpp
 * @brief Applications of reachable sets: input-set construction, robustness
 *        scores and certificates, class-specific matrices, reliability
 *        thresholds, robust-loss values, output extents and feature ranking.
 */

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "network.hpp"
#include "relu_reach.hpp"
#include "zonotope.hpp"

namespace reachzono
{

// ---------------------------------------------------------------------------
// Input sets

/// Hyper-cube (x | eps I).
struct CubeShape
{
    double eps = 0.0;
};

/// Axis-aligned box (x | diag(radii)).
struct BoxShape
{
    Vector radii;
};

/// Box from the interval hull of the dataset's principal axes, scaled so its
/// scaled volume equals that of the eps-cube.
struct PcaBoxShape
{
    double eps = 0.0;
};

/// Coupled perturbation (x | [delta I, eps 1]).
struct FreeShape
{
    double eps = 0.0;
    double delta = 0.0;
};

using InputShape = std::variant<CubeShape, BoxShape, PcaBoxShape, FreeShape>;

struct InputSpec
{
    InputShape shape;
    Vector anchor;
};

namespace detail
{

/// Principal-axis interval hull radii of `points`, unscaled.
inline Vector principal_hull_radius(std::span<const Vector> points, std::size_t dim)
{
    if (points.size() < 2)
        throw InvalidArgument("box-pca: at least two data points are required");
    const auto d = static_cast<Eigen::Index>(dim);
    Vector mean = Vector::Zero(d);
    for (const auto& p : points)
    {
        if (p.size() != d)
            throw DimensionError("box-pca: data point has length " + std::to_string(p.size()) + ", expected " +
                                 std::to_string(dim));
        mean += p;
    }
    mean /= static_cast<double>(points.size());
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& p : points)
    {
        const Vector x = p - mean;
        cov.noalias() += x * x.transpose();
    }
    cov /= static_cast<double>(points.size() - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success)
        throw SolverFailure("box-pca: covariance eigendecomposition did not converge");

    // Eigen returns ascending eigenvalues; generators are the principal axes
    // scaled by their standard deviation, largest first.
    Matrix gens(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
    {
        const Eigen::Index src = d - 1 - k;
        Vector axis = eig.eigenvectors().col(src);
        for (Eigen::Index i = 0; i < d; ++i)
            if (axis[i] != 0.0)
            {
                if (axis[i] < 0.0)
                    axis = -axis;
                break;
            }
        gens.col(k) = std::sqrt(std::max(eig.eigenvalues()[src], 0.0)) * axis;
    }
    const Vector radius = gens.cwiseAbs().rowwise().sum();
    if (radius.maxCoeff() <= 0.0)
        throw InvalidArgument("box-pca: degenerate covariance (rank 0)");
    if (radius.minCoeff() <= 0.0)
        throw InvalidArgument("box-pca: degenerate covariance (a feature has zero spread)");
    return radius;
}

} // namespace detail

inline Zonotope build_input_set(const InputSpec& spec, std::span<const Vector> dataset = {})
{
    const auto& x = spec.anchor;
    const auto d = x.size();
    if (!x.allFinite())
        throw InvalidArgument("input set: anchor must be finite");

    return std::visit(
        [&](const auto& shape) -> Zonotope {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, CubeShape>)
            {
                // eps = 0 is accepted and yields the point zonotope at the anchor.
                if (!(shape.eps >= 0.0))
                    throw InvalidArgument("cube: eps must be nonnegative");
                return Zonotope(x, shape.eps * Matrix::Identity(d, d));
            }
            else if constexpr (std::is_same_v<T, BoxShape>)
            {
                if (shape.radii.size() != d)
                    throw DimensionError("box: " + std::to_string(shape.radii.size()) + " radii for " +
                                         std::to_string(d) + " features");
                if (!(shape.radii.array() > 0.0).all())
                    throw InvalidArgument("box: radii must be positive");
                return Zonotope(x, Matrix(shape.radii.asDiagonal()));
            }
            else if constexpr (std::is_same_v<T, PcaBoxShape>)
            {
                if (!(shape.eps > 0.0))
                    throw InvalidArgument("box-pca: eps must be positive");
                const Vector r = detail::principal_hull_radius(dataset, static_cast<std::size_t>(d));
                const double geo_mean = std::exp(r.array().log().mean());
                return Zonotope(x, Matrix((shape.eps / geo_mean * r).asDiagonal()));
            }
            else
            {
                if (!(shape.eps > 0.0) || !(shape.delta >= 0.0))
                    throw InvalidArgument("free: eps must be positive and delta nonnegative");
                Matrix g(d, d + 1);
                g.leftCols(d) = shape.delta * Matrix::Identity(d, d);
                g.col(d).setConstant(shape.eps);
                return Zonotope(x, std::move(g));
            }
        },
        spec.shape);
}

// ---------------------------------------------------------------------------
// Scores and certificates

struct ClassScore
{
    std::size_t cls = 0;
    double score = 0.0;

    bool operator==(const ClassScore&) const = default;
};

/// Lowest index among maximal entries.
inline std::size_t argmax(const Vector& v)
{
    if (v.size() == 0)
        throw InvalidArgument("argmax: empty vector");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best])
            best = i;
    return static_cast<std::size_t>(best);
}

/// s_b = min over zonotopes of (c_a - c_b - sum_i |g_i^a - g_i^b|), for every b != a.
inline std::vector<ClassScore> robustness_scores(const ReachSet& rs, std::size_t a)
{
    if (rs.empty())
        throw InvalidArgument("robustness_scores: empty reachable set");
    const auto k = rs.zonotopes.front().dim();
    if (a >= k)
        throw DimensionError("robustness_scores: class " + std::to_string(a) + " out of range for " +
                             std::to_string(k) + " outputs");
    std::vector<ClassScore> out;
    for (std::size_t b = 0; b < k; ++b)
    {
        if (b == a)
            continue;
        double best = kInfinity;
        for (const auto& z : rs.zonotopes)
        {
            const auto ia = static_cast<Eigen::Index>(a);
            const auto ib = static_cast<Eigen::Index>(b);
            const double s = z.center()[ia] - z.center()[ib] -
                             (z.generators().row(ia) - z.generators().row(ib)).cwiseAbs().sum();
            best = std::min(best, s);
        }
        out.push_back({b, best});
    }
    return out;
}

inline double min_score(std::span<const ClassScore> scores)
{
    double m = kInfinity;
    for (const auto& s : scores)
        m = std::min(m, s.score);
    return m;
}

enum class Certificate
{
    Robust,
    NonRobust,
    Unknown
};

inline const char* to_string(Certificate c)
{
    switch (c)
    {
    case Certificate::Robust: return "robust";
    case Certificate::NonRobust: return "non-robust";
    case Certificate::Unknown: return "unknown";
    }
    return "unknown";
}

struct VerificationModes
{
    bool over = true;
    bool under = true;
};

struct VerificationReport
{
    std::size_t predicted = 0;
    Vector logits;
    std::optional<std::vector<ClassScore>> scores_over;
    std::optional<std::vector<ClassScore>> scores_under;
    Certificate certificate = Certificate::Unknown;
    /// Classes b with over-score s_b > 0.
    std::vector<std::size_t> robust_against;
    /// Classes b with under-score s_b < 0.
    std::vector<std::size_t> nonrobust_against;
    std::size_t over_zonotopes = 0;
    std::size_t under_zonotopes = 0;
    std::vector<std::string> diagnostics;
    double seconds = 0.0;
};

/// Robust iff every over-score is positive; otherwise NonRobust iff some under-score is negative.
inline VerificationReport verify(const Network& net, const Vector& anchor, const Zonotope& input,
                                 const Budget& budget, VerificationModes modes = {},
                                 const PropagationOptions& options = {})
{
    const auto start = std::chrono::steady_clock::now();
    VerificationReport rep;
    rep.logits = net.forward(anchor);
    rep.predicted = argmax(rep.logits);

    if (modes.over)
    {
        try
        {
            const auto rs = propagate_limited(net, input, Direction::Over, budget, options);
            rep.over_zonotopes = rs.size();
            rep.scores_over = robustness_scores(rs, rep.predicted);
        }
        catch (const ResourceError& e)
        {
            rep.diagnostics.emplace_back(std::string("over: ") + e.what());
        }
        catch (const SolverFailure& e)
        {
            rep.diagnostics.emplace_back(std::string("over: ") + e.what());
        }
    }
    if (modes.under)
    {
        try
        {
            const auto rs = propagate_limited(net, input, Direction::Under, budget, options);
            rep.under_zonotopes = rs.size();
            if (rs.empty())
                rep.diagnostics.emplace_back("under: empty reachable set, no witness");
            else
                rep.scores_under = robustness_scores(rs, rep.predicted);
        }
        catch (const ResourceError& e)
        {
            rep.diagnostics.emplace_back(std::string("under: ") + e.what());
        }
    }

    if (rep.scores_over)
        for (const auto& s : *rep.scores_over)
            if (s.score > 0.0)
                rep.robust_against.push_back(s.cls);
    if (rep.scores_under)
        for (const auto& s : *rep.scores_under)
            if (s.score < 0.0)
                rep.nonrobust_against.push_back(s.cls);

    if (rep.scores_over && rep.robust_against.size() == rep.scores_over->size())
        rep.certificate = Certificate::Robust;
    else if (!rep.nonrobust_against.empty())
        rep.certificate = Certificate::NonRobust;
    else
        rep.certificate = Certificate::Unknown;

    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

inline VerificationReport verify(const Network& net, const InputSpec& spec, const Budget& budget,
                                 VerificationModes modes = {}, const PropagationOptions& options = {},
                                 std::span<const Vector> dataset = {})
{
    return verify(net, spec.anchor, build_input_set(spec, dataset), budget, modes, options);
}

// ---------------------------------------------------------------------------
// Class-specific verification

struct LabeledSample
{
    Vector x;
    std::size_t label = 0;
};

/**
 * robust[t][b] / nonrobust[t][b]: fraction of samples with true class t that
 * are certified robust / non-robust against class b. Diagonal entries and rows
 * without samples are empty.
 */
struct ClassMatrix
{
    std::size_t classes = 0;
    std::vector<std::size_t> counts;
    std::vector<std::vector<std::optional<double>>> robust;
    std::vector<std::vector<std::optional<double>>> nonrobust;
};

/// `shape` is applied around each sample. A misclassified sample counts only as
/// non-robust against its predicted class; the anchor itself is the witness.
inline ClassMatrix class_specific_matrix(const Network& net, std::span<const LabeledSample> data,
                                         const InputShape& shape, const Budget& budget,
                                         VerificationModes modes = {}, const PropagationOptions& options = {},
                                         std::span<const Vector> pca_data = {})
{
    const auto k = net.output_width();
    ClassMatrix m;
    m.classes = k;
    m.counts.assign(k, 0);
    std::vector<std::vector<double>> rob(k, std::vector<double>(k, 0.0));
    std::vector<std::vector<double>> non(k, std::vector<double>(k, 0.0));

    for (const auto& s : data)
    {
        if (s.label >= k)
            throw DimensionError("class matrix: label " + std::to_string(s.label) + " out of range for " +
                                 std::to_string(k) + " classes");
        const auto rep = verify(net, InputSpec{shape, s.x}, budget, modes, options, pca_data);
        ++m.counts[s.label];
        if (rep.predicted != s.label)
        {
            non[s.label][rep.predicted] += 1.0;
            continue;
        }
        for (const auto b : rep.robust_against)
            rob[s.label][b] += 1.0;
        for (const auto b : rep.nonrobust_against)
            non[s.label][b] += 1.0;
    }

    m.robust.assign(k, std::vector<std::optional<double>>(k));
    m.nonrobust.assign(k, std::vector<std::optional<double>>(k));
    for (std::size_t t = 0; t < k; ++t)
    {
        if (m.counts[t] == 0)
            continue;
        const double n = static_cast<double>(m.counts[t]);
        for (std::size_t b = 0; b < k; ++b)
        {
            if (b == t)
                continue;
            m.robust[t][b] = rob[t][b] / n;
            m.nonrobust[t][b] = non[t][b] / n;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Reliability

struct ScoredPrediction
{
    /// Minimum over-score of the sample against all other classes.
    double score = 0.0;
    bool correct = false;
};

struct ReliabilityCurve
{
    std::vector<double> thresholds;
    /// N_{c,theta} / N_c; absent when there are no correct samples.
    std::vector<std::optional<double>> true_above;
    /// N_{w,theta} / N_w; absent when there are no wrong samples.
    std::vector<std::optional<double>> false_above;
    double best_threshold = 0.0;
};

/// Sorted distinct scores.
inline std::vector<double> default_thresholds(std::span<const ScoredPrediction> samples)
{
    std::vector<double> t;
    for (const auto& s : samples)
        t.push_back(s.score);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

/**
 * A sample is theta-robust when its score is strictly above theta. The chosen
 * threshold maximizes TA - FA over the grid (an absent rate counts as 0),
 * ties to the smallest theta.
 */
inline ReliabilityCurve reliability_rates(std::span<const ScoredPrediction> samples,
                                          std::optional<std::vector<double>> thetas = std::nullopt)
{
    if (samples.empty())
        throw InvalidArgument("reliability: no samples");
    ReliabilityCurve curve;
    curve.thresholds = thetas ? *thetas : default_thresholds(samples);
    std::sort(curve.thresholds.begin(), curve.thresholds.end());
    if (curve.thresholds.empty())
        throw InvalidArgument("reliability: empty threshold grid");

    std::size_t n_correct = 0;
    std::size_t n_wrong = 0;
    for (const auto& s : samples)
        (s.correct ? n_correct : n_wrong)++;

    double best_gain = -kInfinity;
    for (const double theta : curve.thresholds)
    {
        std::size_t c_above = 0;
        std::size_t w_above = 0;
        for (const auto& s : samples)
            if (s.score > theta)
                (s.correct ? c_above : w_above)++;
        std::optional<double> ta, fa;
        if (n_correct > 0)
            ta = static_cast<double>(c_above) / static_cast<double>(n_correct);
        if (n_wrong > 0)
            fa = static_cast<double>(w_above) / static_cast<double>(n_wrong);
        curve.true_above.push_back(ta);
        curve.false_above.push_back(fa);
        const double gain = ta.value_or(0.0) - fa.value_or(0.0);
        if (gain > best_gain)
        {
            best_gain = gain;
            curve.best_threshold = theta;
        }
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Loss values and extents

/// pred_loss + max_b ReLU(-s_b) for a correct prediction, pred_loss otherwise.
inline double classification_robust_loss(const ReachSet& rs_over, std::size_t a, bool correct, double pred_loss)
{
    if (rs_over.direction != Direction::Over)
        throw InvalidArgument("classification_robust_loss: an over-approximation is required");
    const auto scores = robustness_scores(rs_over, a);
    if (!correct)
        return pred_loss;
    double worst = 0.0;
    for (const auto& s : scores)
        worst = std::max(worst, relu(-s.score));
    return pred_loss + worst;
}

/// l_a = max over the set of u_a minus min over the set of v_a, per output dimension.
inline Vector output_extensions(const ReachSet& rs)
{
    if (rs.empty())
        throw InvalidArgument("output_extensions: empty reachable set");
    auto hull = interval_hull(rs.zonotopes.front());
    for (std::size_t i = 1; i < rs.size(); ++i)
    {
        const auto h = interval_hull(rs.zonotopes[i]);
        hull.lower = hull.lower.cwiseMin(h.lower);
        hull.upper = hull.upper.cwiseMax(h.upper);
    }
    return hull.upper - hull.lower;
}

/// val_loss + ReLU(max_a l_a - l_in).
inline double regression_robust_loss(const ReachSet& rs_over, double l_in, double val_loss)
{
    if (rs_over.direction != Direction::Over)
        throw InvalidArgument("regression_robust_loss: an over-approximation is required");
    if (!(l_in > 0.0))
        throw InvalidArgument("regression_robust_loss: input extent must be positive");
    const Vector ext = output_extensions(rs_over);
    return val_loss + relu(ext.maxCoeff() - l_in);
}

// ---------------------------------------------------------------------------
// Feature ranking

struct FeatureVolume
{
    std::size_t feature = 0;
    /// Sum of scaled interval-hull volumes over the output set; absent on error.
    std::optional<double> volume;
    std::string error;
};

/**
 * For each feature f, perturb f by `delta` and every other feature by
 * `eps_small`, propagate the box with RsO and sum the scaled volumes of the
 * output zonotopes. Sorted by volume, largest first, ties by feature index;
 * failed features go last.
 */
inline std::vector<FeatureVolume> rank_features(const Network& net, const Vector& anchor, double delta,
                                                double eps_small, const Budget& budget,
                                                const PropagationOptions& options = {})
{
    if (!(eps_small > 0.0) || !(delta > eps_small))
        throw InvalidArgument("rank_features: require delta > eps > 0");
    const auto d = anchor.size();
    std::vector<FeatureVolume> out;
    for (Eigen::Index f = 0; f < d; ++f)
    {
        FeatureVolume fv{static_cast<std::size_t>(f), std::nullopt, {}};
        Vector radii = Vector::Constant(d, eps_small);
        radii[f] = delta;
        try
        {
            const auto rs = propagate_limited(net, Zonotope(anchor, Matrix(radii.asDiagonal())), Direction::Over,
                                              budget, options);
            double v = 0.0;
            for (const auto& z : rs.zonotopes)
                v += scaled_volume(z);
            fv.volume = v;
        }
        catch (const ResourceError& e)
        {
            fv.error = e.what();
        }
        catch (const SolverFailure& e)
        {
            fv.error = e.what();
        }
        out.push_back(std::move(fv));
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureVolume& a, const FeatureVolume& b) {
        if (a.volume.has_value() != b.volume.has_value())
            return a.volume.has_value();
        if (!a.volume)
            return false;
        return *a.volume > *b.volume;
    });
    return out;
}

} // namespace reachzono

#endif
