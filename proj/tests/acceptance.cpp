// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes. Seeds, sample counts and tolerances are fixed below.

#include "cli_runner.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>

using namespace reachzono;
using namespace reachzono::testing;

namespace
{

constexpr double kMembershipTol = 1e-9;
constexpr double kScoreTol = 1e-12;
constexpr double kLpObjectiveTol = 1e-6;
constexpr double kExtentTol = 1e-6;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

Vector relu_vec(const Vector& v) { return v.unaryExpr([](double x) { return relu(x); }); }

bool matches_quadrant(const Vector& p, const Quadrant& q, const std::vector<std::size_t>& crossing, double tol)
{
    for (const auto d : crossing)
    {
        const bool neg = std::find(q.nonpositive.begin(), q.nonpositive.end(), d) != q.nonpositive.end();
        const double v = p[static_cast<Eigen::Index>(d)];
        if (neg ? v > tol : v < -tol)
            return false;
    }
    return true;
}

// Shared by criteria 3 and 8: statuses of every under-approximation LP posed in criterion 3.
std::size_t g_under_lp_total = 0;
std::size_t g_under_lp_failures = 0;

// 1. ReLU of a zonotope point is unchanged by zeroing the always-nonpositive dims.
Outcome projection_preserves_relu()
{
    Rng rng(1001);
    std::size_t evals = 0;
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        const auto z = random_zonotope(rng, uniform_size(rng, 1, 5), uniform_size(rng, 1, 6));
        const auto zp = project(z, classify_dims(z).negative);
        for (int k = 0; k < 100; ++k)
        {
            const Vector beta = uniform_beta(rng, z.num_generators());
            const Vector a = relu_vec(z.point(beta));
            const Vector b = relu_vec(zp.point(beta));
            ++evals;
            if (std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) != 0)
                ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(evals) + " evaluations, " + std::to_string(mismatches) + " mismatches"};
}

// 2. Every quadrant's over-approximation contains the sign-matching points of the zonotope.
Outcome overapprox_encloses_quadrants()
{
    Rng rng(2002);
    std::size_t quadrants = 0;
    std::size_t empty = 0;
    std::size_t checked = 0;
    std::size_t misses = 0;
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto z = random_zonotope(rng, uniform_size(rng, 1, 5), uniform_size(rng, 1, 6));
        const auto cls = classify_dims(z);
        const auto zp = project(z, cls.negative);
        for (std::uint64_t code = 0; code < static_cast<std::uint64_t>(count_quadrants(z)); ++code)
        {
            ++quadrants;
            const auto q = make_quadrant(cls.crossing, code);
            const auto over = overapprox_quadrant(zp, q);
            const auto betas = sample_sign_matching(rng, zp, q, cls.crossing, 1000);
            if (betas.empty())
                ++empty;
            for (const auto& beta : betas)
            {
                ++checked;
                if (!contains_point(over, zp.point(beta), kMembershipTol))
                    ++misses;
            }
        }
    }
    return {misses == 0 && checked > 0,
            std::to_string(quadrants) + " quadrants (" + std::to_string(empty) + " without interior), " +
                std::to_string(checked) + " sign-matching points, " + std::to_string(misses) + " outside"};
}

// 3. Every under-approximation zonotope lies in the (projected) input zonotope and its quadrant.
Outcome underapprox_inside_quadrants()
{
    Rng rng(3003);
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    std::size_t checked = 0;
    std::size_t outside = 0;
    std::size_t wrong_sign = 0;
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto z = random_zonotope(rng, uniform_size(rng, 1, 5), uniform_size(rng, 1, 6));
        const auto cls = classify_dims(z);
        const auto zp = project(z, cls.negative);
        for (std::uint64_t code = 0; code < static_cast<std::uint64_t>(count_quadrants(z)); ++code)
        {
            const auto q = make_quadrant(cls.crossing, code);
            const auto status = solve(underapprox_program(zp, q)).status;
            ++g_under_lp_total;
            if (status != LpStatus::Optimal && status != LpStatus::Infeasible)
                ++g_under_lp_failures;
            const auto under = underapprox_quadrant(zp, q);
            if (!under)
            {
                ++infeasible;
                continue;
            }
            ++feasible;
            const auto h = interval_hull(*under);
            std::vector<Vector> pts = sample(*under, 1000, code + 7919U * static_cast<std::uint64_t>(trial));
            for (auto& p : pts)
            {
                ++checked;
                if (!contains_point(zp, p, kMembershipTol))
                    ++outside;
                if (!matches_quadrant(p, q, cls.crossing, kMembershipTol))
                    ++wrong_sign;
            }
            // The extreme corners of the hull along each sign-constrained dim.
            if (!matches_quadrant(h.lower, q, cls.crossing, kMembershipTol) ||
                !matches_quadrant(h.upper, q, cls.crossing, kMembershipTol))
                ++wrong_sign;
        }
    }
    return {outside == 0 && wrong_sign == 0 && feasible > 0,
            std::to_string(feasible) + " feasible / " + std::to_string(infeasible) + " empty quadrants, " +
                std::to_string(checked) + " points, " + std::to_string(outside) + " outside, " +
                std::to_string(wrong_sign) + " sign violations"};
}

struct EnclosureCount
{
    std::size_t forward = 0;
    std::size_t forward_misses = 0;
    std::size_t under = 0;
    std::size_t under_misses = 0;
};

void check_enclosure(const Network& net, const Zonotope& input, const Budget& budget, std::size_t forward_samples,
                     std::uint64_t seed, EnclosureCount& count)
{
    const auto over = propagate_limited(net, input, Direction::Over, budget);
    const auto under = propagate_limited(net, input, Direction::Under, budget);
    for (const auto& y : sample_reachable(net, input, forward_samples, seed).points)
    {
        ++count.forward;
        if (!in_union(over, y, kMembershipTol))
            ++count.forward_misses;
    }
    for (std::size_t i = 0; i < under.size(); ++i)
        for (const auto& p : sample(under.zonotopes[i], 50, seed + i))
        {
            ++count.under;
            if (!in_union(over, p, kMembershipTol))
                ++count.under_misses;
        }
}

// 4. Forward samples and under-approximation samples lie in the over-approximation.
Outcome end_to_end_enclosure()
{
    Rng rng(4004);
    EnclosureCount count;
    for (int trial = 0; trial < 50; ++trial)
    {
        const auto depth = uniform_size(rng, 1, 3);
        std::vector<std::size_t> widths{uniform_size(rng, 1, 4)};
        for (std::size_t k = 0; k < depth; ++k)
            widths.push_back(uniform_size(rng, k + 1 == depth ? 2 : 1, 4));
        const auto net = random_network(rng, widths);
        const Vector x = random_vector(rng, widths.front());
        for (const double eps : {0.01, 0.1})
            check_enclosure(net, build_input_set({CubeShape{eps}, x}), Budget{}, 10000,
                            static_cast<std::uint64_t>(trial), count);
    }
    return {count.forward_misses == 0 && count.under_misses == 0,
            std::to_string(count.forward) + " forward samples (" + std::to_string(count.forward_misses) +
                " outside), " + std::to_string(count.under) + " under samples (" +
                std::to_string(count.under_misses) + " outside)"};
}

// 5. Robust certificates survive a sampling attack; non-robust ones are confirmed by grid search.
Outcome certificate_consistency()
{
    Rng rng(5005);
    std::size_t robust = 0, nonrobust = 0, unknown = 0, contradictions = 0;
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto d = uniform_size(rng, 1, 3);
        const auto net = random_network(rng, {d, 4, 4, 3});
        for (int k = 0; k < 5; ++k)
        {
            const Vector x = random_vector(rng, d);
            const double eps = k % 2 ? 0.05 : 0.2;
            const auto input = build_input_set({CubeShape{eps}, x});
            const auto rep = verify(net, x, input, Budget{});
            if (rep.certificate == Certificate::Robust)
            {
                ++robust;
                const auto attack = sample_reachable(net, input, 100000, 17U * static_cast<std::uint64_t>(trial) + k);
                for (const auto& y : attack.points)
                    if (argmax(y) != rep.predicted)
                    {
                        ++contradictions;
                        break;
                    }
            }
            else if (rep.certificate == Certificate::NonRobust)
            {
                ++nonrobust;
                if (!grid_adversarial_search(net, input, rep.predicted, 201).witness)
                    ++contradictions;
            }
            else
                ++unknown;
        }
    }
    return {contradictions == 0 && robust > 0 && nonrobust > 0,
            std::to_string(robust) + " robust, " + std::to_string(nonrobust) + " non-robust, " +
                std::to_string(unknown) + " unknown, " + std::to_string(contradictions) + " contradictions"};
}

// 6. Closed-form scores equal the minimum over all 2^n corners.
Outcome scores_match_corner_enumeration()
{
    Rng rng(6006);
    double worst = 0.0;
    std::size_t pairs = 0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        const auto k = uniform_size(rng, 2, 5);
        ReachSet rs{Direction::Over, {}, {}};
        rs.push(random_zonotope(rng, k, uniform_size(rng, 0, 12)), {});
        const auto a = uniform_size(rng, 0, k - 1);
        for (const auto& s : robustness_scores(rs, a))
        {
            ++pairs;
            worst = std::max(worst, std::abs(s.score - brute_force_score(rs.zonotopes[0], a, s.cls)));
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    return {worst <= kScoreTol, std::to_string(pairs) + " class pairs, max deviation " + buf};
}

// 7. Tighter amplification budgets never certify more inputs, and stay sound.
Outcome budget_monotonicity()
{
    Rng rng(7007);
    const auto net = random_network(rng, {4, 10, 10, 10, 10, 10, 3});
    std::vector<Vector> inputs;
    for (int i = 0; i < 50; ++i)
        inputs.push_back(random_vector(rng, 4));
    const double eps = 0.02;
    const std::vector<std::pair<std::string, std::optional<std::size_t>>> budgets{
        {"unlimited", std::nullopt}, {"4", std::size_t{4}}, {"1", std::size_t{1}}};

    std::vector<std::size_t> counts;
    EnclosureCount enclosure;
    std::size_t diagnostics = 0;
    for (const auto& [label, amp] : budgets)
    {
        const Budget budget{amp, std::size_t{1000}};
        std::size_t robust = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i)
        {
            const auto input = build_input_set({CubeShape{eps}, inputs[i]});
            const auto rep = verify(net, inputs[i], input, budget, VerificationModes{true, false});
            diagnostics += rep.diagnostics.size();
            if (rep.certificate == Certificate::Robust)
                ++robust;
            const auto over = propagate_limited(net, input, Direction::Over, budget);
            for (const auto& y : sample_reachable(net, input, 1000, i).points)
            {
                ++enclosure.forward;
                if (!in_union(over, y, kMembershipTol))
                    ++enclosure.forward_misses;
            }
        }
        counts.push_back(robust);
    }
    const bool monotone = counts[0] >= counts[1] && counts[1] >= counts[2];
    return {monotone && enclosure.forward_misses == 0 && diagnostics == 0,
            "robust counts A=unlimited/4/1: " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
                std::to_string(counts[2]) + ", " + std::to_string(enclosure.forward) + " forward samples (" +
                std::to_string(enclosure.forward_misses) + " outside), " + std::to_string(diagnostics) +
                " diagnostics"};
}

// 8. LP solver agrees with vertex enumeration; under-approximation LPs never fail numerically.
Outcome lp_solver_agreement()
{
    Rng rng(8008);
    std::size_t mismatches = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial)
    {
        const auto n = uniform_size(rng, 1, 5);
        const auto m = uniform_size(rng, 0, 5);
        LinearProgram lp;
        lp.lower.resize(static_cast<Eigen::Index>(n));
        lp.upper.resize(static_cast<Eigen::Index>(n));
        Vector x0(static_cast<Eigen::Index>(n));
        for (Eigen::Index j = 0; j < lp.lower.size(); ++j)
        {
            lp.lower[j] = uniform(rng, -3.0, 0.0);
            lp.upper[j] = lp.lower[j] + uniform(rng, 0.0, 4.0);
            x0[j] = uniform(rng, lp.lower[j], lp.upper[j]);
        }
        lp.a.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < lp.a.size(); ++i)
            lp.a.data()[i] = uniform(rng, 0.0, 1.0) < 0.25 ? 0.0 : gauss(rng);
        lp.b = lp.a * x0;
        for (Eigen::Index i = 0; i < lp.b.size(); ++i)
            lp.b[i] += uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : uniform(rng, 0.0, 2.0);
        lp.objective = random_vector(rng, n, -2.0, 2.0);
        const auto ref = vertex_enumeration_optimum(lp);
        const auto out = solve(lp);
        if (!ref || out.status != LpStatus::Optimal)
        {
            ++mismatches;
            continue;
        }
        const double dev = std::abs(*out.objective_value - *ref);
        worst = std::max(worst, dev);
        if (dev > kLpObjectiveTol)
            ++mismatches;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    return {mismatches == 0 && g_under_lp_failures == 0 && g_under_lp_total > 0,
            "500 programs, " + std::to_string(mismatches) + " mismatches, max deviation " + buf + "; " +
                std::to_string(g_under_lp_total) + " under-approximation LPs, " +
                std::to_string(g_under_lp_failures) + " numerical failures"};
}

// 9. Per-output extents: sampled <= over and under <= over. Most anchors are
// moved onto the zero set of a few hidden neurons so those neurons cross zero
// inside the input cube.
Outcome extent_ordering()
{
    Rng rng(9009);
    const auto net = random_network(rng, {8, 16, 8}, Task::Autoencoder);
    const auto& first = net.layers().front();
    const Budget budget{std::size_t{100}, std::size_t{1000}};
    const double eps = 0.001;

    std::size_t violations = 0;
    std::size_t crossing_anchors = 0;
    double under_sum = 0.0, sampled_sum = 0.0, over_sum = 0.0;
    for (int i = 0; i < 20; ++i)
    {
        Vector x = random_vector(rng, 8, 0.0, 1.0);
        const auto pinned = static_cast<Eigen::Index>(i % 4);
        if (pinned > 0)
        {
            std::vector<Eigen::Index> rows;
            while (static_cast<Eigen::Index>(rows.size()) < pinned)
            {
                const auto r = static_cast<Eigen::Index>(uniform_size(rng, 0, 15));
                if (std::find(rows.begin(), rows.end(), r) == rows.end())
                    rows.push_back(r);
            }
            Matrix w(pinned, 8);
            Vector b(pinned);
            for (Eigen::Index k = 0; k < pinned; ++k)
            {
                w.row(k) = first.weights.row(rows[static_cast<std::size_t>(k)]);
                b[k] = first.bias[rows[static_cast<std::size_t>(k)]];
            }
            // Least-norm correction onto {W x + b = 0}.
            x -= w.transpose() * (w * w.transpose()).ldlt().solve(w * x + b);
        }
        const auto input = build_input_set({CubeShape{eps}, x});
        const auto hidden = linear_transform(input, first.weights, first.bias);
        if (!classify_dims(hidden).crossing.empty())
            ++crossing_anchors;
        const Vector over = output_extensions(propagate_limited(net, input, Direction::Over, budget));
        const Vector under = output_extensions(propagate_limited(net, input, Direction::Under, budget));
        const Vector sampled =
            sampled_extents(sample_reachable(net, input, 20000, static_cast<std::uint64_t>(100 + i)));
        if (((sampled - over).array() > kExtentTol).any() || ((under - over).array() > kExtentTol).any())
            ++violations;
        over_sum += over.sum();
        under_sum += under.sum();
        sampled_sum += sampled.sum();
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "20 anchors (%zu with crossing neurons), %zu violations; summed extents over %.6g, under %.6g, "
                  "sampled %.6g; under/sampled ratio %.3f",
                  crossing_anchors, violations, over_sum, under_sum, sampled_sum, under_sum / sampled_sum);
    return {violations == 0 && crossing_anchors > 0, buf};
}

// 10. Deterministic CLI reports are byte-identical across runs.
Outcome deterministic_reports()
{
    const std::string cls = "--model \"" + data_file("toy_classifier.json") + "\"";
    const std::string pts = "--data \"" + data_file("toy_points.csv") + "\"";
    const std::string reg = "--model \"" + data_file("toy_regressor.json") + "\" --data \"" +
                            data_file("toy_regression.csv") + "\"";
    const std::vector<std::string> commands{
        "verify " + cls + " " + pts + " --eps 0.05 --max-amp 8 --max-zono 100",
        "verify " + cls + " " + pts + " --set box-pca --eps 0.05",
        "verify " + cls + " " + pts + " --set free --eps 0.05 --delta 0.01",
        "rank " + cls + " " + pts + " --eps 0.01 --delta 0.3",
        "extents " + reg + " --eps 0.05",
        "reliability " + cls + " " + pts + " --eps 0.05",
        "class-matrix " + cls + " " + pts + " --eps 0.05",
        "sample " + cls + " " + pts + " --eps 0.05 --count 2000 --seed 11",
    };
    std::size_t differing = 0;
    std::size_t failed = 0;
    for (const auto& cmd : commands)
    {
        const auto a = run_cli(cmd + " --deterministic");
        const auto b = run_cli(cmd + " --deterministic");
        if (a.exit_code != 0 || b.exit_code != 0 || a.out.empty())
            ++failed;
        else if (a.out != b.out)
            ++differing;
    }
    return {differing == 0 && failed == 0, std::to_string(commands.size()) + " commands run twice, " +
                                               std::to_string(differing) + " differ, " + std::to_string(failed) +
                                               " failed"};
}

struct Criterion
{
    int id;
    std::string name;
    std::function<Outcome()> run;
    double time_limit;
};

} // namespace

int main()
{
    const double no_limit = 0.0;
    const std::vector<Criterion> criteria{
        {1, "projection on nonpositive dims preserves ReLU", projection_preserves_relu, 10.0},
        {2, "quadrant over-approximation soundness", overapprox_encloses_quadrants, 60.0},
        {3, "quadrant under-approximation soundness", underapprox_inside_quadrants, 120.0},
        {4, "end-to-end enclosure", end_to_end_enclosure, no_limit},
        {5, "certificate consistency", certificate_consistency, no_limit},
        {6, "scores match corner enumeration", scores_match_corner_enumeration, no_limit},
        {7, "budget monotonicity", budget_monotonicity, no_limit},
        {8, "LP solver agreement", lp_solver_agreement, no_limit},
        {9, "extent ordering", extent_ordering, no_limit},
        {10, "deterministic reports", deterministic_reports, no_limit},
    };

    int failures = 0;
    for (const auto& c : criteria)
    {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try
        {
            out = c.run();
        }
        catch (const std::exception& e)
        {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing;
        char buf[96];
        if (c.time_limit > 0.0)
        {
            std::snprintf(buf, sizeof buf, "%.2f s, limit %.0f s", secs, c.time_limit);
            if (secs >= c.time_limit)
                out.pass = false;
        }
        else
            std::snprintf(buf, sizeof buf, "%.2f s", secs);
        timing = buf;
        if (!out.pass)
            ++failures;
        std::printf("%s criterion %2d: %s: %s (%s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    out.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
