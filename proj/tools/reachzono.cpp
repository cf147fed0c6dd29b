// Command-line front end: binds models, datasets, input sets and budgets to
// the analyses and writes one JSON (or CSV) document per run.

#include "CLI11.hpp"

#include <reachzono/reachzono.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace
{

using namespace reachzono;
using nlohmann::json;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct RunConfig
{
    std::string model;
    std::string data;
    std::string point;
    std::string set = "cube";
    std::optional<double> eps;
    std::optional<double> delta;
    std::string radii;
    std::string mode = "both";
    std::optional<std::size_t> max_amp;
    std::optional<std::size_t> max_zono;
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "json";
    bool deterministic = false;
    double lp_tol = kDefaultLpTolerance;

    // sample
    std::size_t count = 10000;
    double corner_fraction = kDefaultCornerFraction;
    // reliability
    std::string thetas;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
        try
        {
            out.push_back(reachzono::detail::parse_double(reachzono::detail::trim(cell), flag));
        }
        catch (const ParseError& e)
        {
            throw UsageError(e.what());
        }
    }
    if (out.empty())
        throw UsageError(flag + ": expected a comma-separated list of numbers");
    return out;
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string fmt(double v)
{
    if (!std::isfinite(v))
        return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

void add_common_options(CLI::App& cmd, RunConfig& cfg)
{
    cmd.add_option("--model", cfg.model, "Model JSON file")->required();
    cmd.add_option("--data", cfg.data, "Dataset CSV (header row, optional final 'label' column)");
    cmd.add_option("--point", cfg.point, "Inline anchor, comma-separated");
    cmd.add_option("--set", cfg.set, "Input set shape")->check(CLI::IsMember({"cube", "box", "free", "box-pca"}));
    cmd.add_option("--eps", cfg.eps, "Perturbation size");
    cmd.add_option("--delta", cfg.delta, "Per-feature perturbation for free sets; large perturbation for rank");
    cmd.add_option("--radii", cfg.radii, "Box radii, comma-separated");
    cmd.add_option("--mode", cfg.mode, "Approximation direction")->check(CLI::IsMember({"over", "under", "both"}));
    cmd.add_option("--max-amp", cfg.max_amp, "Maximum amplification per zonotope and layer")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--max-zono", cfg.max_zono, "Maximum zonotopes per layer")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", cfg.seed, "Random seed");
    cmd.add_option("--out", cfg.out, "Output file (default: stdout)");
    cmd.add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    cmd.add_flag("--deterministic", cfg.deterministic, "Omit timings and print 17 significant digits");
    cmd.add_option("--lp-tol", cfg.lp_tol, "Linear program tolerance")->check(CLI::NonNegativeNumber);
}

struct Context
{
    Network net;
    std::optional<Dataset> data;
    std::vector<Vector> anchors;
    PropagationOptions options;
    Budget budget;
    VerificationModes modes;
};

PropagationOptions options_from(const RunConfig& cfg)
{
    PropagationOptions opt;
    opt.lp_tol = cfg.lp_tol;
    if (const char* env = std::getenv("REACHZONO_MAX_ZONOTOPES"))
    {
        try
        {
            const auto v = std::stoull(env);
            if (v == 0)
                throw UsageError("REACHZONO_MAX_ZONOTOPES must be positive");
            opt.zonotope_ceiling = static_cast<std::size_t>(v);
        }
        catch (const std::logic_error&)
        {
            throw UsageError(std::string("REACHZONO_MAX_ZONOTOPES: not a positive integer: ") + env);
        }
    }
    return opt;
}

Context load_context(const RunConfig& cfg, bool need_anchors = true)
{
    Context ctx{load_model(cfg.model), std::nullopt, {}, options_from(cfg), {cfg.max_amp, cfg.max_zono}, {}};
    ctx.modes.over = cfg.mode != "under";
    ctx.modes.under = cfg.mode != "over";
    if (!cfg.data.empty())
    {
        ctx.data = load_csv(cfg.data);
        if (ctx.data->width() != ctx.net.input_width())
            throw UsageError("--data: dataset has " + std::to_string(ctx.data->width()) +
                             " feature columns, model expects " + std::to_string(ctx.net.input_width()));
    }
    if (!cfg.point.empty())
    {
        auto p = to_vector(parse_list(cfg.point, "--point"));
        if (static_cast<std::size_t>(p.size()) != ctx.net.input_width())
            throw UsageError("--point: " + std::to_string(p.size()) + " values given, model expects " +
                             std::to_string(ctx.net.input_width()));
        ctx.anchors.push_back(std::move(p));
    }
    else if (ctx.data)
    {
        ctx.anchors = ctx.data->features;
    }
    if (need_anchors && ctx.anchors.empty())
        throw UsageError("one of --point or --data is required");
    return ctx;
}

InputShape shape_from(const RunConfig& cfg, std::size_t width)
{
    if (cfg.set == "cube")
    {
        if (!cfg.eps)
            throw UsageError("--eps is required for --set cube");
        if (!(*cfg.eps > 0.0))
            throw UsageError("--eps must be positive");
        return CubeShape{*cfg.eps};
    }
    if (cfg.set == "box")
    {
        if (cfg.radii.empty())
            throw UsageError("--radii is required for --set box");
        auto r = to_vector(parse_list(cfg.radii, "--radii"));
        if (static_cast<std::size_t>(r.size()) != width)
            throw UsageError("--radii: " + std::to_string(r.size()) + " values given, model expects " +
                             std::to_string(width));
        if (!(r.array() > 0.0).all())
            throw UsageError("--radii must be positive");
        return BoxShape{std::move(r)};
    }
    if (cfg.set == "box-pca")
    {
        if (!cfg.eps)
            throw UsageError("--eps is required for --set box-pca");
        if (cfg.data.empty())
            throw UsageError("--data is required for --set box-pca");
        if (!(*cfg.eps > 0.0))
            throw UsageError("--eps must be positive");
        return PcaBoxShape{*cfg.eps};
    }
    if (!cfg.eps || !cfg.delta)
        throw UsageError("--set free requires both --eps and --delta");
    if (!(*cfg.eps > 0.0) || !(*cfg.delta >= 0.0))
        throw UsageError("--set free requires --eps > 0 and --delta >= 0");
    return FreeShape{*cfg.eps, *cfg.delta};
}

std::span<const Vector> pca_points(const Context& ctx)
{
    if (!ctx.data)
        return {};
    return ctx.data->features;
}

json metadata(const RunConfig& cfg, const Context& ctx, double seconds)
{
    json m{{"deterministic", cfg.deterministic},
           {"seed", cfg.seed},
           {"model", ctx.net.name() ? json(*ctx.net.name()) : json(nullptr)},
           {"task", to_string(ctx.net.task())},
           {"max_amp", cfg.max_amp ? json(*cfg.max_amp) : json(nullptr)},
           {"max_zono", cfg.max_zono ? json(*cfg.max_zono) : json(nullptr)},
           {"zonotope_ceiling", ctx.options.zonotope_ceiling}};
    if (!cfg.deterministic)
        m["wall_seconds"] = seconds;
    return m;
}

struct Output
{
    json document;
    std::string csv;
};

double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Output cmd_verify(const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const auto ctx = load_context(cfg);
    const auto shape = shape_from(cfg, ctx.net.input_width());
    auto results = json::array();
    std::ostringstream csv;
    csv << "sample,predicted,certificate,min_score_over,min_score_under\n";
    std::vector<double> seconds;
    for (std::size_t i = 0; i < ctx.anchors.size(); ++i)
    {
        const auto rep = verify(ctx.net, InputSpec{shape, ctx.anchors[i]}, ctx.budget, ctx.modes, ctx.options,
                                pca_points(ctx));
        auto r = report::verification_json(rep);
        r["sample"] = i;
        results.push_back(std::move(r));
        seconds.push_back(rep.seconds);
        csv << i << ',' << rep.predicted << ',' << to_string(rep.certificate) << ','
            << (rep.scores_over ? fmt(min_score(*rep.scores_over)) : "") << ','
            << (rep.scores_under ? fmt(min_score(*rep.scores_under)) : "") << '\n';
    }
    auto meta = metadata(cfg, ctx, elapsed(start));
    if (!cfg.deterministic)
        meta["sample_seconds"] = seconds;
    return {report::document("verify", std::move(results), std::move(meta)), csv.str()};
}

Output cmd_rank(const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const auto ctx = load_context(cfg);
    if (!cfg.eps || !cfg.delta)
        throw UsageError("rank requires --eps (small perturbation) and --delta (feature perturbation)");
    if (!(*cfg.eps > 0.0) || !(*cfg.delta > *cfg.eps))
        throw UsageError("rank requires --delta > --eps > 0");
    auto results = json::array();
    std::ostringstream csv;
    csv << "sample,rank,feature,volume\n";
    for (std::size_t i = 0; i < ctx.anchors.size(); ++i)
    {
        const auto ranking = rank_features(ctx.net, ctx.anchors[i], *cfg.delta, *cfg.eps, ctx.budget, ctx.options);
        results.push_back({{"sample", i}, {"ranking", report::ranking_json(ranking)}});
        for (std::size_t k = 0; k < ranking.size(); ++k)
            csv << i << ',' << k + 1 << ',' << ranking[k].feature << ',' << fmt(ranking[k].volume) << '\n';
    }
    return {report::document("rank", std::move(results), metadata(cfg, ctx, elapsed(start))), csv.str()};
}

Output cmd_extents(const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const auto ctx = load_context(cfg);
    const auto shape = shape_from(cfg, ctx.net.input_width());
    auto results = json::array();
    std::ostringstream csv;
    csv << "sample,direction,dim,extent\n";
    for (std::size_t i = 0; i < ctx.anchors.size(); ++i)
    {
        const auto input = build_input_set(InputSpec{shape, ctx.anchors[i]}, pca_points(ctx));
        const Vector in_ext = 2.0 * input.radius();
        json r{{"sample", i}, {"input_extents", report::vector_json(in_ext)}};
        std::vector<std::string> diagnostics;
        const auto run = [&](Direction dir, const char* key) {
            try
            {
                const auto rs = propagate_limited(ctx.net, input, dir, ctx.budget, ctx.options);
                if (rs.empty())
                {
                    r[key] = nullptr;
                    diagnostics.push_back(std::string(to_string(dir)) + ": empty reachable set");
                    return;
                }
                const Vector ext = output_extensions(rs);
                r[key] = report::vector_json(ext);
                if (dir == Direction::Over)
                {
                    // Regression robustness excess ReLU(max_a l_a - l_in), l_in the widest input extent.
                    r["robust_excess"] = report::number(relu(ext.maxCoeff() - in_ext.maxCoeff()));
                }
                for (Eigen::Index d = 0; d < ext.size(); ++d)
                    csv << i << ',' << to_string(dir) << ',' << d << ',' << fmt(ext[d]) << '\n';
            }
            catch (const ResourceError& e)
            {
                r[key] = nullptr;
                diagnostics.push_back(std::string(to_string(dir)) + ": " + e.what());
            }
        };
        if (ctx.modes.over)
            run(Direction::Over, "extents_over");
        if (ctx.modes.under)
            run(Direction::Under, "extents_under");
        r["diagnostics"] = diagnostics;
        results.push_back(std::move(r));
    }
    return {report::document("extents", std::move(results), metadata(cfg, ctx, elapsed(start))), csv.str()};
}

Output cmd_reliability(const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    if (cfg.data.empty())
        throw UsageError("reliability requires --data with a 'label' column");
    auto local = cfg;
    local.point.clear();
    const auto ctx = load_context(local);
    if (!ctx.data->labels)
        throw UsageError("reliability requires a 'label' column in --data");
    const auto shape = shape_from(cfg, ctx.net.input_width());

    std::vector<ScoredPrediction> scored;
    auto samples = json::array();
    VerificationModes over_only{true, false};
    for (std::size_t i = 0; i < ctx.anchors.size(); ++i)
    {
        const auto rep = verify(ctx.net, InputSpec{shape, ctx.anchors[i]}, ctx.budget, over_only, ctx.options,
                                pca_points(ctx));
        const bool correct = rep.predicted == (*ctx.data->labels)[i];
        json s{{"sample", i}, {"predicted", rep.predicted}, {"correct", correct}};
        if (!rep.scores_over)
        {
            s["score"] = nullptr;
            s["diagnostics"] = rep.diagnostics;
            samples.push_back(std::move(s));
            continue;
        }
        const double score = min_score(*rep.scores_over);
        s["score"] = report::number(score);
        samples.push_back(std::move(s));
        scored.push_back({score, correct});
    }
    if (scored.empty())
        throw std::runtime_error("reliability: no sample produced an over-approximation");

    std::optional<std::vector<double>> grid;
    if (!cfg.thetas.empty())
        grid = parse_list(cfg.thetas, "--thetas");
    const auto curve = reliability_rates(scored, grid);

    std::ostringstream csv;
    csv << "theta,ta_rate,fa_rate\n";
    for (std::size_t k = 0; k < curve.thresholds.size(); ++k)
        csv << fmt(curve.thresholds[k]) << ',' << fmt(curve.true_above[k]) << ',' << fmt(curve.false_above[k]) << '\n';
    json results{{"samples", samples}, {"curve", report::reliability_json(curve)}};
    return {report::document("reliability", std::move(results), metadata(cfg, ctx, elapsed(start))), csv.str()};
}

Output cmd_class_matrix(const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    if (cfg.data.empty())
        throw UsageError("class-matrix requires --data with a 'label' column");
    auto local = cfg;
    local.point.clear();
    const auto ctx = load_context(local);
    if (!ctx.data->labels)
        throw UsageError("class-matrix requires a 'label' column in --data");
    const auto shape = shape_from(cfg, ctx.net.input_width());
    std::vector<LabeledSample> samples;
    for (std::size_t i = 0; i < ctx.data->size(); ++i)
        samples.push_back({ctx.data->features[i], (*ctx.data->labels)[i]});
    const auto m = class_specific_matrix(ctx.net, samples, shape, ctx.budget, ctx.modes, ctx.options, pca_points(ctx));

    std::ostringstream csv;
    csv << "true_class,tested_class,robust,nonrobust\n";
    for (std::size_t t = 0; t < m.classes; ++t)
        for (std::size_t b = 0; b < m.classes; ++b)
            if (b != t)
                csv << t << ',' << b << ',' << fmt(m.robust[t][b]) << ',' << fmt(m.nonrobust[t][b]) << '\n';
    return {report::document("class-matrix", report::class_matrix_json(m), metadata(cfg, ctx, elapsed(start))),
            csv.str()};
}

Output cmd_sample(const RunConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const auto ctx = load_context(cfg);
    const auto shape = shape_from(cfg, ctx.net.input_width());
    if (cfg.count == 0)
        throw UsageError("--count must be positive");
    auto results = json::array();
    std::ostringstream csv;
    csv << "sample,dim,lower,upper,extent\n";
    for (std::size_t i = 0; i < ctx.anchors.size(); ++i)
    {
        const auto input = build_input_set(InputSpec{shape, ctx.anchors[i]}, pca_points(ctx));
        const auto s = sample_reachable(ctx.net, input, cfg.count, cfg.seed + i, cfg.corner_fraction);
        auto r = report::sampled_json(s);
        r["sample"] = i;
        for (std::size_t d = 0; d < r["lower"].size(); ++d)
        {
            const double lo = r["lower"][d].get<double>();
            const double hi = r["upper"][d].get<double>();
            csv << i << ',' << d << ',' << fmt(lo) << ',' << fmt(hi) << ',' << fmt(hi - lo) << '\n';
        }
        results.push_back(std::move(r));
    }
    return {report::document("sample", std::move(results), metadata(cfg, ctx, elapsed(start))), csv.str()};
}

void emit(const RunConfig& cfg, const Output& out)
{
    const std::string text = cfg.format == "csv" ? out.csv : report::dump(out.document, cfg.deterministic) + "\n";
    if (cfg.out.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + cfg.out);
    f << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Zonotope reachability analysis for feed-forward ReLU networks"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto* verify_cmd = app.add_subcommand("verify", "Robustness / non-robustness certificates per sample");
    auto* rank_cmd = app.add_subcommand("rank", "Feature ranking by reachable-set volume");
    rank_cmd->alias("rank-features");
    auto* extents_cmd = app.add_subcommand("extents", "Per-output extents of the reachable set");
    auto* reliability_cmd = app.add_subcommand("reliability", "TA/FA rates over score thresholds");
    auto* matrix_cmd = app.add_subcommand("class-matrix", "Class-specific robustness percentages");
    auto* sample_cmd = app.add_subcommand("sample", "Sampling baseline of the reachable set");
    sample_cmd->alias("sample-oracle");
    for (auto* cmd : {verify_cmd, rank_cmd, extents_cmd, reliability_cmd, matrix_cmd, sample_cmd})
        add_common_options(*cmd, cfg);
    sample_cmd->add_option("--count", cfg.count, "Number of sampled inputs");
    sample_cmd->add_option("--corner-fraction", cfg.corner_fraction, "Share of corner samples")
        ->check(CLI::Range(0.0, 1.0));
    reliability_cmd->add_option("--thetas", cfg.thetas, "Threshold grid, comma-separated (default: sample scores)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        Output out;
        if (verify_cmd->parsed())
            out = cmd_verify(cfg);
        else if (rank_cmd->parsed())
            out = cmd_rank(cfg);
        else if (extents_cmd->parsed())
            out = cmd_extents(cfg);
        else if (reliability_cmd->parsed())
            out = cmd_reliability(cfg);
        else if (matrix_cmd->parsed())
            out = cmd_class_matrix(cfg);
        else
            out = cmd_sample(cfg);
        emit(cfg, out);
    }
    catch (const UsageError& e)
    {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
