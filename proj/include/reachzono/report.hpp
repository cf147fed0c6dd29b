#ifndef REACHZONO_REPORT_HPP_
#define REACHZONO_REPORT_HPP_

/**
 * @file report.hpp
 * @brief JSON encodings of analysis results (schema "reachzono/1").
 *
 * Wall-clock data lives only under "metadata"; in deterministic mode it is
 * left out and every floating-point number is written with 17 significant
 * digits, so identical runs produce byte-identical documents.
 */

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "oracle.hpp"
#include "relu_reach.hpp"

namespace reachzono::report
{

inline constexpr const char* kSchema = "reachzono/1";

using nlohmann::json;

inline json number(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

inline json vector_json(const Vector& v)
{
    auto a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(number(v[i]));
    return a;
}

inline json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

inline json scores_json(const std::optional<std::vector<ClassScore>>& scores)
{
    if (!scores)
        return nullptr;
    auto a = json::array();
    for (const auto& s : *scores)
        a.push_back({{"class", s.cls}, {"score", number(s.score)}});
    return a;
}

inline json verification_json(const VerificationReport& r)
{
    return {{"predicted", r.predicted},
            {"logits", vector_json(r.logits)},
            {"scores_over", scores_json(r.scores_over)},
            {"scores_under", scores_json(r.scores_under)},
            {"certificate", to_string(r.certificate)},
            {"robust_against", r.robust_against},
            {"nonrobust_against", r.nonrobust_against},
            {"over_zonotopes", r.over_zonotopes},
            {"under_zonotopes", r.under_zonotopes},
            {"diagnostics", r.diagnostics}};
}

inline json reliability_json(const ReliabilityCurve& c)
{
    auto ta = json::array();
    auto fa = json::array();
    for (std::size_t i = 0; i < c.thresholds.size(); ++i)
    {
        ta.push_back(optional_number(c.true_above[i]));
        fa.push_back(optional_number(c.false_above[i]));
    }
    auto thetas = json::array();
    for (const double t : c.thresholds)
        thetas.push_back(number(t));
    return {{"thresholds", thetas}, {"ta_rate", ta}, {"fa_rate", fa}, {"best_threshold", number(c.best_threshold)}};
}

inline json ranking_json(const std::vector<FeatureVolume>& ranking)
{
    auto a = json::array();
    std::size_t rank = 1;
    for (const auto& f : ranking)
    {
        json e{{"rank", rank++}, {"feature", f.feature}, {"volume", optional_number(f.volume)}};
        if (!f.error.empty())
            e["error"] = f.error;
        a.push_back(std::move(e));
    }
    return a;
}

inline json class_matrix_json(const ClassMatrix& m)
{
    const auto grid = [](const std::vector<std::vector<std::optional<double>>>& g) {
        auto rows = json::array();
        for (const auto& row : g)
        {
            auto r = json::array();
            for (const auto& v : row)
                r.push_back(optional_number(v));
            rows.push_back(std::move(r));
        }
        return rows;
    };
    return {{"classes", m.classes}, {"counts", m.counts}, {"robust", grid(m.robust)}, {"nonrobust", grid(m.nonrobust)}};
}

inline json sampled_json(const SampledSet& s)
{
    Vector lo = s.points.front();
    Vector hi = s.points.front();
    for (const auto& p : s.points)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {{"count", s.count}, {"seed", s.seed}, {"lower", vector_json(lo)}, {"upper", vector_json(hi)},
            {"extents", vector_json(hi - lo)}};
}

/// Top-level document: {"schema", "command", "results", "metadata"}.
inline json document(const std::string& command, json results, json metadata)
{
    return {{"schema", kSchema}, {"command", command}, {"results", std::move(results)},
            {"metadata", std::move(metadata)}};
}

namespace detail
{

inline void write_deterministic(std::ostringstream& out, const json& j, int indent, int depth)
{
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type())
    {
    case json::value_t::object:
    {
        if (j.empty())
        {
            out << "{}";
            return;
        }
        out << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it)
        {
            if (!first)
                out << ",\n";
            first = false;
            out << pad << json(it.key()).dump() << ": ";
            write_deterministic(out, it.value(), indent, depth + 1);
        }
        out << '\n' << close_pad << '}';
        return;
    }
    case json::value_t::array:
    {
        if (j.empty())
        {
            out << "[]";
            return;
        }
        out << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i)
        {
            if (i > 0)
                out << ",\n";
            out << pad;
            write_deterministic(out, j[i], indent, depth + 1);
        }
        out << '\n' << close_pad << ']';
        return;
    }
    case json::value_t::number_float:
    {
        const double v = j.get<double>();
        if (!std::isfinite(v))
        {
            out << "null";
            return;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
        return;
    }
    default: out << j.dump(); return;
    }
}

} // namespace detail

inline std::string dump(const json& j, bool deterministic)
{
    if (!deterministic)
        return j.dump(2);
    std::ostringstream out;
    detail::write_deterministic(out, j, 2, 0);
    return out.str();
}

} // namespace reachzono::report

#endif
