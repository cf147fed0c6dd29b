#ifndef REACHZONO_DATASET_HPP_
#define REACHZONO_DATASET_HPP_

/**
 * @file dataset.hpp
 * @brief CSV datasets: one header row, float feature columns and an optional
 *        final integer column named "label".
 */

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "zonotope.hpp"

namespace reachzono
{

struct Dataset
{
    std::vector<std::string> feature_names;
    std::vector<Vector> features;
    std::optional<std::vector<std::size_t>> labels;

    std::size_t size() const { return features.size(); }
    std::size_t width() const { return feature_names.size(); }
};

namespace detail
{

inline std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

inline double parse_double(const std::string& s, const std::string& where)
{
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ParseError(where + ": \"" + s + "\" is not a finite number");
    return v;
}

} // namespace detail

inline Dataset load_csv(std::istream& in, const std::string& source = "dataset")
{
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    bool has_label = false;
    bool header_done = false;
    while (std::getline(in, line))
    {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        auto cells = detail::split_csv_line(line);
        if (!header_done)
        {
            header_done = true;
            if (!cells.empty() && cells.back() == "label")
            {
                has_label = true;
                cells.pop_back();
            }
            if (cells.empty())
                throw ParseError(source + ": header has no feature columns");
            ds.feature_names = std::move(cells);
            if (has_label)
                ds.labels.emplace();
            continue;
        }
        const auto expected = ds.feature_names.size() + (has_label ? 1 : 0);
        const auto where = source + " line " + std::to_string(line_no);
        if (cells.size() != expected)
            throw ParseError(where + ": expected " + std::to_string(expected) + " columns, found " +
                             std::to_string(cells.size()));
        Vector x(static_cast<Eigen::Index>(ds.feature_names.size()));
        for (std::size_t j = 0; j < ds.feature_names.size(); ++j)
            x[static_cast<Eigen::Index>(j)] = detail::parse_double(cells[j], where);
        if (has_label)
        {
            const double l = detail::parse_double(cells.back(), where);
            if (l < 0.0 || l != std::floor(l))
                throw ParseError(where + ": label must be a nonnegative integer");
            ds.labels->push_back(static_cast<std::size_t>(l));
        }
        ds.features.push_back(std::move(x));
    }
    if (ds.feature_names.empty())
        throw ParseError(source + ": missing header row");
    return ds;
}

inline Dataset load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("dataset: cannot open " + path);
    return load_csv(in, path);
}

} // namespace reachzono

#endif
