#ifndef REACHZONO_NETWORK_HPP_
#define REACHZONO_NETWORK_HPP_

/**
 * @file network.hpp
 * @brief Dense feed-forward ReLU networks and their JSON model format.
 *
 * Model document:
 *
 *     {"name": "optional", "task": "classification" | "regression" | "autoencoder",
 *      "layers": [{"weights": [[...], ...], "bias": [...]}, ...]}
 *
 * Weights are row-major, out x in. ReLU is applied after every layer except
 * the last.
 */

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "zonotope.hpp"

namespace reachzono
{

enum class Task
{
    Classification,
    Regression,
    Autoencoder
};

inline const char* to_string(Task t)
{
    switch (t)
    {
    case Task::Classification: return "classification";
    case Task::Regression: return "regression";
    case Task::Autoencoder: return "autoencoder";
    }
    return "classification";
}

struct Layer
{
    Matrix weights;
    Vector bias;

    std::size_t in_width() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_width() const { return static_cast<std::size_t>(weights.rows()); }
};

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

class Network
{
public:
    Network(std::vector<Layer> layers, Task task = Task::Classification, std::optional<std::string> name = {})
        : layers_(std::move(layers)), task_(task), name_(std::move(name))
    {
        if (layers_.empty())
            throw InvalidArgument("network: at least one layer is required");
        for (std::size_t k = 0; k < layers_.size(); ++k)
        {
            const auto& l = layers_[k];
            const auto where = "network: layer " + std::to_string(k);
            if (l.weights.rows() == 0 || l.weights.cols() == 0)
                throw InvalidArgument(where + ": empty weight matrix");
            if (l.bias.size() != l.weights.rows())
                throw DimensionError(where + ": bias length " + std::to_string(l.bias.size()) + " does not match " +
                                     std::to_string(l.weights.rows()) + " output neurons");
            if (!l.weights.allFinite() || !l.bias.allFinite())
                throw InvalidArgument(where + ": non-finite parameter");
            if (k > 0 && l.in_width() != layers_[k - 1].out_width())
                throw DimensionError(where + ": expects " + std::to_string(l.in_width()) +
                                     " inputs but layer " + std::to_string(k - 1) + " produces " +
                                     std::to_string(layers_[k - 1].out_width()));
        }
    }

    const std::vector<Layer>& layers() const { return layers_; }
    Task task() const { return task_; }
    const std::optional<std::string>& name() const { return name_; }

    std::size_t input_width() const { return layers_.front().in_width(); }
    std::size_t output_width() const { return layers_.back().out_width(); }

    /// Exact evaluation: affine layers with ReLU in between, none after the last.
    Vector forward(const Vector& x) const
    {
        if (static_cast<std::size_t>(x.size()) != input_width())
            throw DimensionError("forward: input has length " + std::to_string(x.size()) + ", network expects " +
                                 std::to_string(input_width()));
        Vector v = x;
        for (std::size_t k = 0; k < layers_.size(); ++k)
        {
            v = layers_[k].weights * v + layers_[k].bias;
            if (k + 1 < layers_.size())
                v = v.unaryExpr(&relu);
        }
        return v;
    }

private:
    std::vector<Layer> layers_;
    Task task_;
    std::optional<std::string> name_;
};

namespace detail
{

inline std::string line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    {
        if (text[i] == '\n')
        {
            ++line;
            column = 1;
        }
        else
        {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline double json_number(const nlohmann::json& v, const std::string& where)
{
    if (!v.is_number())
        throw ParseError(where + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw ParseError(where + ": non-finite number");
    return d;
}

} // namespace detail

inline Network network_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw ParseError("model: top level must be an object");

    Task task = Task::Classification;
    if (doc.contains("task"))
    {
        const auto& t = doc.at("task");
        if (!t.is_string())
            throw ParseError("model: field \"task\" must be a string");
        const auto s = t.get<std::string>();
        if (s == "classification")
            task = Task::Classification;
        else if (s == "regression")
            task = Task::Regression;
        else if (s == "autoencoder")
            task = Task::Autoencoder;
        else
            throw ParseError("model: unknown task \"" + s + "\"");
    }

    std::optional<std::string> name;
    if (doc.contains("name") && !doc.at("name").is_null())
    {
        if (!doc.at("name").is_string())
            throw ParseError("model: field \"name\" must be a string");
        name = doc.at("name").get<std::string>();
    }

    if (!doc.contains("layers") || !doc.at("layers").is_array())
        throw ParseError("model: missing array field \"layers\"");

    std::vector<Layer> layers;
    const auto& jl = doc.at("layers");
    for (std::size_t k = 0; k < jl.size(); ++k)
    {
        const auto where = "model: layer " + std::to_string(k);
        const auto& entry = jl[k];
        if (!entry.is_object() || !entry.contains("weights") || !entry.contains("bias"))
            throw ParseError(where + ": expected an object with \"weights\" and \"bias\"");
        const auto& jw = entry.at("weights");
        const auto& jb = entry.at("bias");
        if (!jw.is_array() || jw.empty() || !jb.is_array())
            throw ParseError(where + ": \"weights\" must be a non-empty array of rows and \"bias\" an array");
        if (!jw[0].is_array())
            throw ParseError(where + ": weights row 0 is not an array");
        const auto rows = static_cast<Eigen::Index>(jw.size());
        const auto cols = static_cast<Eigen::Index>(jw[0].size());
        Layer layer{Matrix(rows, cols), Vector(static_cast<Eigen::Index>(jb.size()))};
        for (Eigen::Index r = 0; r < rows; ++r)
        {
            const auto& row = jw[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
                throw ParseError(where + ": weights row " + std::to_string(r) + " has inconsistent length");
            for (Eigen::Index c = 0; c < cols; ++c)
                layer.weights(r, c) = detail::json_number(row[static_cast<std::size_t>(c)],
                                                          where + " weights[" + std::to_string(r) + "][" +
                                                              std::to_string(c) + "]");
        }
        for (std::size_t i = 0; i < jb.size(); ++i)
            layer.bias[static_cast<Eigen::Index>(i)] =
                detail::json_number(jb[i], where + " bias[" + std::to_string(i) + "]");
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers), task, std::move(name));
}

inline Network load_model(std::istream& in)
{
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ParseError("model: JSON syntax error at " + detail::line_column(text, e.byte) + ": " + e.what());
    }
    return network_from_json(doc);
}

inline Network load_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("model: cannot open " + path);
    return load_model(in);
}

inline nlohmann::json network_to_json(const Network& net)
{
    nlohmann::json doc;
    if (net.name())
        doc["name"] = *net.name();
    doc["task"] = to_string(net.task());
    auto layers = nlohmann::json::array();
    for (const auto& l : net.layers())
    {
        auto rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        {
            auto row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
                row.push_back(l.weights(r, c));
            rows.push_back(std::move(row));
        }
        auto bias = nlohmann::json::array();
        for (Eigen::Index i = 0; i < l.bias.size(); ++i)
            bias.push_back(l.bias[i]);
        layers.push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
    }
    doc["layers"] = std::move(layers);
    return doc;
}

inline void save_model(const Network& net, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("model: cannot write " + path);
    out << network_to_json(net).dump(2) << '\n';
}

} // namespace reachzono

#endif
