#include "flowmap/settings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace flowmap {

Setting::Setting(std::string name, std::vector<std::pair<std::string, double>> multipliers)
    : name_(std::move(name)), multipliers_(std::move(multipliers)) {
    for (std::size_t i = 0; i < multipliers_.size(); ++i) {
        const auto& [loc, m] = multipliers_[i];
        if (!std::isfinite(m) || m < 0.0) {
            throw ConfigurationError("setting '" + name_ + "': multiplier for '" + loc +
                                     "' must be finite and non-negative");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (multipliers_[j].first == loc) {
                throw ConfigurationError("setting '" + name_ + "': duplicate location '" + loc +
                                         "'");
            }
        }
    }
}

std::vector<std::string> Setting::variables() const {
    std::vector<std::string> out;
    for (const auto& [loc, _] : multipliers_) {
        out.push_back(loc);
    }
    return out;
}

bool Setting::covers(std::string_view location) const {
    return std::any_of(multipliers_.begin(), multipliers_.end(),
                       [&](const auto& m) { return m.first == location; });
}

double Setting::multiplier(std::string_view location) const {
    for (const auto& [loc, m] : multipliers_) {
        if (loc == location) {
            return m;
        }
    }
    throw ConfigurationError("setting '" + name_ + "' has no multiplier for '" +
                             std::string(location) + "'");
}

FailureVector Setting::apply(double gamma) const {
    if (!std::isfinite(gamma) || gamma < 0.0) {
        throw std::invalid_argument("setting parameter must be finite and non-negative");
    }
    std::vector<std::string> names;
    std::vector<double> values;
    for (const auto& [loc, m] : multipliers_) {
        names.push_back(loc);
        values.push_back(m * gamma);
    }
    return FailureVector(std::move(names), std::move(values));
}

std::vector<double> Setting::aligned(std::span<const std::string> order) const {
    std::vector<double> out;
    out.reserve(order.size());
    for (const auto& name : order) {
        out.push_back(multiplier(name));
    }
    return out;
}

Setting diagonal(const std::vector<std::string>& variables) {
    std::vector<std::pair<std::string, double>> m;
    for (const auto& v : variables) {
        m.emplace_back(v, 1.0);
    }
    return Setting("diagonal", std::move(m));
}

Setting steane_setting(const std::vector<std::string>& variables) {
    if (std::find(variables.begin(), variables.end(), "w") == variables.end()) {
        throw ConfigurationError("steane setting needs a wait location named 'w'");
    }
    std::vector<std::pair<std::string, double>> m;
    for (const auto& v : variables) {
        m.emplace_back(v, v == "w" ? 0.1 : 1.0);
    }
    return Setting("steane", std::move(m));
}

Setting axis(const std::vector<std::string>& variables, std::string_view location) {
    if (std::find(variables.begin(), variables.end(), location) == variables.end()) {
        throw ConfigurationError("axis setting: unknown location '" + std::string(location) +
                                 "'");
    }
    std::vector<std::pair<std::string, double>> m;
    for (const auto& v : variables) {
        m.emplace_back(v, v == location ? 1.0 : 0.0);
    }
    return Setting("axis:" + std::string(location), std::move(m));
}

Setting parse_setting(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigurationError(std::string("setting file: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string()) {
        throw ConfigurationError("setting file: missing string field 'name'");
    }
    if (!doc.contains("multipliers") || !doc["multipliers"].is_object()) {
        throw ConfigurationError("setting file: missing object field 'multipliers'");
    }
    std::vector<std::pair<std::string, double>> m;
    for (const auto& [loc, value] : doc["multipliers"].items()) {
        if (!value.is_number()) {
            throw ConfigurationError("setting file: multiplier for '" + loc +
                                     "' must be a number");
        }
        m.emplace_back(loc, value.get<double>());
    }
    return Setting(doc["name"].get<std::string>(), std::move(m));
}

std::string serialize_setting(const Setting& s) {
    nlohmann::json doc;
    doc["name"] = s.name();
    doc["multipliers"] = nlohmann::json::object();
    for (const auto& [loc, m] : s.multipliers()) {
        doc["multipliers"][loc] = m;
    }
    return doc.dump();
}

Setting resolve_setting(std::string_view spec, const std::vector<std::string>& variables) {
    if (spec == "diagonal") {
        return diagonal(variables);
    }
    if (spec == "steane") {
        return steane_setting(variables);
    }
    if (spec.starts_with("axis:")) {
        return axis(variables, spec.substr(5));
    }
    if (spec.starts_with("file:")) {
        const std::string path(spec.substr(5));
        std::ifstream in(path);
        if (!in) {
            throw ConfigurationError("cannot read setting file '" + path + "'");
        }
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_setting(buf.str());
    }
    throw ConfigurationError("unknown setting '" + std::string(spec) +
                             "' (expected diagonal, steane, axis:<loc> or file:<path>)");
}

}  // namespace flowmap
