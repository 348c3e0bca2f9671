#include <algorithm>
#include <cstdio>

#include "flowmap/polyflow.hpp"
#include "json.hpp"

namespace flowmap {

namespace {

using nlohmann::json;

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ":" + std::to_string(col);
}

Coefficient read_coefficient(const json& c, const std::string& where) {
    try {
        if (c.is_string()) {
            return Coefficient::parse(c.get<std::string>());
        }
        if (c.is_number_integer()) {
            return Coefficient(c.get<long long>());
        }
        if (c.is_number_float()) {
            return Coefficient::real(c.get<double>());
        }
    } catch (const std::invalid_argument& e) {
        throw ParseError(where, e.what());
    }
    throw ParseError(where, "coefficient must be a string or number");
}

}  // namespace

FlowMap parse_flowmap(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(line_column(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
    }
    if (!doc.is_object()) {
        throw ParseError("$", "document must be a JSON object");
    }
    if (!doc.contains("variables") || !doc["variables"].is_array()) {
        throw ParseError("variables", "missing or not an array");
    }
    std::vector<std::string> variables;
    for (std::size_t i = 0; i < doc["variables"].size(); ++i) {
        const auto& v = doc["variables"][i];
        if (!v.is_string() || v.get<std::string>().empty()) {
            throw ParseError("variables[" + std::to_string(i) + "]", "must be a non-empty string");
        }
        if (std::find(variables.begin(), variables.end(), v.get<std::string>()) !=
            variables.end()) {
            throw ParseError("variables[" + std::to_string(i) + "]", "duplicate variable");
        }
        variables.push_back(v.get<std::string>());
    }
    if (!doc.contains("maps") || !doc["maps"].is_object()) {
        throw ParseError("maps", "missing or not an object");
    }
    const auto& maps = doc["maps"];
    for (const auto& [key, _] : maps.items()) {
        if (std::find(variables.begin(), variables.end(), key) == variables.end()) {
            throw ParseError("maps." + key, "component for undeclared variable");
        }
    }

    std::vector<Polynomial> components;
    for (const auto& name : variables) {
        const std::string base = "maps." + name;
        if (!maps.contains(name)) {
            throw ParseError(base, "missing component");
        }
        const auto& terms = maps[name];
        if (!terms.is_array()) {
            throw ParseError(base, "must be an array of terms");
        }
        Polynomial p(variables);
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const std::string where = base + "[" + std::to_string(t) + "]";
            const auto& term = terms[t];
            if (!term.is_object() || !term.contains("c")) {
                throw ParseError(where, "term needs a coefficient \"c\"");
            }
            const Coefficient c = read_coefficient(term["c"], where + ".c");
            Exponents e(variables.size(), 0);
            if (term.contains("e")) {
                const auto& exps = term["e"];
                if (!exps.is_object()) {
                    throw ParseError(where + ".e", "must be an object");
                }
                for (const auto& [var, power] : exps.items()) {
                    const auto it = std::find(variables.begin(), variables.end(), var);
                    if (it == variables.end()) {
                        throw ParseError(where + ".e." + var, "unknown variable");
                    }
                    if (!power.is_number_integer() || power.get<long long>() < 0) {
                        throw ParseError(where + ".e." + var,
                                         "exponent must be a non-negative integer");
                    }
                    e[static_cast<std::size_t>(it - variables.begin())] =
                        static_cast<std::uint32_t>(power.get<long long>());
                }
            }
            p.add_term(e, c);  // duplicate exponent vectors merge here
        }
        components.push_back(std::move(p));
    }
    return FlowMap(std::move(variables), std::move(components));
}

std::string serialize_flowmap(const FlowMap& f) {
    std::vector<std::string> sorted = f.variables();
    std::sort(sorted.begin(), sorted.end());
    json doc;
    doc["variables"] = sorted;
    json maps = json::object();
    for (const auto& name : sorted) {
        const Polynomial p = f.component(name).reindexed(sorted);
        json terms = json::array();
        for (const auto& [e, c] : p.terms()) {
            json exps = json::object();
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (e[i] != 0) {
                    exps[sorted[i]] = e[i];
                }
            }
            terms.push_back({{"c", c.to_string()}, {"e", exps}});
        }
        maps[name] = terms;
    }
    doc["maps"] = maps;
    return doc.dump() + "\n";
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string flowmap_hash(const FlowMap& f) { return fnv1a_hex(serialize_flowmap(f)); }

}  // namespace flowmap
