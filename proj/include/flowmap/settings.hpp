#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowmap/polyflow.hpp"

namespace flowmap {

/// Invalid setting definition (negative multiplier, missing location, ...).
struct ConfigurationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Linear parameterization of all location failure rates by one scalar:
/// gamma_l = multiplier_l * gamma.
class Setting {
public:
    Setting() = default;
    Setting(std::string name, std::vector<std::pair<std::string, double>> multipliers);

    const std::string& name() const { return name_; }
    const std::vector<std::pair<std::string, double>>& multipliers() const { return multipliers_; }
    std::vector<std::string> variables() const;
    bool covers(std::string_view location) const;
    double multiplier(std::string_view location) const;

    /// Throws std::invalid_argument for negative or non-finite gamma.
    FailureVector apply(double gamma) const;

    /// Multipliers reordered to `order`; throws ConfigurationError on a miss.
    std::vector<double> aligned(std::span<const std::string> order) const;

private:
    std::string name_;
    std::vector<std::pair<std::string, double>> multipliers_;
};

Setting diagonal(const std::vector<std::string>& variables);

/// Every location at gamma except the wait location "w" at gamma/10.
Setting steane_setting(const std::vector<std::string>& variables);

/// gamma on `location`, zero elsewhere.
Setting axis(const std::vector<std::string>& variables, std::string_view location);

/// {"name":"steane","multipliers":{"1":1,"2":1,"w":0.1,"1m":1,"p":1}}
Setting parse_setting(std::string_view text);
std::string serialize_setting(const Setting& s);

/// "diagonal", "steane", "axis:<location>", or "file:<path>".
Setting resolve_setting(std::string_view spec, const std::vector<std::string>& variables);

}  // namespace flowmap
