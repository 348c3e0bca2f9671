#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace flowmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNoConvergence = 2;

/// Everything that determines an artifact. Output paths and the thread
/// count are run-local and are not embedded.
struct RunConfig {
    std::string command;
    std::string source = "builtin:tmr";
    std::string location;
    std::string setting;
    int level = 0;  ///< 0 selects the command default
    std::vector<int> levels;
    std::string grid;
    std::string ygrid;
    std::size_t resolution = 200;
    std::uint64_t trials = 0;
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::string plane;
    std::string fixed;
    std::string start;
    std::string schedule = "sequential";
    bool hadamard_prep = false;
    bool asymptotic = false;
    bool cubic = false;

    std::string out;
    std::string svg;
    std::string netlist;
    unsigned threads = 0;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);

/// Reads the embedded provenance object of an artifact (CSV header line or
/// the "provenance" key of a JSON document).
nlohmann::json read_provenance(const std::string& path);

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowmap::cli
