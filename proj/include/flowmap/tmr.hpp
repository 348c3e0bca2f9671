#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowmap/polyflow.hpp"

namespace flowmap::tmr {

/// More fallible locations than the exhaustive enumeration accepts.
struct EnumerationTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two derivations of the same component disagree.
struct DerivationInconsistency : std::logic_error {
    using std::logic_error::logic_error;
};

inline constexpr std::size_t kMaxFallible = 24;

enum class Kind { wire, voter, fanout };

/// Codeword inputs a failure predicate quantifies over: every bundle
/// encoding 0 or every bundle encoding 1, or all logical combinations.
enum class InputSet { uniform, all };

/// Location-type letter: "w", "v" or "f".
std::string to_string(Kind k);

/// One gate. Wires are 1->1, voters 3->1, fanouts 1->3; ports are bit ids.
struct Location {
    Kind kind = Kind::wire;
    std::vector<std::size_t> in;
    std::vector<std::size_t> out;
    bool fallible = true;
};

/// Bit-level network. Inputs and outputs come in codeword bundles of three
/// bits, one bundle per logical bit. Locations are in topological order.
class Circuit {
public:
    Circuit(Kind implements, std::size_t logical_inputs);

    Kind implements() const { return implements_; }
    std::size_t bit_count() const { return bits_; }
    const std::vector<std::size_t>& inputs() const { return inputs_; }
    const std::vector<std::size_t>& outputs() const { return outputs_; }
    const std::vector<Location>& locations() const { return locations_; }

    /// Indices into locations() of the fallible ones, in order.
    std::vector<std::size_t> fallible() const;

    /// Appends a location reading `in`; returns its fresh output bits.
    std::vector<std::size_t> add(Kind kind, std::vector<std::size_t> in, bool fallible);
    void set_outputs(std::vector<std::size_t> outputs) { outputs_ = std::move(outputs); }

    /// Runs the network. Bit k of `failed` refers to fallible()[k]; a failed
    /// location computes its output and then flips it.
    std::vector<bool> simulate(const std::vector<bool>& input_bits, unsigned long long failed) const;

    /// The ideal function of the implemented location on logical bits.
    std::vector<bool> ideal(const std::vector<bool>& logical) const;

    /// True when some codeword input from `inputs` decodes to the wrong
    /// logical output.
    bool fails(unsigned long long failed, InputSet inputs = InputSet::uniform) const;

    /// Fault-free run reproduces ideal() on every logical input.
    bool functional() const;

    /// One location per line: "id kind in-ports -> out-ports".
    std::string netlist() const;

private:
    Kind implements_;
    std::size_t bits_ = 0;
    std::size_t logical_inputs_ = 0;
    std::vector<std::size_t> inputs_;
    std::vector<std::size_t> outputs_;
    std::vector<Location> locations_;
    std::vector<std::size_t> fallible_;
};

/// Replacement rule R(kind) for the [3,1,3] repetition code.
Circuit build_replacement(Kind kind);

struct Enumeration {
    Polynomial failure;
    Polynomial success;
    std::size_t patterns = 0;
    std::size_t failing = 0;
};

/// Exhaustive fault-pattern enumeration over variables {w, v}.
Enumeration enumerate(const Circuit& c, InputSet inputs = InputSet::uniform, unsigned threads = 1);
Polynomial enumerate_flow_polynomial(const Circuit& c, InputSet inputs = InputSet::uniform,
                                     unsigned threads = 1);

/// w -> v and v -> 3v^2(1-v) + v^3 in a polynomial over {w, v}.
Polynomial voter_map_by_substitution(const Polynomial& wire_poly);

/// Exact [3,1,3] flow map over {w, v}; the voter component is derived by
/// substitution and checked against direct enumeration of R(v).
const FlowMap& tmr_flow_map();

}  // namespace flowmap::tmr

namespace flowmap {

/// The hypothetical two-gate map: a fault-tolerant u uses two u and two v
/// gates, a fault-tolerant v three of each; both survive any single failure.
FlowMap uv_example_map();

}  // namespace flowmap
