#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowmap/analysis.hpp"
#include "flowmap/polyflow.hpp"
#include "flowmap/settings.hpp"

namespace flowmap::steane {

/// Location types of the [[7,1,3]] model, in canonical order.
enum class LocationKind : std::uint8_t { one, two, wait, measured, prep };
inline constexpr std::size_t kKinds = 5;

/// "1", "2", "w", "1m", "p".
std::string_view to_string(LocationKind k);
LocationKind parse_kind(std::string_view name);
const std::vector<std::string>& location_names();

enum class Gate : std::uint8_t {
    prep_z,
    prep_x,
    h,
    cnot,
    wait,
    meas_z,
    meas_x,
    gate,       ///< transversal one-qubit location with no frame action
    verify,     ///< accept an ancilla if its verifier flips lie in the even code
    correct_x,  ///< apply the X correction named by a Z-basis syndrome
    correct_z,  ///< apply the Z correction named by an X-basis syndrome
};
std::string_view to_string(Gate g);

enum class Schedule : std::uint8_t {
    sequential,  ///< data waits while each ancilla pair is prepared and verified
    pipelined    ///< ancillas are ready when the exRec starts; data waits only while coupled
};

enum class TwoQubitNoise : std::uint8_t {
    uniform15,  ///< uniform over the 15 nontrivial two-qubit Paulis
    each_qubit  ///< an independent uniform nontrivial Pauli on both qubits
};

struct EcOptions {
    Schedule schedule = Schedule::sequential;
    /// A rejected ancilla is re-prepared; with charging on, the data also
    /// waits through the repeated steps.
    bool charge_rejected_attempts = true;
    /// Prepare |+> as |0> followed by a (kind 1) Hadamard instead of a
    /// direct preparation.
    bool hadamard_plus_prep = false;
    int max_attempts = 1000;
    TwoQubitNoise two_qubit = TwoQubitNoise::uniform15;
};

struct Instruction {
    Gate gate = Gate::wait;
    LocationKind kind = LocationKind::wait;
    std::uint32_t q0 = 0;
    std::uint32_t q1 = 0;
    std::uint32_t step = 0;
    std::int32_t location = -1;  ///< index of the fallible location, -1 for controls
    std::int32_t record = -1;    ///< measurement record written, or first record read
    std::int32_t target = -1;    ///< verify: first instruction of the retried segment
    std::uint16_t segment = 0;   ///< ancilla preparation segment, 0 for none
    bool data_wait = false;
};

/// Timed Clifford circuit with its classical control. Immutable once built.
class QCircuit {
public:
    std::uint32_t qubits = 0;
    std::vector<Instruction> instructions;
    std::vector<std::uint32_t> data_blocks;  ///< first qubit of each 7-qubit data block
    std::uint32_t records = 0;
    /// Records holding the final transversal measurement (1m exRecs), else -1.
    std::int32_t output_record = -1;
    std::size_t ec_count = 0;
    std::string name;
    EcOptions options;

    /// Instruction index of every fallible location, in execution order.
    std::vector<std::uint32_t> locations;

    std::array<std::size_t, kKinds> census() const;
    std::uint32_t steps() const;

    /// One line per instruction: "t, gate, qubits, kind".
    std::string schedule_text() const;
};

/// One Steane EC on a single data block.
QCircuit build_ec(const EcOptions& options = {});

/// EC plus a transversal implementation of `kind`; kind 2 uses two ECs.
QCircuit build_exrec(LocationKind kind, const EcOptions& options = {});

/// A fault at one fallible location. For one-qubit locations bit 0 is X and
/// bit 1 is Z; two-qubit locations use bits 0-1 for the first qubit and
/// bits 2-3 for the second.
struct Fault {
    std::uint32_t location = 0;
    std::uint8_t pauli = 0;
};

struct Outcome {
    bool logical_error = false;
    bool aborted = false;  ///< an ancilla was rejected max_attempts times
    unsigned rejections = 0;
};

/// Deterministic frame propagation with the given faults (sorted by
/// location) followed by ideal decoding. Repeated ancilla attempts run
/// fault-free.
Outcome propagate_pauli(const QCircuit& c, std::span<const Fault> faults);

/// Number of nontrivial Paulis a location can suffer (3 or 15).
unsigned pauli_count(const QCircuit& c, std::uint32_t location);

struct McEstimate {
    FailureVector point;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double p_hat = 0.0;
    double stderr_ = 0.0;
    std::uint64_t rejections = 0;
};

/// Trials split into fixed chunks, each with its own Philox stream keyed by
/// (seed, chunk), so counts do not depend on `threads`.
inline constexpr std::uint64_t kChunkTrials = 1U << 14;

McEstimate mc_failure(const QCircuit& c, const FailureVector& rates, std::uint64_t trials,
                      std::uint64_t seed, unsigned threads = 1);

struct McTrip {
    std::string kind;
    std::string setting;
    std::uint64_t seed = 0;
    TripCurve curve;  ///< level 1, samples (gamma, p_hat)
    std::vector<McEstimate> estimates;
};

/// Level-1 TRIP of build_exrec(kind) under a setting. Every grid point uses
/// the same seed.
McTrip mc_trip(LocationKind kind, const Setting& setting, const std::vector<double>& gammas,
               std::uint64_t trials, std::uint64_t seed, const EcOptions& options = {},
               unsigned threads = 1);

struct FitResult {
    bool found = false;
    double c2 = kNaN;
    double c3 = 0.0;
    double value = kNaN;  ///< least positive root of fit(gamma) = gamma
    double ci_lo = kNaN;  ///< 95% interval by the delta method
    double ci_hi = kNaN;
    bool cubic = false;
    std::string message;
};

/// Weighted least squares c2 g^2 (+ c3 g^3) through the origin, with
/// binomial variances from a Laplace-smoothed p_hat.
FitResult fit_pseudothreshold(const std::vector<McEstimate>& points, bool cubic = false);

/// Unweighted fit on plain curve samples.
FitResult fit_pseudothreshold(const TripCurve& curve, bool cubic = false);

struct SlopeResult {
    double slope = kNaN;
    double stderr_ = kNaN;
    std::size_t points = 0;
};

/// Weighted regression of log p_hat on log gamma over points with failures.
SlopeResult loglog_slope(const std::vector<McEstimate>& points);

/// MapEvaluator over location_names() estimated by mc_failure, one exRec
/// per location; suitable for TIFD projections.
MapEvaluator mc_evaluator(std::uint64_t trials, std::uint64_t seed, const EcOptions& options = {},
                          unsigned threads = 1);

}  // namespace flowmap::steane
