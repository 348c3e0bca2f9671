#include "flowmap/steane.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "flowmap/parallel.hpp"
#include "flowmap/philox.hpp"

namespace flowmap::steane {

namespace {

constexpr std::uint32_t kBlock = 7;

// Hamming syndrome: column j of the parity-check matrix is binary(j + 1).
unsigned syndrome(const std::uint8_t* bits) {
    unsigned s = 0;
    for (unsigned i = 0; i < kBlock; ++i) {
        if (bits[i]) {
            s ^= i + 1;
        }
    }
    return s;
}

unsigned parity(const std::uint8_t* bits) {
    unsigned p = 0;
    for (unsigned i = 0; i < kBlock; ++i) {
        p ^= bits[i];
    }
    return p;
}

// True when a single-error correction leaves an odd-weight residual.
bool decodes_to_error(std::uint8_t* bits) {
    const unsigned s = syndrome(bits);
    if (s != 0) {
        bits[s - 1] ^= 1;
    }
    return parity(bits) != 0;
}

bool is_two_qubit(Gate g) { return g == Gate::cnot; }

bool is_control(Gate g) {
    return g == Gate::verify || g == Gate::correct_x || g == Gate::correct_z;
}

// Encoder rounds for |0>: pivots 3, 1, 0 span the rows of the parity-check
// matrix; three rounds of disjoint CNOTs.
constexpr std::uint32_t kPivots[3] = {3, 1, 0};
constexpr std::uint32_t kRounds[3][3] = {{4, 5, 6}, {5, 6, 2}, {6, 2, 4}};

class Builder {
public:
    explicit Builder(const EcOptions& options) : options_(options) {}

    std::uint32_t block(bool data, std::uint16_t segment, std::uint32_t first, std::uint32_t last) {
        const std::uint32_t base = static_cast<std::uint32_t>(life_.size());
        for (std::uint32_t i = 0; i < kBlock; ++i) {
            life_.push_back({first, last});
            data_.push_back(data);
            segment_of_.push_back(segment);
        }
        return base;
    }

    void op(std::uint32_t step, Gate gate, LocationKind kind, std::uint32_t q0,
            std::uint32_t q1 = 0, std::int32_t record = -1) {
        grow(step);
        Instruction ins;
        ins.gate = gate;
        ins.kind = kind;
        ins.q0 = q0;
        ins.q1 = q1;
        ins.step = step;
        ins.record = record;
        ins.segment = segment_of_[q0];
        ops_[step].push_back(ins);
    }

    void control(std::uint32_t step, Gate gate, std::int32_t record, std::uint32_t q0,
                 std::uint16_t segment = 0, std::uint32_t retry_step = 0) {
        grow(step);
        Instruction ins;
        ins.gate = gate;
        ins.q0 = q0;
        ins.step = step;
        ins.record = record;
        ins.segment = segment;
        ins.target = static_cast<std::int32_t>(retry_step);  // resolved in finish()
        controls_[step].push_back(ins);
    }

    std::int32_t records(std::uint32_t n) {
        const auto r = static_cast<std::int32_t>(records_);
        records_ += n;
        return r;
    }

    void prepare(std::uint32_t step, std::uint32_t q, bool plus) {
        if (plus && options_.hadamard_plus_prep) {
            op(step, Gate::prep_z, LocationKind::prep, q);
            op(step, Gate::h, LocationKind::one, q);
        } else {
            op(step, plus ? Gate::prep_x : Gate::prep_z, LocationKind::prep, q);
        }
    }

    // Logical |0> (plus = false) or |+> (plus = true) over steps t..t+3.
    void encode(std::uint32_t base, bool plus, std::uint32_t t) {
        for (std::uint32_t i = 0; i < kBlock; ++i) {
            const bool pivot = std::find(std::begin(kPivots), std::end(kPivots), i) !=
                               std::end(kPivots);
            prepare(t, base + i, pivot != plus);
        }
        for (std::uint32_t r = 0; r < 3; ++r) {
            for (std::uint32_t k = 0; k < 3; ++k) {
                const std::uint32_t a = base + kPivots[k];
                const std::uint32_t b = base + kRounds[r][k];
                if (plus) {
                    op(t + 1 + r, Gate::cnot, LocationKind::two, b, a);
                } else {
                    op(t + 1 + r, Gate::cnot, LocationKind::two, a, b);
                }
            }
        }
    }

    // One syndrome half on data block `data`. x_half extracts the X-error
    // syndrome with a |+> ancilla; otherwise the Z-error syndrome with |0>.
    void half(std::uint32_t data, bool x_half, std::uint32_t prep, std::uint32_t couple,
              std::uint32_t measure) {
        const auto segment = static_cast<std::uint16_t>(++segments_);
        const std::uint32_t anc = block(false, segment, prep, measure);
        const std::uint32_t ver = block(false, segment, prep, prep + 5);
        encode(anc, x_half, prep);
        encode(ver, x_half, prep);
        const std::int32_t vrec = records(kBlock);
        for (std::uint32_t i = 0; i < kBlock; ++i) {
            if (x_half) {
                op(prep + 4, Gate::cnot, LocationKind::two, ver + i, anc + i);
                op(prep + 5, Gate::meas_x, LocationKind::measured, ver + i, 0, vrec + i);
            } else {
                op(prep + 4, Gate::cnot, LocationKind::two, anc + i, ver + i);
                op(prep + 5, Gate::meas_z, LocationKind::measured, ver + i, 0, vrec + i);
            }
        }
        control(prep + 5, Gate::verify, vrec, ver, segment, prep);
        const std::int32_t arec = records(kBlock);
        for (std::uint32_t i = 0; i < kBlock; ++i) {
            if (x_half) {
                op(couple, Gate::cnot, LocationKind::two, data + i, anc + i);
                op(measure, Gate::meas_z, LocationKind::measured, anc + i, 0, arec + i);
            } else {
                op(couple, Gate::cnot, LocationKind::two, anc + i, data + i);
                op(measure, Gate::meas_x, LocationKind::measured, anc + i, 0, arec + i);
            }
        }
        control(measure, x_half ? Gate::correct_x : Gate::correct_z, arec, data);
    }

    void ec(std::uint32_t data) {
        ++ec_count_;
        half(data, true, 0, 6, 7);
        if (options_.schedule == Schedule::sequential) {
            half(data, false, 8, 14, 15);
        } else {
            half(data, false, 0, 7, 8);
        }
    }

    bool sequential() const { return options_.schedule == Schedule::sequential; }
    std::uint32_t data_start() const { return sequential() ? 0 : 6; }
    std::uint32_t gate_step() const { return sequential() ? 16 : 9; }

    QCircuit finish(std::string name, std::vector<std::uint32_t> data_blocks,
                    std::int32_t output_record) {
        QCircuit c;
        c.name = std::move(name);
        c.options = options_;
        c.qubits = static_cast<std::uint32_t>(life_.size());
        c.data_blocks = std::move(data_blocks);
        c.records = records_;
        c.output_record = output_record;
        c.ec_count = ec_count_;
        std::vector<std::uint32_t> step_start(ops_.size());
        std::vector<std::uint8_t> busy(life_.size());
        for (std::uint32_t t = 0; t < ops_.size(); ++t) {
            step_start[t] = static_cast<std::uint32_t>(c.instructions.size());
            std::fill(busy.begin(), busy.end(), 0);
            for (const auto& ins : ops_[t]) {
                c.instructions.push_back(ins);
                busy[ins.q0] = 1;
                if (is_two_qubit(ins.gate)) {
                    busy[ins.q1] = 1;
                }
            }
            for (std::uint32_t q = 0; q < life_.size(); ++q) {
                if (!busy[q] && life_[q].first <= t && t <= life_[q].second) {
                    Instruction w;
                    w.gate = Gate::wait;
                    w.kind = LocationKind::wait;
                    w.q0 = q;
                    w.step = t;
                    w.segment = segment_of_[q];
                    w.data_wait = data_[q];
                    c.instructions.push_back(w);
                }
            }
            for (auto ins : controls_[t]) {
                if (ins.gate == Gate::verify) {
                    ins.target = static_cast<std::int32_t>(step_start[ins.target]);
                } else {
                    ins.target = -1;
                }
                c.instructions.push_back(ins);
            }
        }
        for (std::uint32_t i = 0; i < c.instructions.size(); ++i) {
            auto& ins = c.instructions[i];
            if (!is_control(ins.gate)) {
                ins.location = static_cast<std::int32_t>(c.locations.size());
                c.locations.push_back(i);
            }
        }
        return c;
    }

private:
    void grow(std::uint32_t step) {
        if (ops_.size() <= step) {
            ops_.resize(step + 1);
            controls_.resize(step + 1);
        }
    }

    EcOptions options_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> life_;
    std::vector<bool> data_;
    std::vector<std::uint16_t> segment_of_;
    std::vector<std::vector<Instruction>> ops_;
    std::vector<std::vector<Instruction>> controls_;
    std::uint32_t records_ = 0;
    std::uint32_t segments_ = 0;
    std::size_t ec_count_ = 0;
};

std::uint8_t draw_pauli(Philox& rng, bool two_qubit, TwoQubitNoise model) {
    if (!two_qubit) {
        return static_cast<std::uint8_t>(1 + rng.below(3));
    }
    if (model == TwoQubitNoise::uniform15) {
        return static_cast<std::uint8_t>(1 + rng.below(15));
    }
    const auto a = 1 + rng.below(3);
    const auto b = 1 + rng.below(3);
    return static_cast<std::uint8_t>(a | (b << 2));
}

// Frame simulator. Holds scratch state so one instance serves many trials.
class Simulator {
public:
    explicit Simulator(const QCircuit& c)
        : c_(c), x_(c.qubits), z_(c.qubits), rec_(c.records) {}

    // `faults` must be sorted by location. With rng == nullptr repeated
    // ancilla attempts are fault-free.
    Outcome run(std::span<const Fault> faults, const std::array<double, kKinds>* rates,
                Philox* rng) {
        std::fill(x_.begin(), x_.end(), 0);
        std::fill(z_.begin(), z_.end(), 0);
        std::fill(rec_.begin(), rec_.end(), 0);
        Outcome out;
        std::size_t next = 0;
        const auto& prog = c_.instructions;
        for (std::size_t i = 0; i < prog.size(); ++i) {
            const auto& ins = prog[i];
            if (!is_control(ins.gate)) {
                std::uint8_t pauli = 0;
                while (next < faults.size() &&
                       faults[next].location == static_cast<std::uint32_t>(ins.location)) {
                    pauli ^= faults[next].pauli;
                    ++next;
                }
                execute(ins, pauli);
                continue;
            }
            if (ins.gate == Gate::verify) {
                int attempts = 1;
                while (!accepted(ins)) {
                    ++out.rejections;
                    if (++attempts > c_.options.max_attempts) {
                        out.aborted = true;
                        out.logical_error = true;
                        return out;
                    }
                    retry(ins, i, rates, rng);
                }
            } else {
                const unsigned s = syndrome(&rec_[ins.record]);
                if (s != 0) {
                    (ins.gate == Gate::correct_x ? x_ : z_)[ins.q0 + s - 1] ^= 1;
                }
            }
        }
        out.logical_error = verdict();
        return out;
    }

private:
    void apply(const Instruction& ins, std::uint8_t pauli) {
        x_[ins.q0] ^= pauli & 1U;
        z_[ins.q0] ^= (pauli >> 1) & 1U;
        if (is_two_qubit(ins.gate)) {
            x_[ins.q1] ^= (pauli >> 2) & 1U;
            z_[ins.q1] ^= (pauli >> 3) & 1U;
        }
    }

    void execute(const Instruction& ins, std::uint8_t pauli) {
        switch (ins.gate) {
            case Gate::prep_z:
            case Gate::prep_x:
                x_[ins.q0] = 0;
                z_[ins.q0] = 0;
                break;
            case Gate::h:
                std::swap(x_[ins.q0], z_[ins.q0]);
                break;
            case Gate::cnot:
                x_[ins.q1] ^= x_[ins.q0];
                z_[ins.q0] ^= z_[ins.q1];
                break;
            case Gate::meas_z:
                apply(ins, pauli);
                rec_[ins.record] = x_[ins.q0];
                return;
            case Gate::meas_x:
                apply(ins, pauli);
                rec_[ins.record] = z_[ins.q0];
                return;
            default:
                break;
        }
        apply(ins, pauli);
    }

    bool accepted(const Instruction& ins) const {
        const std::uint8_t* f = &rec_[ins.record];
        return syndrome(f) == 0 && parity(f) == 0;
    }

    void retry(const Instruction& verify, std::size_t end, const std::array<double, kKinds>* rates,
               Philox* rng) {
        const bool charge = c_.options.charge_rejected_attempts;
        for (std::size_t j = static_cast<std::size_t>(verify.target); j < end; ++j) {
            const auto& ins = c_.instructions[j];
            if (is_control(ins.gate)) {
                continue;
            }
            if (ins.segment != verify.segment && !(ins.data_wait && charge)) {
                continue;
            }
            std::uint8_t pauli = 0;
            if (rng != nullptr) {
                const double p = (*rates)[static_cast<std::size_t>(ins.kind)];
                if (p > 0.0 && rng->uniform() < p) {
                    pauli = draw_pauli(*rng, is_two_qubit(ins.gate), c_.options.two_qubit);
                }
            }
            execute(ins, pauli);
        }
    }

    bool verdict() {
        if (c_.output_record >= 0) {
            return decodes_to_error(&rec_[c_.output_record]);
        }
        bool fail = false;
        for (auto base : c_.data_blocks) {
            fail = decodes_to_error(&x_[base]) || fail;
            fail = decodes_to_error(&z_[base]) || fail;
        }
        return fail;
    }

    const QCircuit& c_;
    std::vector<std::uint8_t> x_;
    std::vector<std::uint8_t> z_;
    std::vector<std::uint8_t> rec_;
};

std::array<double, kKinds> kind_rates(const QCircuit& c, const FailureVector& rates) {
    const auto census = c.census();
    std::array<double, kKinds> out{};
    for (std::size_t k = 0; k < kKinds; ++k) {
        const auto name = to_string(static_cast<LocationKind>(k));
        if (rates.contains(name)) {
            out[k] = rates.at(name);
        } else if (census[k] > 0) {
            throw VariableBindingError("no failure rate for location '" + std::string(name) + "'");
        }
        if (!(out[k] >= 0.0 && out[k] <= 1.0)) {
            throw std::invalid_argument("failure rate for '" + std::string(name) +
                                        "' must lie in [0, 1]");
        }
    }
    return out;
}

struct Hit {
    std::uint32_t trial;
    Fault fault;
};

}  // namespace

std::string_view to_string(LocationKind k) {
    static constexpr std::string_view names[] = {"1", "2", "w", "1m", "p"};
    return names[static_cast<std::size_t>(k)];
}

LocationKind parse_kind(std::string_view name) {
    for (std::size_t k = 0; k < kKinds; ++k) {
        if (to_string(static_cast<LocationKind>(k)) == name) {
            return static_cast<LocationKind>(k);
        }
    }
    throw std::invalid_argument("unknown location kind '" + std::string(name) +
                                "' (expected 1, 2, w, 1m or p)");
}

const std::vector<std::string>& location_names() {
    static const std::vector<std::string> names{"1", "2", "w", "1m", "p"};
    return names;
}

std::string_view to_string(Gate g) {
    static constexpr std::string_view names[] = {"prep_z", "prep_x", "h",         "cnot",
                                                 "wait",   "meas_z", "meas_x",    "gate",
                                                 "verify", "correct_x", "correct_z"};
    return names[static_cast<std::size_t>(g)];
}

std::array<std::size_t, kKinds> QCircuit::census() const {
    std::array<std::size_t, kKinds> counts{};
    for (auto i : locations) {
        ++counts[static_cast<std::size_t>(instructions[i].kind)];
    }
    return counts;
}

std::uint32_t QCircuit::steps() const {
    return instructions.empty() ? 0 : instructions.back().step + 1;
}

std::string QCircuit::schedule_text() const {
    std::ostringstream os;
    os << "# " << name << ": t, gate, qubits, kind\n";
    for (const auto& ins : instructions) {
        os << ins.step << ", " << to_string(ins.gate) << ", ";
        if (is_control(ins.gate)) {
            os << "r" << ins.record << "-r" << ins.record + 6 << ", -\n";
            continue;
        }
        os << ins.q0;
        if (is_two_qubit(ins.gate)) {
            os << ' ' << ins.q1;
        }
        os << ", " << to_string(ins.kind) << "\n";
    }
    return os.str();
}

QCircuit build_ec(const EcOptions& options) {
    Builder b(options);
    const std::uint32_t d = b.block(true, 0, b.data_start(), b.gate_step() - 1);
    b.ec(d);
    return b.finish("ec", {d}, -1);
}

QCircuit build_exrec(LocationKind kind, const EcOptions& options) {
    Builder b(options);
    const std::uint32_t gate_step = b.gate_step();
    const std::uint32_t start = b.data_start();
    if (kind == LocationKind::two) {
        const std::uint32_t d0 = b.block(true, 0, start, gate_step);
        const std::uint32_t d1 = b.block(true, 0, start, gate_step);
        b.ec(d0);
        b.ec(d1);
        for (std::uint32_t i = 0; i < kBlock; ++i) {
            b.op(gate_step, Gate::cnot, LocationKind::two, d0 + i, d1 + i);
        }
        return b.finish("exrec(2)", {d0, d1}, -1);
    }
    const std::uint32_t d = b.block(true, 0, start, gate_step);
    b.ec(d);
    std::int32_t output = -1;
    if (kind == LocationKind::measured) {
        output = b.records(kBlock);
    }
    for (std::uint32_t i = 0; i < kBlock; ++i) {
        switch (kind) {
            case LocationKind::one:
                b.op(gate_step, Gate::h, kind, d + i);
                break;
            case LocationKind::wait:
                b.op(gate_step, Gate::wait, kind, d + i);
                break;
            case LocationKind::measured:
                b.op(gate_step, Gate::meas_z, kind, d + i, 0, output + static_cast<std::int32_t>(i));
                break;
            default:
                b.op(gate_step, Gate::gate, kind, d + i);
                break;
        }
    }
    return b.finish("exrec(" + std::string(to_string(kind)) + ")", {d}, output);
}

Outcome propagate_pauli(const QCircuit& c, std::span<const Fault> faults) {
    if (!std::is_sorted(faults.begin(), faults.end(),
                        [](const Fault& a, const Fault& b) { return a.location < b.location; })) {
        throw std::invalid_argument("faults must be sorted by location");
    }
    for (const auto& f : faults) {
        if (f.location >= c.locations.size() || f.pauli >= (1U << (pauli_count(c, f.location) == 15 ? 4 : 2))) {
            throw std::invalid_argument("fault outside the circuit or not a valid Pauli");
        }
    }
    Simulator sim(c);
    return sim.run(faults, nullptr, nullptr);
}

unsigned pauli_count(const QCircuit& c, std::uint32_t location) {
    return is_two_qubit(c.instructions.at(c.locations.at(location)).gate) ? 15 : 3;
}

McEstimate mc_failure(const QCircuit& c, const FailureVector& rates, std::uint64_t trials,
                      std::uint64_t seed, unsigned threads) {
    if (trials < 1) {
        throw std::invalid_argument("Monte-Carlo needs at least one trial");
    }
    const auto kr = kind_rates(c, rates);
    std::array<std::vector<std::uint32_t>, kKinds> by_kind;
    for (std::uint32_t l = 0; l < c.locations.size(); ++l) {
        by_kind[static_cast<std::size_t>(c.instructions[c.locations[l]].kind)].push_back(l);
    }

    const std::uint64_t chunks = (trials + kChunkTrials - 1) / kChunkTrials;
    std::vector<std::uint64_t> failures(chunks, 0);
    std::vector<std::uint64_t> rejections(chunks, 0);
    parallel_for(static_cast<std::size_t>(chunks), resolve_thread_count(threads),
                 [&](std::size_t chunk) {
        const std::uint64_t first = chunk * kChunkTrials;
        const std::uint64_t n = std::min(kChunkTrials, trials - first);
        Philox rng(seed, chunk);
        std::vector<Hit> hits;
        for (std::size_t k = 0; k < kKinds; ++k) {
            const auto& locs = by_kind[k];
            if (kr[k] <= 0.0 || locs.empty()) {
                continue;
            }
            const std::uint64_t span = n * locs.size();
            std::uint64_t pos = 0;
            while (true) {
                const std::uint64_t skip = rng.geometric(kr[k]);
                if (skip >= span - pos) {
                    break;
                }
                pos += skip;
                const std::uint32_t loc = locs[pos % locs.size()];
                const bool two = is_two_qubit(c.instructions[c.locations[loc]].gate);
                hits.push_back({static_cast<std::uint32_t>(pos / locs.size()),
                                {loc, draw_pauli(rng, two, c.options.two_qubit)}});
                if (++pos >= span) {
                    break;
                }
            }
        }
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
            return a.trial != b.trial ? a.trial < b.trial : a.fault.location < b.fault.location;
        });
        Simulator sim(c);
        std::vector<Fault> faults;
        for (std::size_t i = 0; i < hits.size();) {
            faults.clear();
            std::size_t j = i;
            for (; j < hits.size() && hits[j].trial == hits[i].trial; ++j) {
                faults.push_back(hits[j].fault);
            }
            const Outcome o = sim.run(faults, &kr, &rng);
            failures[chunk] += o.logical_error ? 1 : 0;
            rejections[chunk] += o.rejections;
            i = j;
        }
    });

    McEstimate e;
    e.point = rates;
    e.trials = trials;
    for (std::uint64_t k = 0; k < chunks; ++k) {
        e.failures += failures[k];
        e.rejections += rejections[k];
    }
    e.p_hat = static_cast<double>(e.failures) / static_cast<double>(trials);
    e.stderr_ = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
    return e;
}

McTrip mc_trip(LocationKind kind, const Setting& setting, const std::vector<double>& gammas,
               std::uint64_t trials, std::uint64_t seed, const EcOptions& options,
               unsigned threads) {
    const QCircuit c = build_exrec(kind, options);
    McTrip out;
    out.kind = std::string(to_string(kind));
    out.setting = setting.name();
    out.seed = seed;
    out.curve.location = out.kind;
    out.curve.level = 1;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (i > 0 && !(gammas[i] > gammas[i - 1])) {
            throw std::invalid_argument("gamma grid must be strictly increasing");
        }
        out.estimates.push_back(mc_failure(c, setting.apply(gammas[i]), trials, seed, threads));
        out.curve.samples.emplace_back(gammas[i], out.estimates.back().p_hat);
    }
    const auto& s = out.curve.samples;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double h0 = s[i].second - s[i].first;
        const double h1 = s[i + 1].second - s[i + 1].first;
        if (s[i].first > 0.0 && h0 < 0.0 && h1 >= 0.0) {
            // Linear interpolation of the sampled excess.
            out.curve.crossings.push_back(s[i].first +
                                          (s[i + 1].first - s[i].first) * (-h0) / (h1 - h0));
        }
    }
    return out;
}

namespace {

FitResult solve_fit(const std::vector<double>& g, const std::vector<double>& p,
                    const std::vector<double>& weight, bool cubic, bool scale_by_residual) {
    FitResult r;
    r.cubic = cubic;
    const std::size_t m = cubic ? 2 : 1;
    // Normal equations for p = c2 g^2 + c3 g^3.
    double a[2][2] = {{0, 0}, {0, 0}};
    double b[2] = {0, 0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x[2] = {g[i] * g[i], g[i] * g[i] * g[i]};
        for (std::size_t j = 0; j < m; ++j) {
            b[j] += weight[i] * x[j] * p[i];
            for (std::size_t k = 0; k < m; ++k) {
                a[j][k] += weight[i] * x[j] * x[k];
            }
        }
    }
    double cov[2][2] = {{0, 0}, {0, 0}};
    if (m == 1) {
        if (!(a[0][0] > 0.0)) {
            r.message = "degenerate fit";
            return r;
        }
        r.c2 = b[0] / a[0][0];
        cov[0][0] = 1.0 / a[0][0];
    } else {
        const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if (!(std::abs(det) > 0.0)) {
            r.message = "degenerate fit";
            return r;
        }
        cov[0][0] = a[1][1] / det;
        cov[1][1] = a[0][0] / det;
        cov[0][1] = cov[1][0] = -a[0][1] / det;
        r.c2 = cov[0][0] * b[0] + cov[0][1] * b[1];
        r.c3 = cov[1][0] * b[0] + cov[1][1] * b[1];
    }
    if (scale_by_residual && g.size() > m) {
        double ss = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double fit = r.c2 * g[i] * g[i] + r.c3 * g[i] * g[i] * g[i];
            ss += weight[i] * (p[i] - fit) * (p[i] - fit);
        }
        const double s2 = ss / static_cast<double>(g.size() - m);
        for (auto& row : cov) {
            for (double& v : row) {
                v *= s2;
            }
        }
    }
    // Least positive root of c3 g^2 + c2 g - 1 = 0.
    double root = kNaN;
    if (r.c3 == 0.0) {
        if (r.c2 > 0.0) {
            root = 1.0 / r.c2;
        }
    } else {
        const double disc = r.c2 * r.c2 + 4.0 * r.c3;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double cand : {(-r.c2 + sq) / (2.0 * r.c3), (-r.c2 - sq) / (2.0 * r.c3)}) {
                if (cand > 0.0 && (std::isnan(root) || cand < root)) {
                    root = cand;
                }
            }
        }
    }
    if (std::isnan(root)) {
        r.message = "fit has no positive crossing with the identity line";
        return r;
    }
    r.found = true;
    r.value = root;
    const double denom = r.c2 + 2.0 * r.c3 * root;
    const double d2 = -root / denom;
    const double d3 = -root * root / denom;
    double var = d2 * d2 * cov[0][0];
    if (cubic) {
        var += 2.0 * d2 * d3 * cov[0][1] + d3 * d3 * cov[1][1];
    }
    const double half = 1.96 * std::sqrt(std::max(var, 0.0));
    r.ci_lo = root - half;
    r.ci_hi = root + half;
    return r;
}

void check_points(std::size_t n) {
    if (n < 5) {
        throw std::invalid_argument("pseudothreshold fit needs at least 5 points");
    }
}

}  // namespace

FitResult fit_pseudothreshold(const std::vector<McEstimate>& points, bool cubic) {
    check_points(points.size());
    std::vector<double> g, p, w;
    bool any_noise = false;
    for (const auto& e : points) {
        if (e.point.size() == 0) {
            throw std::invalid_argument("estimate has no rate vector");
        }
        any_noise = any_noise || e.stderr_ > 0.0;
    }
    for (const auto& e : points) {
        // The scalar gamma is the largest rate in the point (settings are
        // linear, so every point has the same argmax).
        const auto& v = e.point.values();
        g.push_back(*std::max_element(v.begin(), v.end()));
        p.push_back(e.p_hat);
        if (any_noise) {
            const double n = static_cast<double>(e.trials);
            const double pt = (static_cast<double>(e.failures) + 1.0) / (n + 2.0);
            w.push_back(n / (pt * (1.0 - pt)));
        } else {
            w.push_back(1.0);
        }
    }
    return solve_fit(g, p, w, cubic, !any_noise);
}

FitResult fit_pseudothreshold(const TripCurve& curve, bool cubic) {
    check_points(curve.samples.size());
    std::vector<double> g, p, w;
    for (const auto& [x, y] : curve.samples) {
        g.push_back(x);
        p.push_back(y);
        w.push_back(1.0);
    }
    return solve_fit(g, p, w, cubic, true);
}

SlopeResult loglog_slope(const std::vector<McEstimate>& points) {
    SlopeResult r;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& e : points) {
        if (e.failures == 0) {
            continue;
        }
        const auto& v = e.point.values();
        const double x = std::log(*std::max_element(v.begin(), v.end()));
        const double y = std::log(e.p_hat);
        // Var(log p_hat) ~ (1 - p) / (n p) = 1 / failures for small p.
        const double w = static_cast<double>(e.failures) / (1.0 - e.p_hat);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
        ++r.points;
    }
    const double det = sw * sxx - sx * sx;
    if (r.points < 2 || !(det > 0.0)) {
        return r;
    }
    r.slope = (sw * sxy - sx * sy) / det;
    r.stderr_ = std::sqrt(sw / det);
    return r;
}

MapEvaluator mc_evaluator(std::uint64_t trials, std::uint64_t seed, const EcOptions& options,
                          unsigned threads) {
    auto circuits = std::make_shared<std::vector<QCircuit>>();
    for (std::size_t k = 0; k < kKinds; ++k) {
        circuits->push_back(build_exrec(static_cast<LocationKind>(k), options));
    }
    return [circuits, trials, seed, threads](std::span<const double> x) {
        const FailureVector rates(location_names(), std::vector<double>(x.begin(), x.end()));
        std::vector<double> out;
        for (const auto& c : *circuits) {
            out.push_back(mc_failure(c, rates, trials, seed, threads).p_hat);
        }
        return out;
    };
}

}  // namespace flowmap::steane
