#include <gtest/gtest.h>

#include <cmath>

#include "flowmap/philox.hpp"
#include "flowmap/steane.hpp"

using namespace flowmap;
using namespace flowmap::steane;

namespace {

constexpr LocationKind kAll[] = {LocationKind::one, LocationKind::two, LocationKind::wait,
                                 LocationKind::measured, LocationKind::prep};

Instruction ins(Gate g, LocationKind k, std::uint32_t q0, std::uint32_t q1 = 0,
                std::int32_t record = -1) {
    Instruction i;
    i.gate = g;
    i.kind = k;
    i.q0 = q0;
    i.q1 = q1;
    i.record = record;
    return i;
}

void finalize(QCircuit& c) {
    for (std::uint32_t i = 0; i < c.instructions.size(); ++i) {
        c.instructions[i].location = static_cast<std::int32_t>(c.locations.size());
        c.locations.push_back(i);
    }
}

FailureVector rates(double one, double two, double wait, double meas, double prep) {
    return FailureVector(location_names(), {one, two, wait, meas, prep});
}

std::size_t sweep_failures(const QCircuit& c) {
    std::size_t bad = 0;
    for (std::uint32_t l = 0; l < c.locations.size(); ++l) {
        for (unsigned p = 1; p <= pauli_count(c, l); ++p) {
            const Fault f{l, static_cast<std::uint8_t>(p)};
            bad += propagate_pauli(c, std::span<const Fault>(&f, 1)).logical_error ? 1 : 0;
        }
    }
    return bad;
}

}  // namespace

TEST(Philox, KnownAnswers) {
    using B = Philox::Block;
    EXPECT_EQ(Philox::generate({0, 0, 0, 0}, {0, 0}),
              (B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                               {0xffffffff, 0xffffffff}),
              (B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                               {0xa4093822, 0x299f31d0}),
              (B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
    Philox a(5, 0), b(5, 0), c(5, 1);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_NE(x, c.next_u64());
    }
    Philox u(1, 2);
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double x = u.uniform();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
        mean += x;
    }
    EXPECT_NEAR(mean / 100000, 0.5, 0.005);
}

TEST(Philox, GeometricMean) {
    Philox g(9, 0);
    const double p = 0.01;
    double sum = 0.0;
    for (int i = 0; i < 200000; ++i) {
        sum += static_cast<double>(g.geometric(p));
    }
    EXPECT_NEAR(sum / 200000, (1 - p) / p, 1.5);
    EXPECT_EQ(g.geometric(1.0), 0U);
}

TEST(FrameRules, CnotCopiesXForwardAndZBackward) {
    QCircuit c;
    c.qubits = 14;
    c.data_blocks = {7};
    c.instructions = {ins(Gate::wait, LocationKind::wait, 0), ins(Gate::wait, LocationKind::wait, 1),
                      ins(Gate::cnot, LocationKind::two, 0, 7), ins(Gate::cnot, LocationKind::two, 1, 8)};
    finalize(c);
    // One X on the control side lands on one data qubit: corrected.
    const Fault one[] = {{0, 1}};
    EXPECT_FALSE(propagate_pauli(c, one).logical_error);
    // Two land on two data qubits: miscorrected.
    const Fault two[] = {{0, 1}, {1, 1}};
    EXPECT_TRUE(propagate_pauli(c, two).logical_error);
    // Z on the control does not reach the target.
    const Fault z[] = {{0, 2}, {1, 2}};
    EXPECT_FALSE(propagate_pauli(c, z).logical_error);

    // Z on a target before the CNOT flows back to the control data block.
    QCircuit e;
    e.qubits = 14;
    e.data_blocks = {0};
    e.instructions = {ins(Gate::wait, LocationKind::wait, 7), ins(Gate::wait, LocationKind::wait, 8),
                      ins(Gate::cnot, LocationKind::two, 0, 7), ins(Gate::cnot, LocationKind::two, 1, 8)};
    finalize(e);
    const Fault zt[] = {{0, 2}, {1, 2}};
    EXPECT_TRUE(propagate_pauli(e, zt).logical_error);
    const Fault xt[] = {{0, 1}, {1, 1}};
    EXPECT_FALSE(propagate_pauli(e, xt).logical_error);
}

TEST(FrameRules, HadamardSwapsXAndZ) {
    QCircuit c;
    c.qubits = 7;
    c.records = 7;
    c.output_record = 0;
    c.instructions = {ins(Gate::wait, LocationKind::wait, 0), ins(Gate::wait, LocationKind::wait, 1)};
    for (std::uint32_t q = 0; q < 7; ++q) {
        c.instructions.push_back(ins(Gate::h, LocationKind::one, q));
    }
    for (std::uint32_t q = 0; q < 7; ++q) {
        c.instructions.push_back(ins(Gate::meas_z, LocationKind::measured, q, 0, static_cast<std::int32_t>(q)));
    }
    finalize(c);
    const Fault zz[] = {{0, 2}, {1, 2}};
    EXPECT_TRUE(propagate_pauli(c, zz).logical_error);
    const Fault xx[] = {{0, 1}, {1, 1}};
    EXPECT_FALSE(propagate_pauli(c, xx).logical_error);
    const Fault yy[] = {{0, 3}, {1, 3}};
    EXPECT_TRUE(propagate_pauli(c, yy).logical_error);
}

TEST(Circuits, EcCensus) {
    const auto ec = build_ec();
    const auto n = ec.census();
    // Four ancilla blocks: 9 encoder CNOTs each, plus 7 verifier and 7
    // coupling CNOTs per half.
    EXPECT_EQ(n[1], 4U * 9 + 2 * 7 + 2 * 7);
    EXPECT_EQ(n[4], 4U * 7);
    EXPECT_EQ(n[3], 4U * 7);
    EXPECT_GT(n[2], 0U);
    EXPECT_EQ(n[0], 0U);
    EcOptions h;
    h.hadamard_plus_prep = true;
    for (auto v : build_ec(h).census()) {
        EXPECT_GT(v, 0U);
    }
}

TEST(Circuits, ExrecStructure) {
    const auto one = build_exrec(LocationKind::one);
    const auto two = build_exrec(LocationKind::two);
    EXPECT_EQ(two.ec_count, 2 * one.ec_count);
    EXPECT_EQ(two.data_blocks.size(), 2U);
    for (auto v : one.census()) {
        EXPECT_GT(v, 0U);
    }

    const auto wait = build_exrec(LocationKind::wait);
    const auto ec = build_ec();
    EXPECT_EQ(wait.census()[2], ec.census()[2] + 7);

    const auto meas = build_exrec(LocationKind::measured);
    EXPECT_GE(meas.output_record, 0);
    // Transversal measurement is the last stage: no EC follows it.
    const auto last_step = meas.instructions.back().step;
    for (const auto& i : meas.instructions) {
        if (i.step == last_step) {
            EXPECT_EQ(i.gate, Gate::meas_z);
        }
    }
    EXPECT_NE(one.schedule_text().find("cnot"), std::string::npos);
}

TEST(Circuits, NoiselessRunSucceeds) {
    for (auto k : kAll) {
        const auto o = propagate_pauli(build_exrec(k), {});
        EXPECT_FALSE(o.logical_error);
        EXPECT_EQ(o.rejections, 0U);
    }
}

TEST(Circuits, EverySingleFaultIsTolerated) {
    for (auto sched : {Schedule::sequential, Schedule::pipelined}) {
        EcOptions o;
        o.schedule = sched;
        for (auto k : kAll) {
            EXPECT_EQ(sweep_failures(build_exrec(k, o)), 0U) << to_string(k);
        }
    }
}

TEST(Circuits, SameQubitFaultsCancel) {
    const auto c = build_exrec(LocationKind::wait);
    // Two data waits on the same qubit at different steps.
    std::vector<std::uint32_t> data_waits;
    for (std::uint32_t l = 0; l < c.locations.size(); ++l) {
        const auto& i = c.instructions[c.locations[l]];
        if (i.gate == Gate::wait && i.q0 == 0 && i.data_wait) {
            data_waits.push_back(l);
        }
    }
    ASSERT_GE(data_waits.size(), 2U);
    const Fault twice[] = {{data_waits.front(), 1}, {data_waits.back(), 1}};
    EXPECT_FALSE(propagate_pauli(c, twice).logical_error);
}

TEST(Circuits, WeightTwoDataErrorCanFail) {
    const auto c = build_exrec(LocationKind::wait);
    // The final transversal wait stage: seven locations, one per data qubit.
    const auto n = static_cast<std::uint32_t>(c.locations.size());
    const Fault pair[] = {{n - 7, 1}, {n - 6, 1}};
    EXPECT_TRUE(propagate_pauli(c, pair).logical_error);
}

TEST(Circuits, RejectionAndAbort) {
    EcOptions o;
    o.max_attempts = 1;
    const auto c = build_exrec(LocationKind::one, o);
    bool saw_abort = false;
    for (std::uint32_t l = 0; l < c.locations.size() && !saw_abort; ++l) {
        const Fault f{l, 1};
        const auto r = propagate_pauli(c, std::span<const Fault>(&f, 1));
        if (r.rejections > 0) {
            EXPECT_TRUE(r.aborted);
            EXPECT_TRUE(r.logical_error);
            saw_abort = true;
        }
    }
    EXPECT_TRUE(saw_abort);
}

TEST(Circuits, InvalidFaultsAreRejected) {
    const auto c = build_exrec(LocationKind::one);
    const Fault out_of_range{static_cast<std::uint32_t>(c.locations.size()), 1};
    EXPECT_THROW(propagate_pauli(c, std::span<const Fault>(&out_of_range, 1)), std::invalid_argument);
    const Fault unsorted[] = {{5, 1}, {2, 1}};
    EXPECT_THROW(propagate_pauli(c, unsorted), std::invalid_argument);
}

TEST(MonteCarlo, ZeroNoiseNeverFails) {
    for (auto k : kAll) {
        const auto e = mc_failure(build_exrec(k), rates(0, 0, 0, 0, 0), 50000, 1);
        EXPECT_EQ(e.failures, 0U);
        EXPECT_EQ(e.p_hat, 0.0);
    }
}

TEST(MonteCarlo, MatchesExactEnumerationOnTransversalLayer) {
    // Axis 1 on exRec(1): only the seven transversal H locations fail, so
    // the exact failure probability is a sum over 4^7 Pauli patterns.
    const auto c = build_exrec(LocationKind::one);
    std::vector<std::uint32_t> locs;
    for (std::uint32_t l = 0; l < c.locations.size(); ++l) {
        if (c.instructions[c.locations[l]].kind == LocationKind::one) {
            locs.push_back(l);
        }
    }
    ASSERT_EQ(locs.size(), 7U);
    const double g = 0.05;
    double exact = 0.0;
    for (unsigned pattern = 0; pattern < (1U << 14); ++pattern) {
        std::vector<Fault> faults;
        double p = 1.0;
        for (unsigned q = 0; q < 7; ++q) {
            const auto pauli = static_cast<std::uint8_t>((pattern >> (2 * q)) & 3U);
            p *= pauli ? g / 3 : 1 - g;
            if (pauli) {
                faults.push_back({locs[q], pauli});
            }
        }
        if (propagate_pauli(c, faults).logical_error) {
            exact += p;
        }
    }
    const std::uint64_t n = 400000;
    const auto e = mc_failure(c, rates(g, 0, 0, 0, 0), n, 17);
    const double sigma = std::sqrt(exact * (1 - exact) / n);
    EXPECT_NEAR(e.p_hat, exact, 4 * sigma);
    EXPECT_NEAR(e.stderr_, std::sqrt(e.p_hat * (1 - e.p_hat) / n), 1e-15);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
    const auto c = build_exrec(LocationKind::two);
    const auto r = rates(2e-3, 2e-3, 2e-4, 2e-3, 2e-3);
    const std::uint64_t n = 3 * kChunkTrials + 123;
    const auto a = mc_failure(c, r, n, 42, 1);
    const auto b = mc_failure(c, r, n, 42, 3);
    EXPECT_EQ(a.failures, b.failures);
    EXPECT_EQ(a.rejections, b.rejections);
    EXPECT_GT(a.rejections, 0U);
    const auto d = mc_failure(c, r, n, 43, 1);
    EXPECT_NE(a.rejections, d.rejections);
}

TEST(MonteCarlo, RejectsBadInput) {
    const auto c = build_exrec(LocationKind::one);
    EXPECT_THROW(mc_failure(c, rates(0, 0, 0, 0, 0), 0, 1), std::invalid_argument);
    EXPECT_THROW(mc_failure(c, rates(1.5, 0, 0, 0, 0), 10, 1), std::invalid_argument);
    EXPECT_THROW(mc_failure(c, FailureVector({"1"}, {0.1}), 10, 1), VariableBindingError);
}

TEST(MonteCarlo, TripRecordsEveryGridPoint) {
    const auto s = axis(location_names(), "1");
    const auto t = mc_trip(LocationKind::one, s, {0.02, 0.05, 0.1, 0.2}, 20000, 3);
    ASSERT_EQ(t.estimates.size(), 4U);
    EXPECT_EQ(t.curve.samples[2].first, 0.1);
    EXPECT_EQ(t.curve.samples[2].second, t.estimates[2].p_hat);
    ASSERT_EQ(t.curve.crossings.size(), 1U);
    EXPECT_GT(t.curve.crossings[0], 0.05);
    EXPECT_LT(t.curve.crossings[0], 0.2);
    EXPECT_THROW(mc_trip(LocationKind::one, s, {0.1, 0.05}, 10, 1), std::invalid_argument);
}

TEST(Fit, ExactQuadraticGivesOneOverC) {
    TripCurve curve;
    for (double g : {0.01, 0.02, 0.04, 0.06, 0.08, 0.1}) {
        curve.samples.emplace_back(g, 12 * g * g);
    }
    const auto f = fit_pseudothreshold(curve);
    ASSERT_TRUE(f.found);
    EXPECT_NEAR(f.value, 1.0 / 12, 1e-12);
    EXPECT_NEAR(f.c2, 12.0, 1e-10);
    const auto fc = fit_pseudothreshold(curve, true);
    EXPECT_NEAR(fc.value, 1.0 / 12, 1e-9);
    EXPECT_NEAR(fc.c3, 0.0, 1e-6);
}

TEST(Fit, CubicTermShiftsTheRoot) {
    TripCurve curve;
    for (double g = 0.01; g < 0.2; g += 0.02) {
        curve.samples.emplace_back(g, 10 * g * g - 20 * g * g * g);
    }
    const auto fc = fit_pseudothreshold(curve, true);
    // 10 g - 20 g^2 = 1 -> g = (10 - sqrt(20)) / 40.
    EXPECT_NEAR(fc.value, (10 - std::sqrt(20.0)) / 40, 1e-9);
}

TEST(Fit, NeedsFivePointsAndAPositiveRoot) {
    TripCurve few;
    few.samples = {{0.1, 0.01}, {0.2, 0.04}};
    EXPECT_THROW(fit_pseudothreshold(few), std::invalid_argument);
    TripCurve none;
    for (double g : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        none.samples.emplace_back(g, -g * g);
    }
    const auto f = fit_pseudothreshold(none);
    EXPECT_FALSE(f.found);
    EXPECT_FALSE(f.message.empty());
}

TEST(Fit, BinomialEstimatesGiveIntervalAroundTruth) {
    const auto s = axis(location_names(), "1");
    std::vector<McEstimate> pts;
    for (double g : {0.04, 0.05, 0.06, 0.07, 0.08, 0.09}) {
        McEstimate e;
        e.point = s.apply(g);
        e.trials = 1000000;
        e.p_hat = 10 * g * g;
        e.failures = static_cast<std::uint64_t>(std::llround(e.p_hat * 1e6));
        e.stderr_ = std::sqrt(e.p_hat * (1 - e.p_hat) / 1e6);
        pts.push_back(e);
    }
    const auto f = fit_pseudothreshold(pts);
    ASSERT_TRUE(f.found);
    EXPECT_NEAR(f.value, 0.1, 1e-4);
    EXPECT_LT(f.ci_lo, f.value);
    EXPECT_GT(f.ci_hi, f.value);
}

TEST(Slope, QuadraticCountsGiveTwo) {
    std::vector<McEstimate> pts;
    for (double g : {1e-3, 2e-3, 4e-3, 8e-3}) {
        McEstimate e;
        e.point = FailureVector({"x"}, {g});
        e.trials = 100000000;
        e.p_hat = 5 * g * g;
        e.failures = static_cast<std::uint64_t>(e.p_hat * 1e8);
        pts.push_back(e);
    }
    const auto r = loglog_slope(pts);
    EXPECT_EQ(r.points, 4U);
    EXPECT_NEAR(r.slope, 2.0, 1e-3);
}

TEST(Evaluator, ProjectsEachExrec) {
    const auto eval = mc_evaluator(2000, 5);
    const std::vector<double> zero(kKinds, 0.0);
    const auto y = eval(zero);
    ASSERT_EQ(y.size(), kKinds);
    for (double v : y) {
        EXPECT_EQ(v, 0.0);
    }
}
