#include "doctest.h"

#include <cmath>

#include "ionfountain/waveforms.hpp"

using namespace ionfountain;
using namespace ionfountain::waveforms;

TEST_CASE("baseline schedule holds -200 V during the flight") {
    const auto s = baseline_schedule(6.3e-6);
    const auto v1 = voltage_at(s, 1e-6);
    CHECK(v1.at("E1") == doctest::Approx(-200.0));
    CHECK(v1.at("F") == doctest::Approx(-200.0));
    CHECK(v1.at("R") == doctest::Approx(7.5));
    CHECK(v1.at("seg6") == doctest::Approx(-0.6));
    // beyond all events: settled map
    const auto v2 = voltage_at(s, 20e-6);
    CHECK(v2.at("E1") == doctest::Approx(0.0));
    CHECK(v2.at("F") == doctest::Approx(0.0));
    CHECK(v2.at("R") == doctest::Approx(7.5));
}

TEST_CASE("mid-edge value is the midpoint of a linear edge") {
    VoltageSchedule s;
    s.initial["E1"] = 0.0;
    s.events.push_back({1e-6, "E1", -200.0, 50e-9});
    CHECK(voltage_at(s, 1e-6).at("E1") == doctest::Approx(0.0));
    CHECK(voltage_at(s, 1e-6 + 25e-9).at("E1") == doctest::Approx(-100.0));
    CHECK(voltage_at(s, 1e-6 + 50e-9).at("E1") == doctest::Approx(-200.0));
}

TEST_CASE("voltage_at is continuous and piecewise linear for a positive edge") {
    const auto s = baseline_schedule(6.3e-6);
    double prev = voltage_at(s, 0.0).at("E1");
    for (double t = 1e-9; t < 120e-9; t += 1e-9) {
        const double cur = voltage_at(s, t).at("E1");
        CHECK(std::abs(cur - prev) < 200.0 / 50.0 * 1.01); // bounded slope
        prev = cur;
    }
}

TEST_CASE("time-translation equivariance") {
    const double shift = 1.7e-6;
    auto s = baseline_schedule(6.3e-6);
    auto shifted = s;
    for (auto& e : shifted.events) e.time += shift;
    shifted.rf.ramp_down.start += shift;
    shifted.rf.ramp_up.start += shift;
    shifted.rf.t_off -= shift; // keeps omega (t + t_off) invariant
    for (double t : {0.1e-6, 0.9e-6, 3.3e-6, 6.31e-6, 8e-6}) {
        const auto a = voltage_at(s, t);
        const auto b = voltage_at(shifted, t + shift);
        for (const auto& [name, val] : a)
            CHECK(b.at(name) == doctest::Approx(val).epsilon(1e-12));
        const auto ra = rf_envelope_at(s.rf, t);
        const auto rb = rf_envelope_at(shifted.rf, t + shift);
        CHECK(rb.amplitude == doctest::Approx(ra.amplitude).epsilon(1e-12));
        CHECK(rb.phase == doctest::Approx(ra.phase).epsilon(1e-12));
    }
}

TEST_CASE("rf envelope windows and phase") {
    RfProgram rf;
    rf.ramp_down = {1e-6, 0.5e-6};
    rf.ramp_up = {6.35e-6, 0.5e-6};
    CHECK(rf_envelope_at(rf, 0.5e-6).amplitude == doctest::Approx(75.0)); // U_pp/2
    CHECK(rf_envelope_at(rf, 3e-6).amplitude == doctest::Approx(0.0));
    CHECK(rf_envelope_at(rf, 8e-6).amplitude == doctest::Approx(75.0));
    // amplitude bounded on the ramps
    for (double t = 0.9e-6; t < 1.7e-6; t += 7e-9) {
        const double a = rf_envelope_at(rf, t).amplitude;
        CHECK(a >= 0.0);
        CHECK(a <= 75.0 + 1e-12);
    }
    // one drive period advances the phase by exactly 2 pi; 56.0 ns period
    const double period = rf.period();
    CHECK(period == doctest::Approx(56.0e-9).epsilon(1e-3));
    const double t0 = 2.3e-6;
    CHECK(rf_envelope_at(rf, t0 + period).phase - rf_envelope_at(rf, t0).phase ==
          doctest::Approx(TWO_PI).epsilon(1e-12));
    // phase strictly increasing
    double prev = rf_envelope_at(rf, 0.0).phase;
    for (double t = 1e-8; t < 8e-6; t += 1e-8) {
        const double p = rf_envelope_at(rf, t).phase;
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("validate_schedule reports violations instead of failing") {
    const auto stack = fields::default_stack();
    auto good = baseline_schedule(6.3e-6);
    CHECK(validate_schedule(good, stack).empty());

    auto bad = good;
    bad.events.push_back({7e-6, "E9", 0.0, 50e-9});
    auto v = validate_schedule(bad, stack);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "unknown-electrode");

    auto overlap = good;
    overlap.rf.ramp_down = {0.0, 0.5e-6};
    overlap.rf.ramp_up = {0.3e-6, 0.5e-6}; // starts inside the ramp-down
    v = validate_schedule(overlap, stack);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == "rf-overlap");

    auto unsorted = good;
    std::swap(unsorted.events[1], unsorted.events[2]);
    v = validate_schedule(unsorted, stack);
    CHECK(!v.empty());
}

TEST_CASE("compiled schedule agrees with voltage_at") {
    const auto stack = fields::default_stack();
    const auto s = baseline_schedule(6.3e-6);
    CompiledSchedule cs(s, stack);
    std::vector<double> out;
    for (double t : {0.0, 10e-9, 25e-9, 60e-9, 1e-6, 6.3e-6, 6.32e-6, 6.36e-6, 9e-6}) {
        cs.voltages_at(t, out);
        const auto ref = voltage_at(s, t);
        for (std::size_t i = 0; i < stack.electrodes.size(); ++i) {
            const auto it = ref.find(stack.electrodes[i].name);
            const double want = it == ref.end() ? 0.0 : it->second;
            CHECK(out[i] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("pulse_off_time finds the switch-off event") {
    const auto s = baseline_schedule(6.3e-6);
    CHECK(s.pulse_off_time("E1") == doctest::Approx(6.3e-6));
    CHECK(s.pulse_off_time("R") < 0.0);
}
