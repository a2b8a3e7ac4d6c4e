#ifndef IONFOUNTAIN_WAVEFORMS_HPP
#define IONFOUNTAIN_WAVEFORMS_HPP

#include <string>
#include <vector>

#include "ionfountain/fields.hpp"

namespace ionfountain::waveforms {

// Linear-edged DC switch: the value starts moving at `time` and settles on
// `target` at time + edge_duration.
struct SwitchEvent {
    double time = 0.0;          // s
    std::string electrode;
    double target = 0.0;        // V
    double edge_duration = 50e-9; // s, < 100 ns honors the hardware switch spec
};

struct RfRamp {
    double start = 0.0;    // s
    double duration = 0.0; // s
};

// RF drive: amplitude envelope (cosine ramps) plus phase Omega*(t + t_off).
// Amplitude modulation only; the phase is continuous across ramps.
struct RfProgram {
    double omega = TWO_PI * 17.85e6; // rad/s
    double u_pp = 150.0;             // V peak-to-peak
    double t_off = 0.0;              // s, phi_RF = omega * t_off
    RfRamp ramp_down{0.0, 0.5e-6};
    RfRamp ramp_up{6.35e-6, 0.5e-6};

    double period() const { return TWO_PI / omega; }
};

struct RfSample {
    double amplitude = 0.0; // V, in [0, u_pp/2]
    double phase = 0.0;     // rad
};

struct VoltageSchedule {
    fields::VoltageMap initial;
    std::vector<SwitchEvent> events;
    RfProgram rf;

    // Convenience: time of the first event that switches `electrode` to ~0 V.
    // Returns a negative value when there is none.
    double pulse_off_time(const std::string& electrode) const;
};

struct Violation {
    std::string code;    // "unsorted-events", "unknown-electrode", ...
    std::string message;
};

fields::VoltageMap voltage_at(const VoltageSchedule& schedule, double t);
RfSample rf_envelope_at(const RfProgram& rf, double t);
std::vector<Violation> validate_schedule(const VoltageSchedule& schedule,
                                         const fields::ElectrodeStack& stack);

// Integrator-facing form: per-electrode piecewise-linear breakpoints in the
// stack's electrode order. Evaluation is allocation-free.
class CompiledSchedule {
public:
    CompiledSchedule(const VoltageSchedule& schedule, const fields::ElectrodeStack& stack);

    void voltages_at(double t, std::vector<double>& out) const;
    std::size_t channels() const { return tracks_.size(); }
    const RfProgram& rf() const { return rf_; }

private:
    struct Point {
        double t;
        double v;
    };
    std::vector<std::vector<Point>> tracks_; // per electrode, sorted in t
    RfProgram rf_;
};

// Shipped baseline program: extraction already armed in the initial map,
// E1/F switched back to 0 V at dt_puls, RF ramped down at t = 0 and back up
// at t_rf.
VoltageSchedule baseline_schedule(double dt_puls, double t_rf = 6.35e-6,
                                  double edge = 50e-9);

} // namespace ionfountain::waveforms

#endif
