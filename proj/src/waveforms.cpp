#include "ionfountain/waveforms.hpp"

#include <algorithm>
#include <cmath>

namespace ionfountain::waveforms {

double VoltageSchedule::pulse_off_time(const std::string& electrode) const {
    double best = -1.0;
    for (const auto& e : events)
        if (e.electrode == electrode && std::abs(e.target) < 1e-12)
            if (best < 0.0 || e.time < best) best = e.time;
    return best;
}

namespace {

double folded_value(double initial, const std::vector<SwitchEvent>& events,
                    const std::string& electrode, double t) {
    double v = initial;
    for (const auto& e : events) {
        if (e.electrode != electrode) continue;
        if (t < e.time) break; // events sorted; value before an edge starts
        if (e.edge_duration <= 0.0 || t >= e.time + e.edge_duration) {
            v = e.target;
        } else {
            const double f = (t - e.time) / e.edge_duration;
            v = v + (e.target - v) * f;
            break; // mid-edge; later events cannot have started yet
        }
    }
    return v;
}

} // namespace

fields::VoltageMap voltage_at(const VoltageSchedule& schedule, double t) {
    std::vector<SwitchEvent> sorted = schedule.events;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SwitchEvent& a, const SwitchEvent& b) { return a.time < b.time; });
    fields::VoltageMap out = schedule.initial;
    for (auto& [name, v] : out) v = folded_value(v, sorted, name, t);
    for (const auto& e : sorted)
        if (out.find(e.electrode) == out.end())
            out[e.electrode] = folded_value(0.0, sorted, e.electrode, t);
    return out;
}

RfSample rf_envelope_at(const RfProgram& rf, double t) {
    double env = 1.0;
    const RfRamp& d = rf.ramp_down;
    const RfRamp& u = rf.ramp_up;
    if (t < d.start) {
        env = 1.0;
    } else if (d.duration > 0.0 && t < d.start + d.duration) {
        env = 0.5 * (1.0 + std::cos(PI * (t - d.start) / d.duration));
    } else if (t < u.start) {
        env = 0.0;
    } else if (u.duration > 0.0 && t < u.start + u.duration) {
        env = 0.5 * (1.0 - std::cos(PI * (t - u.start) / u.duration));
    } else {
        env = 1.0;
    }
    RfSample s;
    s.amplitude = 0.5 * rf.u_pp * env;
    s.phase = rf.omega * (t + rf.t_off);
    return s;
}

std::vector<Violation> validate_schedule(const VoltageSchedule& schedule,
                                         const fields::ElectrodeStack& stack) {
    std::vector<Violation> v;
    for (std::size_t i = 0; i < schedule.events.size(); ++i) {
        const auto& e = schedule.events[i];
        if (e.time < 0.0)
            v.push_back({"event-time-negative",
                         "event " + std::to_string(i) + " has time < 0"});
        if (e.edge_duration < 0.0)
            v.push_back({"negative-edge",
                         "event " + std::to_string(i) + " has edge_duration < 0"});
        if (stack.index_of(e.electrode) < 0)
            v.push_back({"unknown-electrode",
                         "event " + std::to_string(i) + " references '" + e.electrode + "'"});
        if (i > 0 && e.time < schedule.events[i - 1].time)
            v.push_back({"unsorted-events",
                         "event " + std::to_string(i) + " is out of order"});
    }
    for (const auto& [name, volt] : schedule.initial) {
        (void)volt;
        if (stack.index_of(name) < 0)
            v.push_back({"unknown-electrode", "initial map references '" + name + "'"});
    }
    if (!(schedule.rf.omega > 0.0))
        v.push_back({"rf-omega", "RF drive frequency must be > 0"});
    const RfRamp& d = schedule.rf.ramp_down;
    const RfRamp& u = schedule.rf.ramp_up;
    if (d.duration < 0.0 || u.duration < 0.0)
        v.push_back({"rf-ramp-duration", "RF ramp durations must be >= 0"});
    if (u.start < d.start + d.duration && d.start < u.start + u.duration)
        v.push_back({"rf-overlap", "RF ramp-up window overlaps ramp-down"});
    return v;
}

CompiledSchedule::CompiledSchedule(const VoltageSchedule& schedule,
                                   const fields::ElectrodeStack& stack)
    : rf_(schedule.rf) {
    std::vector<SwitchEvent> sorted = schedule.events;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SwitchEvent& a, const SwitchEvent& b) { return a.time < b.time; });
    tracks_.resize(stack.electrodes.size());
    for (std::size_t i = 0; i < stack.electrodes.size(); ++i) {
        const std::string& name = stack.electrodes[i].name;
        double cur = 0.0;
        auto it = schedule.initial.find(name);
        if (it != schedule.initial.end()) cur = it->second;
        auto& track = tracks_[i];
        track.push_back({0.0, cur});
        for (const auto& e : sorted) {
            if (e.electrode != name) continue;
            track.push_back({e.time, cur});
            track.push_back({e.time + std::max(e.edge_duration, 0.0), e.target});
            cur = e.target;
        }
    }
}

void CompiledSchedule::voltages_at(double t, std::vector<double>& out) const {
    out.resize(tracks_.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        const auto& track = tracks_[i];
        if (t <= track.front().t) {
            out[i] = track.front().v;
            continue;
        }
        if (t >= track.back().t) {
            out[i] = track.back().v;
            continue;
        }
        std::size_t j = 1;
        while (track[j].t <= t) ++j; // short tracks; linear scan
        const auto& a = track[j - 1];
        const auto& b = track[j];
        out[i] = (b.t > a.t) ? a.v + (b.v - a.v) * (t - a.t) / (b.t - a.t) : b.v;
    }
}

VoltageSchedule baseline_schedule(double dt_puls, double t_rf, double edge) {
    VoltageSchedule s;
    s.initial = fields::baseline_voltages();
    s.initial["E1"] = 0.0;
    s.initial["F"] = 0.0;
    s.events.push_back({0.0, "E1", -200.0, edge});
    s.events.push_back({0.0, "F", -200.0, edge});
    s.events.push_back({dt_puls, "E1", 0.0, edge});
    s.events.push_back({dt_puls, "F", 0.0, edge});
    s.rf.ramp_down = {0.0, 0.5e-6};
    s.rf.ramp_up = {t_rf, 0.5e-6};
    return s;
}

} // namespace ionfountain::waveforms
