#include "ionfountain/dynamics.hpp"

#include <cmath>
#include <fstream>

namespace ionfountain::dynamics {

IonSpecies ca40() {
    IonSpecies s;
    s.mass = 39.9626 * ATOMIC_MASS_UNIT - ELECTRON_MASS;
    s.charge = ELEMENTARY_CHARGE;
    s.label = "40Ca+";
    return s;
}

double RfAxialForceModel::g(double z) const {
    const double u = (z - center_z) / sigma;
    return std::exp(-0.5 * u * u);
}

IonState step(const IonState& state, const AccelFn& accel, double dt) {
    if (!(dt > 0.0)) throw ConfigError("step requires dt > 0");
    const double a0 = accel(state.z, state.t);
    if (!std::isfinite(a0)) throw NumericalBlowup("non-finite acceleration", state);
    IonState next;
    next.z = state.z + state.v * dt + 0.5 * a0 * dt * dt;
    next.t = state.t + dt;
    const double a1 = accel(next.z, next.t);
    if (!std::isfinite(a1)) throw NumericalBlowup("non-finite acceleration", state);
    next.v = state.v + 0.5 * (a0 + a1) * dt;
    return next;
}

namespace {

class Force {
public:
    Force(const fields::ElectrodeStack& stack, const waveforms::VoltageSchedule& schedule,
          const IonSpecies& ion, const RfAxialForceModel& rf_force)
        : eval_(stack), compiled_(schedule, stack), ion_(ion), rf_force_(rf_force) {}

    double accel(double z, double t) {
        compiled_.voltages_at(t, volts_);
        double a = ion_.charge / ion_.mass * eval_.field(volts_, z);
        if (rf_force_.enabled) {
            const waveforms::RfSample s = waveforms::rf_envelope_at(compiled_.rf(), t);
            const double env = s.amplitude / (0.5 * compiled_.rf().u_pp);
            a += ion_.charge / ion_.mass * rf_force_.e0 * rf_force_.g(z) *
                 std::sin(s.phase) * env;
        }
        return a;
    }

private:
    fields::PotentialEvaluator eval_;
    waveforms::CompiledSchedule compiled_;
    IonSpecies ion_;
    RfAxialForceModel rf_force_;
    std::vector<double> volts_;
};

} // namespace

Trajectory simulate(const fields::ElectrodeStack& stack,
                    const waveforms::VoltageSchedule& schedule,
                    const IonSpecies& ion, const SimParams& params) {
    if (!(params.dt > 0.0)) throw ConfigError("simulate requires dt > 0");
    const auto violations = waveforms::validate_schedule(schedule, stack);
    if (!violations.empty())
        throw ConfigError("invalid schedule: " + violations.front().code + ": " +
                          violations.front().message);

    const double t_off = schedule.pulse_off_time("E1");
    double stop = params.max_time;
    Termination stop_reason = Termination::MaxTime;
    if (t_off >= 0.0 && t_off < params.max_time) {
        stop = t_off;
        stop_reason = Termination::PulseOff;
    }

    Force force(stack, schedule, ion, params.rf_force);

    Trajectory traj;
    traj.dt = params.dt;
    traj.decimation = params.record_decimation;

    IonState s{0.0, params.z_init, params.v_init};
    const int decim = params.record_decimation;
    if (decim > 0) traj.samples.push_back(s);

    double a_cur = force.accel(s.z, s.t);
    if (!std::isfinite(a_cur)) throw NumericalBlowup("non-finite acceleration", s);

    const double dt = params.dt;
    long step_count = 0;
    bool escaped = false;
    while (s.t + dt <= stop + 1e-18) {
        IonState next;
        next.z = s.z + s.v * dt + 0.5 * a_cur * dt * dt;
        next.t = s.t + dt;
        const double a_next = force.accel(next.z, next.t);
        if (!std::isfinite(a_next) || !std::isfinite(next.z))
            throw NumericalBlowup("non-finite acceleration", s);
        next.v = s.v + 0.5 * (a_cur + a_next) * dt;
        s = next;
        a_cur = a_next;
        ++step_count;
        if (decim > 0 && step_count % decim == 0) traj.samples.push_back(s);
        if (s.z > stack.max_z || s.z < stack.min_z) {
            escaped = true;
            break;
        }
    }

    if (!escaped && stop - s.t > 1e-15) {
        // partial step onto the stop time
        const double h = stop - s.t;
        IonState next;
        next.z = s.z + s.v * h + 0.5 * a_cur * h * h;
        next.t = stop;
        const double a_next = force.accel(next.z, next.t);
        if (!std::isfinite(a_next) || !std::isfinite(next.z))
            throw NumericalBlowup("non-finite acceleration", s);
        next.v = s.v + 0.5 * (a_cur + a_next) * h;
        s = next;
    }

    traj.terminal = s;
    traj.reason = escaped ? Termination::Escaped : stop_reason;
    return traj;
}

TurningPoint turning_point(const Trajectory& traj) {
    const auto& smp = traj.samples;
    if (smp.size() < 3) throw NotReflected("trajectory too short for a turning point");
    // first downward flip of v = the fountain's turning point
    std::size_t iflip = 0;
    for (std::size_t i = 1; i < smp.size(); ++i)
        if (smp[i - 1].v > 0.0 && smp[i].v <= 0.0) { iflip = i; break; }
    if (iflip == 0) throw NotReflected("velocity never changes sign (not reflected)");
    std::size_t imax = iflip > 1 ? iflip - 1 : 1;
    if (smp[iflip].z > smp[imax].z) imax = iflip;
    if (imax + 1 >= smp.size())
        throw NotReflected("no interior maximum of z (not reflected)");

    const IonState& a = smp[imax - 1];
    const IonState& b = smp[imax];
    const IonState& c = smp[imax + 1];
    const double h = b.t - a.t;
    const double denom = c.z - 2.0 * b.z + a.z;
    TurningPoint tp;
    if (denom == 0.0) {
        tp.t = b.t;
        tp.z = b.z;
    } else {
        const double delta = -0.5 * (c.z - a.z) / denom; // in units of h
        tp.t = b.t + delta * h;
        tp.z = b.z - 0.25 * (c.z - a.z) * delta;
    }
    return tp;
}

double peak_speed(const Trajectory& traj) {
    if (traj.samples.empty())
        throw SimulationError("peak_speed requires a non-empty trajectory");
    double m = 0.0;
    for (const auto& s : traj.samples) m = std::max(m, std::abs(s.v));
    m = std::max(m, std::abs(traj.terminal.v));
    return m;
}

IonState return_apex(const Trajectory& traj) {
    const TurningPoint tp = turning_point(traj);
    const auto& smp = traj.samples;
    for (std::size_t i = 1; i < smp.size(); ++i) {
        if (smp[i].t <= tp.t) continue;
        if (smp[i - 1].v < 0.0 && smp[i].v >= 0.0) {
            const double dv = smp[i].v - smp[i - 1].v;
            const double f = dv != 0.0 ? -smp[i - 1].v / dv : 0.0;
            IonState apex;
            apex.t = smp[i - 1].t + f * (smp[i].t - smp[i - 1].t);
            apex.z = smp[i - 1].z + f * (smp[i].z - smp[i - 1].z);
            apex.v = 0.0;
            return apex;
        }
    }
    throw NotReflected("no return apex after the turning point");
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << "t_s,z_m,v_mps\n";
    out.precision(12);
    for (const auto& s : traj.samples)
        out << s.t << "," << s.z << "," << s.v << "\n";
}

} // namespace ionfountain::dynamics
