#ifndef IONFOUNTAIN_DYNAMICS_HPP
#define IONFOUNTAIN_DYNAMICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "ionfountain/fields.hpp"
#include "ionfountain/waveforms.hpp"

namespace ionfountain::dynamics {

struct IonSpecies {
    double mass = 0.0;   // kg
    double charge = 0.0; // C
    std::string label;
};

IonSpecies ca40(); // 39.9626 u minus one electron mass, charge +e

struct IonState {
    double t = 0.0; // s
    double z = 0.0; // m
    double v = 0.0; // m/s
};

enum class Termination { PulseOff, Escaped, MaxTime };

struct Trajectory {
    std::vector<IonState> samples; // at step rate / decimation
    IonState terminal;
    Termination reason = Termination::MaxTime;
    double dt = 0.0;
    int decimation = 1;
};

// Optional axial RF force near the endcap:
//   F = q E0 g(z) sin(Omega t + phi_RF) env(t) / (U_pp / 2),
// with g(z) = exp(-(z - center)^2 / (2 sigma^2)).
struct RfAxialForceModel {
    bool enabled = false;
    double e0 = 0.0;          // V/m
    double sigma = 0.4e-3;    // m
    double center_z = 1.45e-3; // m, near E1
    double g(double z) const;
};

struct SimParams {
    double dt = 2e-9;          // s
    double z_init = 0.0;       // m
    double v_init = 0.0;       // m/s
    double max_time = 20e-6;   // s
    int record_decimation = 10; // 0 disables sample recording
    RfAxialForceModel rf_force;
};

// Raised when the acceleration goes non-finite; carries the last good state.
class NumericalBlowup : public SimulationError {
public:
    NumericalBlowup(const std::string& msg, IonState last)
        : SimulationError(msg), last_good(last) {}
    IonState last_good;
};

class NotReflected : public SimulationError {
public:
    using SimulationError::SimulationError;
};

using AccelFn = std::function<double(double z, double t)>;

// One velocity-Verlet update.
IonState step(const IonState& state, const AccelFn& accel, double dt);

// Integrates from (z_init, v_init) at t = 0 until the E1 pulse-off event
// time, escape past the stack boundaries, or max_time.
Trajectory simulate(const fields::ElectrodeStack& stack,
                    const waveforms::VoltageSchedule& schedule,
                    const IonSpecies& ion, const SimParams& params);

// Position/time of maximum z, parabolic refinement across the bracketing
// samples. Requires a recorded sign change of v.
struct TurningPoint {
    double z = 0.0;
    double t = 0.0;
};
TurningPoint turning_point(const Trajectory& traj);

double peak_speed(const Trajectory& traj);

// Apex of the return leg: first upward zero crossing of v after the turning
// point (the ion back at its launch potential, momentarily at rest).
IonState return_apex(const Trajectory& traj);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);

} // namespace ionfountain::dynamics

#endif
