#include "ionfountain/recapture.hpp"

#include <cmath>

namespace ionfountain::recapture {

ResidualEnergy residual_energy(const dynamics::IonState& state,
                               const dynamics::IonSpecies& ion, double omega_z) {
    if (!(omega_z > 0.0)) throw ConfigError("residual_energy requires omega_z > 0");
    ResidualEnergy e;
    e.joules = 0.5 * ion.mass * state.v * state.v +
               0.5 * ion.mass * omega_z * omega_z * state.z * state.z;
    e.quanta = e.joules / (HBAR * omega_z);
    return e;
}

Outcome classify(const dynamics::IonState& state, dynamics::Termination reason,
                 const dynamics::IonSpecies& ion, const RecaptureCriterion& criterion) {
    if (!std::isfinite(state.z) || !std::isfinite(state.v))
        throw SimulationError("classify requires a finite state");
    Outcome o;
    o.z_final = state.z;
    o.v_final = state.v;
    o.reason = reason;
    const ResidualEnergy e = residual_energy(state, ion, criterion.omega_z);
    o.energy_j = e.joules;
    o.energy_quanta = e.quanta;

    bool inside = false;
    if (criterion.mode == RecaptureCriterion::Mode::Instantaneous) {
        inside = std::abs(state.z) <= criterion.max_distance &&
                 std::abs(state.v) <= criterion.max_speed;
    } else {
        inside = e.joules <= criterion.trap_depth;
    }
    o.verdict = (inside && reason == dynamics::Termination::PulseOff)
                    ? Verdict::Recaptured
                    : Verdict::Lost;
    return o;
}

std::string verdict_name(Verdict v) {
    return v == Verdict::Recaptured ? "recaptured" : "lost";
}

std::string termination_name(dynamics::Termination t) {
    switch (t) {
    case dynamics::Termination::PulseOff: return "pulse-off";
    case dynamics::Termination::Escaped: return "escaped";
    case dynamics::Termination::MaxTime: return "max-time";
    }
    return "unknown";
}

} // namespace ionfountain::recapture
