#ifndef IONFOUNTAIN_RECAPTURE_HPP
#define IONFOUNTAIN_RECAPTURE_HPP

#include <string>

#include "ionfountain/dynamics.hpp"

namespace ionfountain::recapture {

// Success test on the terminal state. Closed bounds. The alternate
// energy-bound mode accepts any state whose motional energy in the restored
// well stays below trap_depth.
struct RecaptureCriterion {
    double max_distance = 100e-6; // m
    double max_speed = 50.0;      // m/s
    enum class Mode { Instantaneous, EnergyBound } mode = Mode::Instantaneous;
    double trap_depth = 0.0;      // J, EnergyBound mode only
    double omega_z = TWO_PI * 147e3; // rad/s, for the energy computations
};

enum class Verdict { Recaptured, Lost };

struct Outcome {
    Verdict verdict = Verdict::Lost;
    double z_final = 0.0;
    double v_final = 0.0;
    double energy_j = 0.0;      // residual motional energy in the restored well
    double energy_quanta = 0.0; // in units of hbar * omega_z
    dynamics::Termination reason = dynamics::Termination::MaxTime;
};

struct ResidualEnergy {
    double joules = 0.0;
    double quanta = 0.0;
};

// E = 1/2 m v^2 + 1/2 m w^2 z^2, and E / (hbar w).
ResidualEnergy residual_energy(const dynamics::IonState& state,
                               const dynamics::IonSpecies& ion, double omega_z);

Outcome classify(const dynamics::IonState& state, dynamics::Termination reason,
                 const dynamics::IonSpecies& ion, const RecaptureCriterion& criterion);

std::string verdict_name(Verdict v);
std::string termination_name(dynamics::Termination t);

} // namespace ionfountain::recapture

#endif
