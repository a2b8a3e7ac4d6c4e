#ifndef IONFOUNTAIN_CONFIG_HPP
#define IONFOUNTAIN_CONFIG_HPP

#include <optional>
#include <string>

#include "ionfountain/experiments.hpp"
#include "ionfountain/transverse.hpp"

namespace ionfountain::config {

struct WindowSection {
    double start = 5.5e-6;
    double stop = 7.5e-6;
    double resolution = 10e-9;
};

struct CalibrationSection {
    double target_turn = 55e-3;
    double target_tof = 6.3e-6;
};

struct SteeringSection {
    transverse::MapGrid grid;
    double station_z = 48e-3;
    double turn_z = 55e-3;
    double launch_x = 50e-6;
    double launch_xp = 0.0;
    double launch_y = 50e-6;
    double launch_yp = 0.0;
    double u_r = 7.5;
    double aperture_radius = 200e-6;
    std::optional<double> lens_constant; // absent: calibrate on the grid
};

struct RunConfig {
    experiments::RunSetup setup;
    experiments::InitialDistribution distribution;
    experiments::CollisionLossModel loss;
    long mc_trials = 100;
    std::optional<experiments::SweepGrid> sweep;
    WindowSection window;
    CalibrationSection calibration;
    SteeringSection steering;
};

// Parses and validates the JSON run configuration. ConfigError messages name
// the offending field as a /section/field path.
RunConfig load_run_config(const std::string& path);

// Stack-only files, as written by the calibrate command.
fields::ElectrodeStack load_stack_json(const std::string& path);
void write_stack_json(const fields::ElectrodeStack& stack, const std::string& path);

} // namespace ionfountain::config

#endif
