#ifndef IONFOUNTAIN_EXPERIMENTS_HPP
#define IONFOUNTAIN_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ionfountain/dynamics.hpp"
#include "ionfountain/recapture.hpp"
#include "ionfountain/waveforms.hpp"

namespace ionfountain::experiments {

// --- deterministic per-trial random substreams -----------------------------
//
// Contract (stable; results must not depend on worker count):
//   stream(seed, index) seeds a splitmix64 generator with
//   mix(seed XOR (0x9E3779B97F4A7C15 * (index + 1))), and every draw of the
//   trial comes from that stream in a fixed order. Gaussians use Box-Muller
//   on consecutive uniforms.
std::uint64_t splitmix64(std::uint64_t& state);

class TrialRng {
public:
    TrialRng(std::uint64_t seed, std::uint64_t index);
    double uniform(); // [0, 1)
    double normal();  // standard normal

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// --- experiment setup -------------------------------------------------------

struct RunSetup {
    fields::ElectrodeStack stack;
    waveforms::VoltageSchedule schedule;
    dynamics::IonSpecies ion;
    dynamics::SimParams sim;
    recapture::RecaptureCriterion criterion;
};

// Delta: launch exactly at (z_init, v_init). Thermal: Gaussian spread with
// sigma_v = sqrt(kB T / m), sigma_z = sigma_v / omega_z.
struct InitialDistribution {
    enum class Kind { Delta, Thermal } kind = Kind::Delta;
    double temperature = 0.5e-3; // K
};

// Optional background-collision loss composed after the dynamical verdict:
// Bernoulli with p = rate * wait.
struct CollisionLossModel {
    bool enabled = false;
    double rate_hz = 1.0 / 60.0;
    double wait_s = 1.0;
};

// 0 workers = serial reference kernel, otherwise the OpenMP kernel with a
// capped thread count. Both produce bit-identical results.
struct ExecutionPolicy {
    int workers = 0;
};

struct TrialRecord {
    long index = 0;
    double z0 = 0.0;
    double v0 = 0.0;
    recapture::Outcome outcome;
    bool blowup = false;         // numerical-blowup recorded as lost
    bool collision_loss = false; // lost to the background-collision draw
    bool success() const {
        return outcome.verdict == recapture::Verdict::Recaptured && !collision_loss;
    }
};

TrialRecord run_trial(const RunSetup& setup, long index, double z0, double v0);

// --- statistics -------------------------------------------------------------

double probit(double p); // inverse standard normal CDF

struct WilsonInterval {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};
WilsonInterval wilson_interval(long k, long n, double confidence);

// --- Monte Carlo ------------------------------------------------------------

struct MonteCarloReport {
    long n_trials = 0;
    long n_success = 0;
    double point = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    std::uint64_t seed = 0;
    std::vector<TrialRecord> trials;
};

MonteCarloReport monte_carlo(const RunSetup& setup, const InitialDistribution& dist,
                             long n, std::uint64_t seed,
                             const CollisionLossModel& loss = {},
                             const ExecutionPolicy& policy = {});

std::string format_report(const MonteCarloReport& r);
void write_trials_csv(const MonteCarloReport& r, const std::string& path);

// --- parameter sweeps -------------------------------------------------------

// Supported parameter paths:
//   schedule.dt_puls        switch-off time of the E1/F extraction pulse
//   rf.t_rf                 RF ramp-up start
//   rf.t_off                RF phase offset
//   voltages.<electrode>    initial DC voltage
//   stack.<electrode>.amplitude | stack.<electrode>.center
void apply_param(RunSetup& setup, const std::string& path, double value);

struct SweepAxis {
    std::string param;
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;
    std::vector<double> values() const;
};

struct SweepGrid {
    SweepAxis axis1;
    std::optional<SweepAxis> axis2;
    int repeats = 1; // per-cell trials when a stochastic distribution is set
};

struct SweepCell {
    double p1 = 0.0;
    double p2 = 0.0;
    long n = 0;
    long k = 0;
    double frac = 0.0;
    bool blowup = false;
};

std::vector<SweepCell> sweep(const RunSetup& setup, const SweepGrid& grid,
                             const InitialDistribution& dist, std::uint64_t seed,
                             const ExecutionPolicy& policy = {});

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path);

// --- flight metrics, pulse window, calibration -------------------------------

struct FlightMetrics {
    double z_turn = 0.0;  // m
    double t_turn = 0.0;  // s
    double tof = 0.0;     // s, return apex time
    double peak_speed = 0.0;
};

// Free-flight probe: extraction switched on at t = 0 (E1/F ramped over
// switch_edge), then held static with no pulse-off.
FlightMetrics measure_flight(const fields::ElectrodeStack& stack,
                             const dynamics::IonSpecies& ion,
                             const fields::VoltageMap& extraction_voltages,
                             double dt = 2e-9, double max_time = 10e-6,
                             double switch_edge = 50e-9);

class WindowNotFound : public SimulationError {
public:
    using SimulationError::SimulationError;
};

struct PulseWindow {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

// Earliest and latest dt_puls with a recaptured verdict (delta launch),
// boundaries refined by bisection to `resolution`.
PulseWindow find_pulse_window(const RunSetup& setup, double scan_lo, double scan_hi,
                              double resolution = 10e-9);

struct ReflectorCalibration {
    double scale = 0.0;     // reflector unit-potential amplitude
    double center = 0.0;    // ramp midpoint, m
    double achieved_turn = 0.0;
    double achieved_tof = 0.0;
    int iterations = 0;
    bool converged = false;
};

class CalibrationFailed : public SimulationError {
public:
    CalibrationFailed(const std::string& msg, ReflectorCalibration best)
        : SimulationError(msg), best_so_far(best) {}
    ReflectorCalibration best_so_far;
};

// Two-parameter secant (Broyden) fit of the reflector scale and position to
// the turning-point and time-of-flight targets. Mutates the stack in place
// and reports the achieved values.
ReflectorCalibration calibrate_reflector(fields::ElectrodeStack& stack,
                                         const dynamics::IonSpecies& ion,
                                         const fields::VoltageMap& extraction_voltages,
                                         double target_turn = 55e-3,
                                         double target_tof = 6.3e-6,
                                         int max_iterations = 100);

} // namespace ionfountain::experiments

#endif
