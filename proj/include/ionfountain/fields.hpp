#ifndef IONFOUNTAIN_FIELDS_HPP
#define IONFOUNTAIN_FIELDS_HPP

#include <map>
#include <string>
#include <vector>

#include "ionfountain/constants.hpp"
#include "ionfountain/errors.hpp"

namespace ionfountain::fields {

// Natural cubic spline through strictly increasing abscissae. Evaluates to
// zero outside the sample range.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double value(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    double x_min() const { return x_.empty() ? 0.0 : x_.front(); }
    double x_max() const { return x_.empty() ? 0.0 : x_.back(); }
    std::size_t size() const { return x_.size(); }
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

private:
    std::size_t interval(double x) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_; // second derivatives at the knots
};

enum class ElectrodeKind {
    GaussianSegment, // phi = A exp(-(z-c)^2 / 2 w^2)
    AperturePlate,   // phi = A/2 [1 + tanh(f (z-c)/w)] * screen
    FlatTube,        // phi = A/2 [tanh((z-l)/we) - tanh((z-r)/we)]
    ReflectorRamp,   // phi = A/2 [1 + tanh(f (z-c)/w)]
    Tabulated,
};

// One electrode's dimensionless unit potential (volts on axis per volt
// applied, all other electrodes grounded). |phi| <= 1 everywhere.
struct ElectrodeModel {
    ElectrodeKind kind = ElectrodeKind::GaussianSegment;
    double center_z = 0.0;   // m
    double amplitude = 0.0;  // dimensionless, |amplitude| <= 1
    double width = 0.0;      // m; gaussian sigma / tanh edge scale / tube length

    double edge_width = 1e-3;   // m, flat-tube edge scale
    int facing = +1;            // +1: plateau toward +z (aperture/ramp)

    // Optional screening edge for AperturePlate: the plateau decays around
    // screen_z over screen_width (grounded neighbours cap its reach).
    // screen_width <= 0 disables it, recovering the bare tanh step.
    double screen_z = 0.0;
    double screen_width = 0.0;

    CubicSpline table; // Tabulated only

    void validate() const; // throws ConfigError on bad parameters
};

ElectrodeModel make_gaussian_segment(double center_z, double amplitude, double width);
ElectrodeModel make_aperture_plate(double center_z, double amplitude, double width,
                                   int facing = +1, double screen_z = 0.0,
                                   double screen_width = 0.0);
ElectrodeModel make_flat_tube(double center_z, double amplitude, double length,
                              double edge_width);
ElectrodeModel make_reflector_ramp(double center_z, double amplitude, double width,
                                   int facing = +1);
// Samples from a two-column table; z strictly increasing, >= 4 rows.
ElectrodeModel make_tabulated(const std::vector<double>& z,
                              const std::vector<double>& phi);
// Reads CSV with header line "z,phi" (z in meters).
ElectrodeModel load_tabulated_csv(const std::string& path);

double unit_potential(const ElectrodeModel& m, double z);
double unit_potential_derivative(const ElectrodeModel& m, double z);
double unit_potential_second_derivative(const ElectrodeModel& m, double z);

struct NamedElectrode {
    std::string name;
    ElectrodeModel model;
};

// Ordered electrode set defining the axial field landscape.
struct ElectrodeStack {
    std::vector<NamedElectrode> electrodes;
    double trap_center_z = 0.0; // m
    double max_z = 80e-3;       // m, escape boundary behind the reflector
    double min_z = -2e-3;       // m, escape boundary behind E2

    int index_of(const std::string& name) const; // -1 if absent
    const ElectrodeModel& model(const std::string& name) const;
    ElectrodeModel& model(const std::string& name);
    void validate() const; // name uniqueness, endcap bracket, model validity
};

using VoltageMap = std::map<std::string, double>;

double total_potential(const ElectrodeStack& stack, const VoltageMap& voltages, double z);
double axial_field(const ElectrodeStack& stack, const VoltageMap& voltages, double z);

// Fast path for the integrator: voltages held in a vector aligned with
// stack.electrodes. Entries with |U| below threshold are skipped.
class PotentialEvaluator {
public:
    explicit PotentialEvaluator(const ElectrodeStack& stack);

    // voltages.size() must equal the electrode count.
    double potential(const std::vector<double>& voltages, double z) const;
    double field(const std::vector<double>& voltages, double z) const;
    double curvature(const std::vector<double>& voltages, double z) const;

    std::vector<double> voltages_from_map(const VoltageMap& v) const; // missing -> 0

private:
    const ElectrodeStack* stack_;
};

struct IonSpecies; // defined in dynamics.hpp

// kappa2 = m w^2 / (q |U|): curvature of the unit potential that yields the
// target axial frequency at the given segment voltage.
double calibrate_segment_curvature(double ion_mass, double ion_charge,
                                   double target_omega_z, double u_seg);

// Gaussian segment with A/w^2 = kappa2.
ElectrodeModel make_calibrated_segment(double center_z, double amplitude, double kappa2);

// Default desk-scale stack: 11 trap segments, endcaps E1/E2 at +-1.45 mm,
// focusing tube F at 8 mm, merged reflector R ramping up toward 62 mm.
// Segment widths come from the 147 kHz curvature calibration for 40Ca+ at
// -0.6 V on seg6. Reflector scale/position are starting values for
// experiments::calibrate_reflector.
ElectrodeStack default_stack();

// Baseline static voltages: seg6 -0.6 V, E1 = F = -200 V, R = +7.5 V, rest 0.
VoltageMap baseline_voltages();

} // namespace ionfountain::fields

#endif
