#ifndef IONFOUNTAIN_TRANSVERSE_HPP
#define IONFOUNTAIN_TRANSVERSE_HPP

#include <string>
#include <vector>

#include "ionfountain/dynamics.hpp"
#include "ionfountain/fields.hpp"

namespace ionfountain::transverse {

struct Ray {
    double x = 0.0;  // m
    double xp = 0.0; // slope, dimensionless
    double y = 0.0;
    double yp = 0.0;
    double s = 0.0;  // axial position along the folded path, m
};

// x and y decouple exactly; a lens acts on both planes, a deflector on one.
struct Element {
    enum class Kind { Drift, Lens, DeflectorX, DeflectorY } kind = Kind::Drift;
    double length = 0.0;    // Drift
    double f = 0.0;         // Lens focal length, m
    double d = 12.2e-3;     // Deflector plate separation, m
    double plate_len = 7e-3; // Deflector length, m
    double u_plus = 0.0;    // V
    double u_minus = 0.0;   // V
    double k_ev = 0.0;      // axial kinetic energy at the element, eV
};

Element drift(double length);
Element thin_lens(double f);
Element deflector_x(double u_plus, double u_minus, double k_ev,
                    double d = 12.2e-3, double plate_len = 7e-3);
Element deflector_y(double u_plus, double u_minus, double k_ev,
                    double d = 12.2e-3, double plate_len = 7e-3);

// Parallel-plate small-angle kick: (U+ - U-) l / (2 d K), K in eV.
double deflection(const Element& e);

Ray trace(Ray ray, const std::vector<Element>& elements);

struct Aperture {
    double radius = 200e-6; // m
};

// Folded beamline of the fountain: launch at the endcap aperture plane,
// drift to the steering station, steering kicks, drift to the turning point,
// reflector thin lens (the fold), then the mirror sequence back.
struct FountainOptics {
    Aperture aperture;
    double station_s = 46.55e-3; // aperture plane -> steering station, m
    double lens_s = 53.55e-3;    // aperture plane -> turning point, m
    double deflector_d = 12.2e-3;
    double deflector_len = 7e-3;
    double k_ev = 180.0;       // axial KE at the station, from the 1D solution
    double u_r = 7.5;          // V
    double lens_constant = 0.0; // f = lens_constant * k_ev / u_r
    double launch_x = 50e-6;
    double launch_xp = 0.0;
    double launch_y = 50e-6;
    double launch_yp = 0.0;

    double focal_length() const { return lens_constant * k_ev / u_r; }
};

// Station position and kinetic energy taken from the axial landscape:
// K(z) = q (Phi(z0) - Phi(z)). The lens constant still needs
// calibrate_retroreflection.
FountainOptics make_fountain_optics(const fields::ElectrodeStack& stack,
                                    const fields::VoltageMap& extraction_voltages,
                                    const dynamics::IonSpecies& ion,
                                    double station_z = 48e-3, double turn_z = 55e-3);

std::vector<Element> round_trip_elements(const FountainOptics& optics, double ux,
                                         double uy);

// Return-ray excursion at the aperture plane for steering offsets (ux, uy).
Ray return_ray(const FountainOptics& optics, double ux, double uy);

struct MapGrid {
    double u_min = -6.0; // V
    double u_max = 6.0;  // V
    double step = 0.1;   // V
    std::vector<double> values() const;
};

struct AcceptanceMap {
    std::vector<double> ux;
    std::vector<double> uy;
    std::vector<std::uint8_t> success; // row-major over (ux, uy)
    bool at(std::size_t i, std::size_t j) const { return success[i * uy.size() + j] != 0; }
    long area() const;            // number of successful cells
    bool contiguous() const;      // one 4-connected component
};

AcceptanceMap acceptance_map(const FountainOptics& optics, const MapGrid& grid);
void write_map_csv(const AcceptanceMap& map, const std::string& path);

// Scans the lens focal length and keeps the one maximizing the acceptance
// area on the given grid (the operational retroreflection condition), then
// fixes lens_constant so that optimum sits at the given U_R.
double calibrate_retroreflection(FountainOptics& optics, const MapGrid& grid,
                                 double f_min = 3e-3, double f_max = 40e-3,
                                 int samples = 160);

} // namespace ionfountain::transverse

#endif
