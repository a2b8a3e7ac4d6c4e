#include "ionfountain/transverse.hpp"

#include <cmath>
#include <fstream>

namespace ionfountain::transverse {

Element drift(double length) {
    Element e;
    e.kind = Element::Kind::Drift;
    e.length = length;
    if (!(length > 0.0)) throw ConfigError("drift length must be > 0");
    return e;
}

Element thin_lens(double f) {
    Element e;
    e.kind = Element::Kind::Lens;
    e.f = f;
    if (f == 0.0) throw ConfigError("lens focal length must be nonzero");
    return e;
}

static Element make_deflector(Element::Kind kind, double u_plus, double u_minus,
                              double k_ev, double d, double plate_len) {
    Element e;
    e.kind = kind;
    e.u_plus = u_plus;
    e.u_minus = u_minus;
    e.k_ev = k_ev;
    e.d = d;
    e.plate_len = plate_len;
    if (!(d > 0.0) || !(plate_len > 0.0))
        throw ConfigError("deflector geometry must be positive");
    return e;
}

Element deflector_x(double u_plus, double u_minus, double k_ev, double d,
                    double plate_len) {
    return make_deflector(Element::Kind::DeflectorX, u_plus, u_minus, k_ev, d, plate_len);
}

Element deflector_y(double u_plus, double u_minus, double k_ev, double d,
                    double plate_len) {
    return make_deflector(Element::Kind::DeflectorY, u_plus, u_minus, k_ev, d, plate_len);
}

double deflection(const Element& e) {
    if (!(e.k_ev > 0.0)) throw ConfigError("deflection requires kinetic energy > 0");
    return (e.u_plus - e.u_minus) * e.plate_len / (2.0 * e.d * e.k_ev);
}

Ray trace(Ray ray, const std::vector<Element>& elements) {
    for (const auto& e : elements) {
        switch (e.kind) {
        case Element::Kind::Drift:
            ray.x += e.length * ray.xp;
            ray.y += e.length * ray.yp;
            ray.s += e.length;
            break;
        case Element::Kind::Lens:
            ray.xp -= ray.x / e.f;
            ray.yp -= ray.y / e.f;
            break;
        case Element::Kind::DeflectorX:
            ray.xp += deflection(e);
            break;
        case Element::Kind::DeflectorY:
            ray.yp += deflection(e);
            break;
        }
    }
    return ray;
}

FountainOptics make_fountain_optics(const fields::ElectrodeStack& stack,
                                    const fields::VoltageMap& extraction_voltages,
                                    const dynamics::IonSpecies& ion,
                                    double station_z, double turn_z) {
    FountainOptics o;
    const double z0 = stack.trap_center_z;
    const double phi0 = fields::total_potential(stack, extraction_voltages, z0);
    const double phis = fields::total_potential(stack, extraction_voltages, station_z);
    o.k_ev = ion.charge * (phi0 - phis) / ELEMENTARY_CHARGE; // eV for charge +e
    if (!(o.k_ev > 0.0))
        throw ConfigError("ion is not moving at the steering station in this landscape");
    const double aperture_z = stack.index_of("E1") >= 0 ? stack.model("E1").center_z
                                                        : 1.45e-3;
    o.station_s = station_z - aperture_z;
    o.lens_s = turn_z - aperture_z;
    return o;
}

std::vector<Element> round_trip_elements(const FountainOptics& o, double ux, double uy) {
    const double l1 = o.station_s;
    const double l2 = o.lens_s - o.station_s;
    if (!(l1 > 0.0) || !(l2 > 0.0))
        throw ConfigError("steering station must sit between aperture and turning point");
    std::vector<Element> e;
    e.push_back(drift(l1));
    e.push_back(deflector_x(ux, 0.0, o.k_ev, o.deflector_d, o.deflector_len));
    e.push_back(deflector_y(uy, 0.0, o.k_ev, o.deflector_d, o.deflector_len));
    e.push_back(drift(l2));
    e.push_back(thin_lens(o.focal_length())); // reflector, folded
    e.push_back(drift(l2));
    e.push_back(deflector_x(ux, 0.0, o.k_ev, o.deflector_d, o.deflector_len));
    e.push_back(deflector_y(uy, 0.0, o.k_ev, o.deflector_d, o.deflector_len));
    e.push_back(drift(l1));
    return e;
}

Ray return_ray(const FountainOptics& o, double ux, double uy) {
    Ray r;
    r.x = o.launch_x;
    r.xp = o.launch_xp;
    r.y = o.launch_y;
    r.yp = o.launch_yp;
    return trace(r, round_trip_elements(o, ux, uy));
}

std::vector<double> MapGrid::values() const {
    if (!(step > 0.0) || !(u_max > u_min)) throw ConfigError("bad acceptance-map grid");
    std::vector<double> v;
    for (double u = u_min; u <= u_max + 0.5 * step * 1e-9; u += step) v.push_back(u);
    return v;
}

AcceptanceMap acceptance_map(const FountainOptics& optics, const MapGrid& grid) {
    AcceptanceMap map;
    map.ux = grid.values();
    map.uy = grid.values();
    map.success.assign(map.ux.size() * map.uy.size(), 0);
    const double r = optics.aperture.radius;
    for (std::size_t i = 0; i < map.ux.size(); ++i) {
        for (std::size_t j = 0; j < map.uy.size(); ++j) {
            const Ray ret = return_ray(optics, map.ux[i], map.uy[j]);
            const bool ok = std::abs(ret.x) <= r && std::abs(ret.y) <= r;
            map.success[i * map.uy.size() + j] = ok ? 1 : 0;
        }
    }
    return map;
}

long AcceptanceMap::area() const {
    long n = 0;
    for (auto s : success) n += s;
    return n;
}

bool AcceptanceMap::contiguous() const {
    const std::size_t nx = ux.size(), ny = uy.size();
    std::vector<std::uint8_t> seen(success.size(), 0);
    std::size_t start = success.size();
    for (std::size_t i = 0; i < success.size(); ++i)
        if (success[i]) { start = i; break; }
    if (start == success.size()) return false; // empty map: no blob at all
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    long filled = 0;
    while (!stack.empty()) {
        const std::size_t c = stack.back();
        stack.pop_back();
        ++filled;
        const std::size_t i = c / ny, j = c % ny;
        const std::size_t nbrs[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& nb : nbrs) {
            if (nb[0] >= nx || nb[1] >= ny) continue; // unsigned wrap covers i==0
            const std::size_t k = nb[0] * ny + nb[1];
            if (success[k] && !seen[k]) {
                seen[k] = 1;
                stack.push_back(k);
            }
        }
    }
    return filled == area();
}

void write_map_csv(const AcceptanceMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot open output file: " + path);
    out << "ux_v,uy_v,success\n";
    out.precision(10);
    for (std::size_t i = 0; i < map.ux.size(); ++i)
        for (std::size_t j = 0; j < map.uy.size(); ++j)
            out << map.ux[i] << "," << map.uy[j] << ","
                << int(map.success[i * map.uy.size() + j]) << "\n";
}

double calibrate_retroreflection(FountainOptics& optics, const MapGrid& grid,
                                 double f_min, double f_max, int samples) {
    FountainOptics probe = optics;
    double best_f = f_min;
    long best_area = -1;
    for (int i = 0; i < samples; ++i) {
        // uniform in lens strength 1/f, where the response actually lives
        const double inv = 1.0 / f_max + (1.0 / f_min - 1.0 / f_max) * i / (samples - 1.0);
        const double f = 1.0 / inv;
        probe.lens_constant = f * probe.u_r / probe.k_ev;
        const long a = acceptance_map(probe, grid).area();
        if (a > best_area) {
            best_area = a;
            best_f = f;
        }
    }
    optics.lens_constant = best_f * optics.u_r / optics.k_ev;
    return best_f;
}

} // namespace ionfountain::transverse
