#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ionfountain/transverse.hpp"

using namespace ionfountain;
using namespace ionfountain::transverse;

namespace {

FountainOptics calibrated_optics() {
    auto stack = fields::default_stack();
    stack.model("R").amplitude = 0.75;
    stack.model("R").center_z = 54.9e-3;
    auto optics = make_fountain_optics(stack, fields::baseline_voltages(), dynamics::ca40());
    MapGrid grid;
    grid.step = 0.1;
    calibrate_retroreflection(optics, grid);
    return optics;
}

} // namespace

TEST_CASE("deflection formula") {
    // worked value: 0.2 V across 7 mm plates at 12.2 mm separation, 190 eV
    const auto e = deflector_x(0.2, 0.0, 190.0);
    CHECK(deflection(e) == doctest::Approx(3.02e-4).epsilon(1e-2));
    // symmetric pair (reflector-only setting) deflects nothing
    const auto sym = deflector_x(7.5, 7.5, 190.0);
    CHECK(deflection(sym) == 0.0);
    // linear in the differential voltage
    const auto twice = deflector_x(0.4, 0.0, 190.0);
    CHECK(deflection(twice) == doctest::Approx(2.0 * deflection(e)).epsilon(1e-12));
    // odd in (U+ - U-)
    const auto flipped = deflector_x(0.0, 0.2, 190.0);
    CHECK(deflection(flipped) == doctest::Approx(-deflection(e)).epsilon(1e-12));
    auto bad = e;
    bad.k_ev = 0.0;
    CHECK_THROWS_AS(deflection(bad), ConfigError);
}

TEST_CASE("trace: drift and thin-lens focal property") {
    Ray r;
    r.x = 1e-3;
    r.xp = 2e-3;
    const auto after = trace(r, {drift(0.1)});
    CHECK(after.x == doctest::Approx(1e-3 + 0.1 * 2e-3));
    CHECK(after.xp == doctest::Approx(2e-3));
    CHECK(after.s == doctest::Approx(0.1));

    // parallel ray through a lens arrives on axis at the focal plane
    Ray par;
    par.x = 0.5e-3;
    const double f = 25e-3;
    const auto focus = trace(par, {thin_lens(f), drift(f)});
    CHECK(std::abs(focus.x) < 1e-12);
    CHECK(focus.xp == doctest::Approx(-par.x / f));
}

TEST_CASE("cat's-eye fold: lens at half the path retroreflects positions") {
    const double L = 53.55e-3;
    // folded D(L) F(L/2) D(L) maps (x, x') to (-x, ...): position inverted,
    // independent of the launch slope
    for (double x0 : {-2e-4, 1e-4, 3e-4}) {
        for (double xp0 : {-1e-3, 0.0, 2e-3}) {
            Ray r;
            r.x = x0;
            r.xp = xp0;
            const auto back = trace(r, {drift(L), thin_lens(L / 2.0), drift(L)});
            CHECK(back.x == doctest::Approx(-x0).epsilon(1e-9));
        }
    }
    // on-axis launch with pure slope comes back with the slope reversed
    Ray r;
    r.xp = 1.5e-3;
    const auto back = trace(r, {drift(L), thin_lens(L / 2.0), drift(L)});
    CHECK(std::abs(back.x) < 1e-12);
    CHECK(back.xp == doctest::Approx(-r.xp).epsilon(1e-9));
}

TEST_CASE("x and y planes decouple exactly") {
    const auto o = calibrated_optics();
    const auto rx = return_ray(o, 1.3, 0.0);
    const auto rxy = return_ray(o, 1.3, -2.1);
    CHECK(rx.x == rxy.x);
    CHECK(rx.xp == rxy.xp);
}

TEST_CASE("optics from the axial landscape: K at the station") {
    auto stack = fields::default_stack();
    stack.model("R").amplitude = 0.75;
    stack.model("R").center_z = 54.9e-3;
    const auto o = make_fountain_optics(stack, fields::baseline_voltages(), dynamics::ca40());
    CHECK(o.k_ev > 150.0);
    CHECK(o.k_ev < 200.0);
    CHECK(o.station_s == doctest::Approx(46.55e-3));
    CHECK(o.lens_s == doctest::Approx(53.55e-3));
}

TEST_CASE("acceptance map: aligned system succeeds at the grid center") {
    auto o = calibrated_optics();
    o.launch_x = 0.0;
    o.launch_y = 0.0;
    MapGrid grid;
    grid.step = 0.25;
    const auto map = acceptance_map(o, grid);
    const std::size_t ic = map.ux.size() / 2;
    CHECK(map.at(ic, ic));
    CHECK(map.contiguous());

    // symmetric under (Ux, Uy) -> (-Ux, -Uy)
    const std::size_t n = map.ux.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            CHECK(map.at(i, j) == map.at(n - 1 - i, n - 1 - j));
}

TEST_CASE("acceptance region is a single contiguous blob") {
    const auto o = calibrated_optics();
    MapGrid grid;
    grid.step = 0.1;
    const auto map = acceptance_map(o, grid);
    CHECK(map.area() > 0);
    CHECK(map.contiguous());
}

TEST_CASE("detuned reflector strictly shrinks the success region") {
    const auto o = calibrated_optics();
    MapGrid grid;
    grid.step = 0.05;
    const long tuned = acceptance_map(o, grid).area();

    auto weak = o; // -3% lens strength, emulating U_R 7.5 -> 7.3 V
    weak.lens_constant = o.lens_constant / 0.97;
    const long detuned = acceptance_map(weak, grid).area();
    CHECK(tuned > detuned);

    auto via_voltage = o; // -2.7% through the voltage itself, f ~ 1/U_R
    via_voltage.u_r = 7.3;
    CHECK(acceptance_map(via_voltage, grid).area() <= tuned);
}

TEST_CASE("area has an interior maximum at the calibrated lens strength") {
    const auto o = calibrated_optics();
    MapGrid grid;
    grid.step = 0.1;
    const long at_cal = acceptance_map(o, grid).area();
    for (double fac : {0.85, 1.15}) {
        auto p = o;
        p.lens_constant = o.lens_constant * fac;
        CHECK(acceptance_map(p, grid).area() < at_cal);
    }
}

TEST_CASE("acceptance map CSV format") {
    const auto o = calibrated_optics();
    MapGrid grid;
    grid.u_min = -1.0;
    grid.u_max = 1.0;
    grid.step = 0.5;
    const auto map = acceptance_map(o, grid);
    const char* path = "map_test.csv";
    write_map_csv(map, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "ux_v,uy_v,success");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == map.success.size());
    std::remove(path);
}
