#include "ionfountain/units.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <vector>

#include "ionfountain/constants.hpp"
#include "ionfountain/errors.hpp"

namespace ionfountain::units {

namespace {

struct Unit {
    const char* symbol;
    double factor;
};

const std::vector<Unit>& table(Dimension dim) {
    static const std::vector<Unit> time{{"s", 1.0},    {"ms", 1e-3}, {"us", 1e-6},
                                        {"µs", 1e-6},  {"ns", 1e-9}, {"ps", 1e-12}};
    static const std::vector<Unit> voltage{{"V", 1.0}, {"kV", 1e3}, {"mV", 1e-3}};
    static const std::vector<Unit> length{{"m", 1.0},   {"mm", 1e-3}, {"um", 1e-6},
                                          {"µm", 1e-6}, {"nm", 1e-9}, {"cm", 1e-2}};
    static const std::vector<Unit> velocity{{"m/s", 1.0}, {"km/s", 1e3}, {"mm/s", 1e-3}};
    static const std::vector<Unit> temperature{{"K", 1.0}, {"mK", 1e-3}, {"uK", 1e-6},
                                               {"µK", 1e-6}};
    static const std::vector<Unit> frequency{{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6},
                                             {"GHz", 1e9}};
    static const std::vector<Unit> field{{"V/m", 1.0}, {"kV/m", 1e3}, {"V/mm", 1e3},
                                         {"MV/m", 1e6}};
    static const std::vector<Unit> rate{{"1/s", 1.0},   {"/s", 1.0},
                                        {"Hz", 1.0},    {"1/min", 1.0 / 60.0},
                                        {"/min", 1.0 / 60.0}};
    static const std::vector<Unit> mass{{"kg", 1.0}, {"u", ATOMIC_MASS_UNIT},
                                        {"g", 1e-3}};
    static const std::vector<Unit> charge{{"C", 1.0}, {"e", ELEMENTARY_CHARGE}};
    static const std::vector<Unit> energy{{"J", 1.0}, {"eV", ELEMENTARY_CHARGE},
                                          {"meV", 1e-3 * ELEMENTARY_CHARGE}};
    static const std::vector<Unit> none{};
    switch (dim) {
    case Dimension::Time: return time;
    case Dimension::Voltage: return voltage;
    case Dimension::Length: return length;
    case Dimension::Velocity: return velocity;
    case Dimension::Temperature: return temperature;
    case Dimension::Frequency: return frequency;
    case Dimension::Field: return field;
    case Dimension::Rate: return rate;
    case Dimension::Mass: return mass;
    case Dimension::Charge: return charge;
    case Dimension::Energy: return energy;
    case Dimension::Dimensionless: return none;
    }
    return none;
}

} // namespace

const char* dimension_name(Dimension dim) {
    switch (dim) {
    case Dimension::Time: return "time";
    case Dimension::Voltage: return "voltage";
    case Dimension::Length: return "length";
    case Dimension::Velocity: return "velocity";
    case Dimension::Temperature: return "temperature";
    case Dimension::Frequency: return "frequency";
    case Dimension::Field: return "field";
    case Dimension::Rate: return "rate";
    case Dimension::Mass: return "mass";
    case Dimension::Charge: return "charge";
    case Dimension::Energy: return "energy";
    case Dimension::Dimensionless: return "dimensionless";
    }
    return "?";
}

double parse_quantity(const std::string& text, Dimension dim) {
    const char* s = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(s, &end);
    if (end == s)
        throw ConfigError("cannot parse quantity '" + text + "'");
    std::string unit(end);
    while (!unit.empty() && (unit.front() == ' ' || unit.front() == '\t'))
        unit.erase(unit.begin());
    while (!unit.empty() && (unit.back() == ' ' || unit.back() == '\t'))
        unit.pop_back();

    if (dim == Dimension::Dimensionless) {
        if (!unit.empty())
            throw ConfigError("unexpected unit '" + unit + "' on dimensionless quantity '" +
                              text + "'");
        return value;
    }
    if (unit.empty())
        throw ConfigError("quantity '" + text + "' needs an explicit " +
                          dimension_name(dim) + " unit");
    for (const auto& u : table(dim))
        if (unit == u.symbol) return value * u.factor;
    throw ConfigError("unknown " + std::string(dimension_name(dim)) + " unit '" + unit +
                      "' in '" + text + "'");
}

} // namespace ionfountain::units
