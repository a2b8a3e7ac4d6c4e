#ifndef IONFOUNTAIN_UNITS_HPP
#define IONFOUNTAIN_UNITS_HPP

#include <string>

namespace ionfountain::units {

enum class Dimension {
    Time,        // s
    Voltage,     // V
    Length,      // m
    Velocity,    // m/s
    Temperature, // K
    Frequency,   // Hz
    Field,       // V/m
    Rate,        // 1/s
    Mass,        // kg
    Charge,      // C
    Energy,      // J
    Dimensionless,
};

// Parses "<number> <unit>" (unit optional only for Dimensionless) into SI.
// Throws ConfigError naming the offending text.
double parse_quantity(const std::string& text, Dimension dim);

const char* dimension_name(Dimension dim);

} // namespace ionfountain::units

#endif
