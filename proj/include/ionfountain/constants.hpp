#ifndef IONFOUNTAIN_CONSTANTS_HPP
#define IONFOUNTAIN_CONSTANTS_HPP

namespace ionfountain {

// CODATA 2018
inline constexpr double ELEMENTARY_CHARGE = 1.602176634e-19;   // C
inline constexpr double ATOMIC_MASS_UNIT  = 1.66053906660e-27; // kg
inline constexpr double ELECTRON_MASS     = 9.1093837015e-31;  // kg
inline constexpr double BOLTZMANN         = 1.380649e-23;      // J/K
inline constexpr double HBAR              = 1.054571817e-34;   // J s
inline constexpr double PI                = 3.14159265358979323846;
inline constexpr double TWO_PI            = 2.0 * PI;

} // namespace ionfountain

#endif
