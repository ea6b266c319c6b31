#pragma once

// Natural units: hbar = c = 1, lengths in micrometres, imaginary frequency in
// c/um (rad/s divided by c). Conversions to SI happen only at the edges.

namespace casimir::units {

inline constexpr double pi = 3.14159265358979323846;

/// Speed of light in um/s.
inline constexpr double c_um_per_s = 2.99792458e14;

/// hbar*c in J*m.
inline constexpr double hbar_c_J_m = 3.16152677e-26;

/// hbar*c / um^4 in pascal.
inline constexpr double pressure_to_pa = hbar_c_J_m / 1e-24;
/// hbar*c / um^3 in N/m (force per unit length).
inline constexpr double force_per_length_to_n_per_m = hbar_c_J_m / 1e-18;
/// hbar*c / um^2 in N (torque per unit length).
inline constexpr double torque_per_length_to_n = hbar_c_J_m / 1e-12;

/// Imaginary frequency carried with its unit.
class ImagFreq {
 public:
  constexpr ImagFreq() = default;

  static constexpr ImagFreq rad_per_s(double v) { return ImagFreq{v / c_um_per_s}; }
  static constexpr ImagFreq natural(double v) { return ImagFreq{v}; }

  constexpr double rad_per_s() const { return value_ * c_um_per_s; }
  /// In c/um.
  constexpr double natural() const { return value_; }

  friend constexpr bool operator<(ImagFreq a, ImagFreq b) { return a.value_ < b.value_; }

 private:
  explicit constexpr ImagFreq(double natural) : value_(natural) {}
  double value_ = 0.0;
};

}  // namespace casimir::units
