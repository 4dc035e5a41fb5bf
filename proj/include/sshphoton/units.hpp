#pragma once

// Unit system used throughout: energies in meV, times in ps, lengths in nm.

namespace sshphoton {

/// Reduced Planck constant in meV*ps.
inline constexpr double hbar = 0.6582119569;

/// hbar^2 / (2 m_e) in meV*nm^2.
inline constexpr double kinetic_prefactor = 38.09982;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace sshphoton
