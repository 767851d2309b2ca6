"""Physical constants and unit conventions.

Internal unit system: lengths in Angstrom, couplings and line widths in Hz,
rates in 1/s, diffusion coefficients in nm^2/s, relaxation times in hours
where noted.  1 A^2 = 1e-2 nm^2.
"""

MU0_OVER_4PI = 1e-7          # T^2 m^3 / J
HBAR = 1.054571817e-34       # J s
TWO_PI = 6.283185307179586

GAMMA_SI29 = -53.190e6       # rad / (s T), negative like most spin-1/2 nuclei

# gyromagnetic ratio used for the structure-generalization sweeps (reduced
# units: gamma_tilde = 1, lattice constant 1 A)
GAMMA_REDUCED = 1.0e6

ANGSTROM2_TO_NM2 = 1e-2

BOLTZMANN = 1.380649e-23     # J / K
BOHR_MAGNETON = 9.2740100783e-24  # J / T
G_ELECTRON = 2.002319


def dipolar_prefactor_hz(gamma_i, gamma_j):
    """|mu0/4pi * hbar * gamma_i * gamma_j / (2 pi)| in Hz * A^3.

    Multiplied by (3 cos^2 theta - 1)/2 / r^3 (r in A) this gives the secular
    dipolar coupling in Hz.
    """
    return abs(MU0_OVER_4PI * HBAR * gamma_i * gamma_j / TWO_PI) * 1e30
