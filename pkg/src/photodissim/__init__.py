"""Polarization dynamics of photons under dissipative quantum dynamical semigroups."""
