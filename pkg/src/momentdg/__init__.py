"""Goal-oriented adaptive moment-hierarchy DG solver for steady 1D Boltzmann-BGK."""
