"""Unit conversions.  All internal energies are frequencies E/h in GHz."""

#: Boltzmann constant, GHz per kelvin
KB_GHZ_PER_K = 20.8366
#: Bohr magneton, GHz per tesla
MUB_GHZ_PER_T = 13.9962
#: 1 meV expressed in GHz
GHZ_PER_MEV = 241.799
#: Boltzmann constant in meV per kelvin
KB_MEV_PER_K = KB_GHZ_PER_K / GHZ_PER_MEV
#: Bohr magneton in MHz per millitesla (numerically equal to GHz/T)
MUB_MHZ_PER_MT = MUB_GHZ_PER_T

MHZ_PER_GHZ = 1000.0
