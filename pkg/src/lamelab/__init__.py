"""lamelab: a numerical laboratory for weighted positivity of the 3D Lame
operator and for capacity-based boundary regularity probes.

The package is organised bottom-up:

* elastic      operator, fundamental matrix, exact constants
* fields       smooth compactly supported test fields
* quadrature   sphere and polar volume rules
* split        spherical-mean decomposition and sphere inequalities
* region       the positivity region algebra (minor polynomials, roots)
* form         the weighted integral identity and coercivity oracles
* voxel        voxelised domains and fixture geometries
* capacity     harmonic capacity and Wiener-type profiles
* probe        discrete Dirichlet solves and decay measurements
* cli          command line front end
"""

__version__ = "0.1.0"
