"""weylcount: spectral counting for damped wave models on closed surfaces.

The package provides

* parametrized and triangulated closed surfaces with damping coefficient
  fields (:mod:`weylcount.surface`),
* Laplace-Beltrami spectra, exact on the sphere and by cotangent finite
  elements on meshes (:mod:`weylcount.lb_spectrum`),
* the pointwise cotangent-fiber symbol algebra of the boundary problem
  (:mod:`weylcount.symbol_algebra`),
* Galerkin truncations of the damped dispersion operator together with
  negative-eigenvalue counting and its quadratic growth law
  (:mod:`weylcount.semiclassical_count`),
* membership predicates for the spectral confinement regions
  (:mod:`weylcount.spectral_regions`),
* a command line front end (:mod:`weylcount.cli`).
"""

__version__ = "0.1.0"
