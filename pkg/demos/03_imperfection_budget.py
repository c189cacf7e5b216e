"""Visibility budget for an imperfect measurement setup.

Starts from the ideal 100% visibility of the symmetric two-photon state
and multiplies in the two experimental corrections: an unbalanced beam
splitter and an angular misalignment of the two beams at the splitter.
Also solves the inverse problem: what misalignment angle explains a given
measured visibility once the splitter imbalance is accounted for?
"""

import numpy as np

from homsim import imperfections as imp

bs = imp.BeamSplitter(reflectance=0.474, transmittance=0.526)
f_bs = imp.bs_visibility_factor(bs)
print(f"beam splitter 47.4/52.6  -> visibility factor {f_bs:.6f}")

d, lam = 5e-3, 1.55e-6
print(f"\nlens diameter {d * 1e3:.0f} mm, wavelength {lam * 1e9:.0f} nm")
print(f"{'theta (urad)':>13s} {'overlap':>9s} {'total visibility':>17s}")
for theta_urad in (0.0, 10.0, 20.0, 30.0, 47.7, 60.0):
    geom = imp.SpatialGeometry(d, lam, theta_urad * 1e-6)
    v = imp.visibility_budget(1.0, bs=bs, geom=geom)
    print(f"{theta_urad:13.1f} {imp.spatial_overlap(geom):9.5f} {v:17.5f}")

# inverse problem: a measured visibility of 0.938 with this splitter
# implies a spatial overlap of 0.938 / f_bs
measured = 0.938
overlap_needed = measured / f_bs
theta = imp.solve_angle_for_overlap(overlap_needed, d, lam)
print(f"\nmeasured visibility {measured} -> required overlap "
      f"{overlap_needed:.4f} -> theta = {theta * 1e6:.2f} urad")

check = imp.spatial_overlap(imp.SpatialGeometry(d, lam, theta))
print(f"round trip: overlap({theta * 1e6:.2f} urad) = {check:.10f}")
