"""The annulus pair: both degrees vanish, yet the straight line between them hits zero."""

import numpy as np

from hilbertdeg.catalog import annulus_example
from hilbertdeg.errors import CertificationFailure
from hilbertdeg.maps import straight_line_homotopy
from hilbertdeg.otopy import certify_otopy
from hilbertdeg.pipeline import compute_Deg

f0, f1 = annulus_example(0), annulus_example(1)
for f in (f0, f1):
    print(compute_Deg(f).summary())

h = straight_line_homotopy(f0, f1)
rho = np.linspace(0.5, 1.5, 11)
X = np.stack([rho, np.zeros_like(rho)], axis=1)
print("\n  rho    |h(1/2, rho e1)|")
for r, v in zip(rho, np.linalg.norm(h.at(0.5).f_dense(X)[:, :2], axis=1)):
    print(f"  {r:4.2f}   {v:.3f}")

try:
    cert = certify_otopy(h)
    print(f"\nstraight line certified, epsilon = {cert.epsilon:.4g}")
except CertificationFailure as err:
    print(f"\nstraight line not certified: {type(err).__name__}: {err}")
