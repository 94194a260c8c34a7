"""helmuq: boundary-element UQ for Helmholtz scattering on randomly perturbed shapes.

Pipeline: deterministic first-kind boundary integral solves for the nominal
field, shape-derivative solves for first-order perturbation response, and
sparse-tensor (combination technique) solves for second statistical moments,
with Calderon operator preconditioning throughout.
"""

__version__ = "0.1.0"
