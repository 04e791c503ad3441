"""Multi-gas infrared absorption spectra: synthesis and multi-label classification.

Submodules: ``gaslib`` (absorptivity libraries), ``synth`` (datasets),
``pca``, ``fnn`` (two-layer network and Adam), ``ot`` (per-sample optimal
thresholding), ``pls`` (NIPALS, PLS-DA, binary relevance), ``metrics`` and
``harness`` (experiments and CLI).
"""

__version__ = "0.1.0"
