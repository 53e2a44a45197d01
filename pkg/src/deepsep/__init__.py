"""deepsep: how well do deep feature spaces separate image distortions?

The toolkit covers the full pipeline: synthesizing AWGN / Gaussian-blur /
JPEG corpora, pooling per-layer network activations into channel
descriptors, scoring layers with cluster-validity indices fused into a
single separability score, and exploiting the best layers for
reduced-reference quality assessment and distortion recognition.
"""

__version__ = "0.1.0"

from deepsep.errors import DeepsepError

__all__ = ["DeepsepError", "__version__"]
