"""deepsep-export: tap-annotated TorchScript graphs and parity feature dumps.

Exports the five supported torchvision architectures so that a single forward
pass returns a dict of activations, one entry per registry layer name, with
either ImageNet-pretrained or seeded randomly-initialized weights.
"""

__version__ = "0.1.0"


class ExportError(Exception):
    """Base class for exporter errors."""


class UnknownNetwork(ExportError):
    """Network id not in the shared layer registry."""


class TapNotFound(ExportError):
    """Requested tap name is not a registry layer of the network."""
