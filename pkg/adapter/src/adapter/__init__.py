"""Offline feature exporter.

Reads a dataset manifest, runs a descriptor/keypoint backend over the images
(on the four 90-degree rotations for local features), and writes RMDF/RMKP
files for consumption by a matching pipeline. The adapter shares no code with
that pipeline; the file formats and the rotation coordinate maps are the
contract.
"""

from .backends import StandInGlobalBackend, StandInLocalBackend, load_backend
from .formats import write_rmdf, write_rmkp
from .geometry import unrotate_point
from .manifest import Manifest, read_manifest

__version__ = "0.1.0"
