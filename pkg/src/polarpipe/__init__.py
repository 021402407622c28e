"""Polarization camera processing: microgrid demosaicking, Stokes planes,
false-color renderings, reflection physics, synthetic scenes, dataset
tooling and COCO-style evaluation."""

from .mosaic import MosaicLayout, RawMosaicImage, load_raw, save_raw, split_planes, merge_planes
from .pipeline import extract_frame
from .render import MODALITIES

__version__ = "0.1.0"
