"""Hide a second Gaussian splatting scene inside the attributes of another."""
from .fixedpoint import QuantParams, dequantize, quantize
from .keyfile import StegoKey, read_key, write_key
from .pipeline import embed, extract
from .scene import GaussianScene, HiddenAttributes, activate, load_scene, save_scene
from .sh_stego import StegoParams, embed_scene, extract_scene, filter_orders

__version__ = "0.1.0"
