from .generator import Generator, encode_reference, generate, glyph_tensor, mix_components
from .networks import ComponentClassifier, ComponentEncoder, Decoder, Discriminator

__all__ = ["ComponentClassifier", "ComponentEncoder", "Decoder", "Discriminator", "Generator",
           "encode_reference", "generate", "glyph_tensor", "mix_components"]
