from .dataset import (DEFAULT_IMAGE_SIZE, GlyphDataset, GlyphImage, StyleLabel, char_to_filename,
                      filename_to_char, ingest, load_glyph_dir, read_image, to_uint8, to_unit,
                      write_dataset, write_image)
from .sampling import Batch, ReferenceSet, batches, sample_references
from .split import CELLS, DatasetSplit, make_split

__all__ = ["Batch", "CELLS", "DEFAULT_IMAGE_SIZE", "DatasetSplit", "GlyphDataset", "GlyphImage",
           "ReferenceSet", "StyleLabel", "batches", "char_to_filename", "filename_to_char", "ingest",
           "load_glyph_dir", "make_split", "read_image", "sample_references", "to_uint8", "to_unit",
           "write_dataset", "write_image"]
