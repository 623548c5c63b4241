"""Word sense disambiguation from WordNet-mined discriminative dictionaries."""

__version__ = "0.1.0"
