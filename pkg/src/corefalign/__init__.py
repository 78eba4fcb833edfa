"""Convert BRAT coreference annotations to CorefUD CoNLL-U and align them with UD treebanks."""

__version__ = "0.1.0"
