"""obfscan: static detection of code-obfuscation transformations.

The pipeline: generate an obfuscated mini-IR corpus, lift each basic block
to normalized symbolic semantics, featurize the resulting documents with
term frequencies, and train tree-ensemble detectors evaluated under both
standard and functionality-grouped cross-validation.
"""

__version__ = "0.1.0"
