"""Attribute-based fluidity scoring for dialogue systems.

Extracts relevance (NSP), repetition, question-balance, and short-safe-answer
attributes from single- and multi-turn dialogue data, combines them in a
linear SVM trained against human ratings, and compares the result with a
BLEU-threshold baseline.
"""

__version__ = "0.1.0"
