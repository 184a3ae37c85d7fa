"""Benchmark forge and evaluation harness for ESCO-style labour market taxonomies.

Builds self-supervised prompt datasets (entity/relation classification,
entity linking, question answering) from a skill/occupation taxonomy,
splits them into decontaminated K-shot training sets and repeated
evaluation samples, and scores prediction files with per-role macro-F1.
"""

__version__ = "0.1.0"
