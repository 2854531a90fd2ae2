"""Benchmark harness for pool-based multi-domain active learning.

Combines six shallow multi-domain architectures with five acquisition
strategies over multi-domain classification pools, tracks learning curves
and their normalized area, and ships the share-private ablation and
batch-diversity diagnostics.
"""

__version__ = "0.1.0"
