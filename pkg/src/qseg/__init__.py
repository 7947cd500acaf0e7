"""Query segmentation toolkit.

Labels search queries with per-character B/I tags using distant supervision
from a dictionary, context evidence mined from external documents, and a
BiLSTM-CRF with attention over context feature bags.  Includes an
unsupervised n-gram baseline, segment-level evaluation, and a synthetic
corpus generator for controlled experiments.
"""

__version__ = "0.1.0"
