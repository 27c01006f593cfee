"""Coreference resolution toolkit.

Harmonizes corpora with incompatible annotation schemes, trains and runs an
incremental entity-ranking resolver at desk scale, performs pseudo-singleton
data augmentation and balanced joint-training sampling, and scores predictions
with the standard coreference metric suite.
"""

__version__ = "0.1.0"

from corefkit.corpus import Corpus, DatasetProfile, Document, Span

__all__ = ["Corpus", "DatasetProfile", "Document", "Span", "__version__"]
