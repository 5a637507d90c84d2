"""Few-shot node classification: class splits, episodes, GCN/MLP learners and a shared evaluation protocol."""

__version__ = "0.1.0"
