"""qcorch: hierarchical multi-agent orchestration for quantum-chemistry
workflows, with deterministic scripted reasoning for reproducible runs."""

__version__ = "0.1.0"
