"""Teacher-student pipeline for the iacsmell false-positive pruner.

Three stages, coupled to the analyzer only through its file formats and the
scorer wire protocol:

* ``teacher``  - batch pseudo-labeling of instance files through an LLM API,
                 resumable via an on-disk journal.
* ``student``  - fine-tuning a compact transformer classifier on the labeled
                 instances (FP = positive class).
* ``server``   - serving a trained checkpoint over the stdin/stdout scorer
                 protocol so ``iacsmell analyze --scorer external:...`` can
                 use it.
"""

__version__ = "0.1.0"
