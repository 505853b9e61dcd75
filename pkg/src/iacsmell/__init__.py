"""Security-smell analysis for Puppet, Ansible, and Chef scripts.

Pipeline: parse sources into a technology-agnostic IR, detect nine smell
types with over-approximating keyword rules, then optionally prune likely
false positives with a learned scorer and rank what remains.
"""

__version__ = "0.1.0"
