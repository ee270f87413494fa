"""
QSS Collusion Lab
Seedable simulator for the five-party Bell-state secret sharing protocol,
its Bob-Zach collusion attack and the pre-check improvement.
"""
__version__ = "1.0.0"
