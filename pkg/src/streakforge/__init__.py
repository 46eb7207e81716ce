"""Career-sequence analytics toolkit.

Detects consecutive-success spans in publication careers, characterizes the
collaboration patterns behind them, and replicates the moving-average
hot-streak model on synthetic corpora.
"""

__version__ = "0.1.0"
