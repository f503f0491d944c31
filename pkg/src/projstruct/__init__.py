"""Penalized selection over projection-structure families.

Library layout:
  linalg      dense projections onto column spans
  structures  the structure families (subspaces, majorants, enumeration)
  selection   penalized selectors, brute-force oracle, segmentation DP
  ddm         structure measures, model-averaging/selection means, sampling
  oracle      oracle rates, tau-oracles, excessive-bias diagnostics, constants
  balls       EBR and sqrt(N)-margin confidence balls
  noise       noise streams and the A1-A4 condition checkers
  ingest      density/covariance/graph data converted to sequence models
  experiments Monte Carlo harness behind the CLI
  cli         `projstruct select|simulate|check`
"""

__version__ = "0.1.0"
