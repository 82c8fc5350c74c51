"""roughcast: pre-print surface-roughness prediction for FFF printing.

Library + CLI covering Box-Behnken experiment designs, measurement-table
handling, an MLP regressor with conditional-GAN tabular augmentation,
exact Shapley attribution, triangle-mesh inclination analysis, and an HTTP
service for interactive per-facet roughness prediction.
"""

__version__ = "0.1.0"
