"""wetmap: local object-based wetland cover mapping.

Multi-temporal median compositing, spectral-index features (NDVI, NDWI,
MSAVI2), SNIC superpixel segmentation, four classifiers (CART, random
forest, Gaussian naive Bayes, RBF SVM), and accuracy / separability
reporting, with a synthetic-scene oracle for end-to-end verification.
"""

__version__ = "0.1.0"
