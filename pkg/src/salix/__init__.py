"""Explainable regression workflow for tabular groundwater-quality data.

Preprocessing with density reweighting, a small model zoo, double machine
learning effect scans and RFE / SHAP / Sobol attributions with rank
agreement reporting.
"""

__version__ = "0.1.0"
