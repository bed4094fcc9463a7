"""Corn yield prediction toolkit for smallholder decision support.

Library layout, one module per pipeline stage:

- dataset: CSV ingestion, cleaning, aggregation, one-hot encoding,
  splitting, min-max normalization
- timeseries: unit-root testing, differencing, ARMA fitting and
  forecasting for extending short yearly series
- feature_select: Kendall rank correlation and threshold selection
- metrics: RMSE, MAE, and their average
- dnnr: feed-forward neural network regressor (from scratch)
- ensembles: random forest and gradient boosting regressors (from scratch)
- tuning_eval: grid search, k-fold CV, bootstrap out-of-bag evaluation,
  single-point generalization probes, feature-selection ablation
- serving: versioned JSON model files and the HTTP prediction service
- simulate: deterministic synthetic surrogate of the raw corpus
- cli: the ``cornyield`` command wiring it all together
"""

__version__ = "0.1.0"
