"""Emotion classification from wearable walking data.

Raw accelerometer, gyroscope and heart-rate streams are segmented into
labeled walks, turned into fixed-length feature windows, and classified
per user with a most-frequent baseline, logistic regression, and a
random forest with randomized hyperparameter search.
"""

__version__ = "0.1.0"
