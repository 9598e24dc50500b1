"""Multi-task vegetable toolkit: type classification, spoilage staging and
shelf-life forecasting from a single image, plus dataset tooling, a noise
robustness harness, LIME-style explanations and an HTTP inference service."""

__version__ = "0.1.0"

SPOILAGE_NAMES = {1: "fresh", 2: "slightly_spoiled", 3: "completely_spoiled"}
SPOILAGE_CODES = tuple(SPOILAGE_NAMES)

EXPECTED_VEGETABLE_COUNT = 8
