"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (config=2, data=3, model=4),
so raising the right class matters more than the message text.
"""


class StockcastError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StockcastError):
    """Invalid run configuration: unknown keys, bad values, missing files."""


class DataError(StockcastError):
    """Malformed or inconsistent input data (CSV rows, documents, lexicon)."""


class FetchError(DataError):
    """Remote quote fetch failed: network error or non-success HTTP status."""


class ModelError(StockcastError):
    """Model fitting or prediction failed (divergence, non-convergence)."""
