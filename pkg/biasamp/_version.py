__version__ = "0.1.0"

SCHEMA_VERSION = 1
"""
Version of the run-record JSON schema; bumped whenever a field changes meaning.
"""
