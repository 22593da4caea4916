"""Cost-sensitive multi-label classification with RethinkNet."""
__version__ = '0.1.0'
