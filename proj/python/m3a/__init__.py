"""Query-log IAT modeling: heavy-tailed mixtures, meta-click copula, anomaly scoring."""

try:
    from . import _core  # installed layout: m3a/_core.*.so
except ImportError:  # build-tree layout: _core.*.so on PYTHONPATH
    import _core

# Same public surface in both layouts.
for _name in dir(_core):
    if not _name.startswith("_"):
        globals()[_name] = getattr(_core, _name)
del _name

__all__ = [n for n in dir(_core) if not n.startswith("_")]
__version__ = "0.1.0"
