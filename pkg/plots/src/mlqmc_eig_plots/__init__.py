"""Figure rendering for mlqmc-eig CSV artifacts."""

__version__ = "0.1.0"

from .artifacts import RunArtifacts, SchemaError, load_table
from .figures import fit_slope, plot_cost_error, plot_variance_decay

__all__ = ["RunArtifacts", "SchemaError", "load_table", "fit_slope",
           "plot_cost_error", "plot_variance_decay"]
