"""Intent installation on vehicular edge substrates.

Modules: :mod:`substrate` (graph, paths, reservations), :mod:`intents`
(manifests, lifecycle, cost), :mod:`lam` (location-aware request mapping),
:mod:`pai` (priority-aware interval scheduler), :mod:`baselines` (ranking
embedders), :mod:`scenario`, :mod:`metrics`, :mod:`simulation`,
:mod:`validate` and :mod:`cli`.
"""

from vecintent.intents import Intent, LifecycleEvent, LifecycleState, Priority, Request, compile_intent, cost
from vecintent.lam import Mapping, map_request
from vecintent.substrate import SubstrateNetwork

__version__ = "0.1.0"

__all__ = [
    "Intent",
    "LifecycleEvent",
    "LifecycleState",
    "Mapping",
    "Priority",
    "Request",
    "SubstrateNetwork",
    "compile_intent",
    "cost",
    "map_request",
]
