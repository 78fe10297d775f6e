"""Robust secure RIS-assisted UAV uplink/downlink design at desk scale."""
from .scenario import Scenario, ScenarioError, db, dbm

__all__ = ["Scenario", "ScenarioError", "db", "dbm"]
__version__ = "0.1.0"
