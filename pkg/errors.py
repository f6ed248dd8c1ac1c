""" Docstring for the errors.py file.

Exception hierarchy shared by every package. Each error carries a short machine readable code so the command
line can print a structured error record.
"""
from typing import Optional


class ActiveMappingError(Exception):
    """
    Base class for every error raised by the mapping, planning and episode modules.
    """
    code = "active_mapping_error"

    def __init__(self, message: str, step: Optional[int] = None):
        """
        Constructor for the ActiveMappingError class.

        :param message: Human readable description of the failure.
        :param step: Episode step index at which the failure happened, if known.
        """
        super().__init__(message)
        self.message = message
        self.step = step

    def to_record(self) -> dict:
        """
        Builds the machine readable error record printed by the command line.

        :return: A dictionary with the error code, message and step.
        """
        return {"error": self.code, "message": self.message, "step": self.step}


class MapBoundsError(ActiveMappingError):
    """ A point or key lies outside the octree bounds where the operation requires it inside. """
    code = "map_bounds"


class PlannerError(ActiveMappingError):
    """ The planner could not produce any scan candidate. """
    code = "planner_failure"


class ConfigError(ActiveMappingError):
    """ Malformed or incomplete episode configuration. """
    code = "config"


class SceneError(ActiveMappingError):
    """ Unreadable or invalid scene mesh. """
    code = "scene"
