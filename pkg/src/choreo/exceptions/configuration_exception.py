from choreo.exceptions import choreo_exception


class ConfigurationException(choreo_exception.ChoreoException):
    """A configuration, literal or bound is inconsistent with the system it describes."""
