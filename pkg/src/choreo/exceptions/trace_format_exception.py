from choreo.exceptions import choreo_exception


class TraceFormatException(choreo_exception.ChoreoException):

    def __init__(self, path, message: str):
        self.path = path
        self.detail = message
        super().__init__(f"Malformed trace file {path}: {message}")
