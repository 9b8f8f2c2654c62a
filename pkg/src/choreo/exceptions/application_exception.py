from choreo.exceptions import choreo_exception


class ApplicationException(choreo_exception.ChoreoException):

    def __init__(self, fn_name: str, message: str):
        self.fn_name = fn_name
        super().__init__(f"Cannot apply {fn_name}: {message}")


class ValueOutOfRangeException(choreo_exception.ChoreoException):

    def __init__(self, value, value_type, message: str = None):
        self.value = value
        self.value_type = value_type
        text = f"{value!r} does not inhabit {value_type}."
        if message:
            text = f"{text} {message}"
        super().__init__(text)
