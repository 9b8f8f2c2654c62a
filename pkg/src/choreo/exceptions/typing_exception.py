from choreo.exceptions import choreo_exception


class TypingException(choreo_exception.ChoreoException):
    """A typing judgment for an expression or program is not derivable."""


class UnknownVariableException(TypingException):

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Variable '{name}' is not bound in the type environment.")


class RoleNotInRecordException(TypingException):

    def __init__(self, name: str, role, message: str = None):
        self.name = name
        self.role = role
        text = f"Role {role} is not a field of the record bound to '{name}'."
        if message:
            text = f"{text} {message}"
        super().__init__(text)


class RoleMismatchException(TypingException):

    def __init__(self, expected, found, message: str = None):
        self.expected = expected
        self.found = found
        text = f"Expression situated at role {found} where role {expected} was expected."
        if message:
            text = f"{text} {message}"
        super().__init__(text)


class ApplicationMismatchException(TypingException):

    def __init__(self, fun_type, arg_type):
        self.fun_type = fun_type
        self.arg_type = arg_type
        super().__init__(f"Cannot apply an expression of type {fun_type} to an argument of type {arg_type}.")


class ChannelReuseException(TypingException):

    def __init__(self, channels):
        self.channels = tuple(channels)
        names = ', '.join(str(c) for c in self.channels)
        super().__init__(f"Channel(s) used more than once: {names}.")


class ShadowedVariableException(TypingException):

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Variable '{name}' is already bound; rebinding is not allowed.")


class ReturnTypeException(TypingException):

    def __init__(self, message: str):
        super().__init__(message)


class BodyMismatchException(TypingException):

    def __init__(self, message: str):
        super().__init__(message)
