from choreo.exceptions import choreo_exception


class BudgetExceededException(choreo_exception.ChoreoException):

    def __init__(self, reason: str, partial=None):
        self.reason = reason
        # Partial exploration result, flagged non-exhaustive
        self.partial = partial
        super().__init__(f"Exploration budget exceeded ({reason}); results are not exhaustive.")
