from choreo.exceptions import choreo_exception


class NotEnabledException(choreo_exception.ChoreoException):

    def __init__(self, label, reason: str):
        self.label = label
        self.reason = reason
        super().__init__(f"Label {label} is not enabled: {reason}")


class ChannelNotFinishedException(choreo_exception.ChoreoException):

    def __init__(self, channel):
        self.channel = channel
        super().__init__(f"Channel {channel} is not finished; no big-step label can be extracted.")


class NotCompletedException(choreo_exception.ChoreoException):

    def __init__(self, pending):
        self.pending = tuple(pending)
        names = ', '.join(str(n) for n in self.pending)
        super().__init__(f"State is not completed; nodes still running: {names}.")
