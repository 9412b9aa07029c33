"""Exception types shared across the package.

``ValidationError`` covers everything caused by bad user input (configs,
data files, CLI arguments); anything else raised at runtime is a genuine
failure. The CLI maps the former to exit code 1 and the latter to 2.
"""


class ValidationError(Exception):
    """Invalid configuration, data file, or argument."""


class ConfigError(ValidationError):
    """Bad or unknown configuration key/value."""


class DataFormatError(ValidationError):
    """Malformed or inconsistent dataset file."""


class SequenceTooShortError(ValidationError):
    """Input sequence shorter than the convolution kernel."""


class AlignmentMismatchError(ValidationError):
    """Post-convolution lengths of the two modalities disagree."""

    def __init__(self, text_len: int, audio_len: int):
        self.text_len = text_len
        self.audio_len = audio_len
        super().__init__(
            f"aligned lengths differ: text={text_len}, audio={audio_len}; "
            "adjust conv kernel/stride so both modalities map to the same length"
        )


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite loss ({loss}) at epoch {epoch}")
