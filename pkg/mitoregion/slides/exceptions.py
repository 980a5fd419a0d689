class SlideError(Exception):
    """Базовая ошибка конвейера; команды завершаются с кодом 1."""


class FormatError(SlideError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class AnnotationParseError(FormatError):

    def __init__(self, row, message):
        self.row = row
        super().__init__(f'строка {row}: {message}')


class DomainError(SlideError):
    pass


class DegenerateInputError(DomainError):
    pass


class EmptyMaskError(DomainError):
    pass


class OracleScaleError(DomainError):
    pass
