#!/bin/python
# -*- coding: utf-8 -*-


class IcepoolError(Exception):
    pass


class IngestionError(IcepoolError):
    pass


class FormatError(IcepoolError):

    def __init__(self, message, path=None, line=None):

        self.path = path
        self.line = line

        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f", line {line}"
            where = f" ({where})"

        super().__init__(f"{message}{where}")


class NumericError(IcepoolError):
    pass


class UndefinedDistributionError(IcepoolError):
    pass


class ConfigurationError(IcepoolError):
    pass


class TrainingError(IcepoolError):
    pass
