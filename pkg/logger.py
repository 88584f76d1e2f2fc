import logging
import os
import traceback
from logging.handlers import RotatingFileHandler

from common import settings
from common.helper import Singleton


def _deferred(level_name):
    """
    Stand-in for the module-level message functions until GeneralLogger got instantiated
    """
    def log_function(*args, **kwargs):
        return getattr(GeneralLogger(), level_name)(*args, **kwargs)
    return log_function


warn, info, debug, error, exception = (_deferred(name) for name in ("warn", "info", "debug", "error", "exception"))
_published = False


class Logger(object):
    def __init__(self, log_file_name="main_log.log", log_format="%(asctime)s %(levelname)s %(message)s", terminator=None, print_stdout=None):
        log_settings = settings.Settings().Logging
        log_file_dir = log_settings.LogFileDir
        log_formatter = logging.Formatter(log_format)
        level = logging.getLevelName(getattr(log_settings, "Level", "INFO"))
        if log_file_dir is None:
            log_file_dir = "."
        if not os.path.exists(log_file_dir):
            os.makedirs(log_file_dir)

        if print_stdout is None:
            print_stdout = getattr(log_settings, "PrintStdout", True)
        self._print_stdout = print_stdout
        self._level = level
        self.app_log = logging.getLogger(log_file_name)
        self.app_log.setLevel(level)
        self.app_log.propagate = False

        if not self.app_log.handlers:  # Loggers are process-wide, don't stack handlers on re-instantiation
            my_handler = RotatingFileHandler(filename=os.path.join(log_file_dir, log_file_name), mode=log_settings.Mode, maxBytes=log_settings.MaxFileSize, backupCount=log_settings.MaxBackupFiles, encoding=None, delay=False)
            if terminator is not None:
                my_handler.terminator = terminator
            my_handler.setFormatter(log_formatter)
            my_handler.setLevel(level)
            self.app_log.addHandler(my_handler)

        self._log_map = {
                         10: "Debug",
                         20: "Info",
                         30: "Warn",
                         40: "Error"}

    def _log(self, level, msg):
        if self._print_stdout and level >= self._level:
            print(self._log_map[level] + ": " + msg)
        self.app_log.log(level=level, msg=msg)

    def warn(self, log_string):
        self._log(level=logging.WARN, msg=log_string)

    def debug(self, log_string):
        self._log(level=logging.DEBUG, msg=log_string)

    def info(self, log_string):
        self._log(level=logging.INFO, msg=log_string)

    def error(self, log_string):
        self._log(level=logging.ERROR, msg=log_string)

    def exception(self, log_string: str, exception_ins: Exception):
        self.error(log_string + " " + self.exception_to_string(exception_ins))

    @staticmethod
    def exception_to_string(exception_instance: Exception, with_stack_trace=True):
        exception_string = f"{str(type(exception_instance).__name__)}: {str(exception_instance)}"
        if with_stack_trace:
            trace_string = "\n"
            for line in traceback.TracebackException(type(exception_instance), exception_instance, exception_instance.__traceback__, ).format():
                trace_string += line
            exception_string += trace_string
        return exception_string


class GeneralLogger(Logger, metaclass=Singleton):
    def __init__(self, *args, **kwargs):
        global warn, info, debug, error, exception, _published
        super().__init__(*args, **kwargs)

        # Put message-functions on "global" scope
        if not _published:
            _published = True
            warn = self.warn
            info = self.info
            debug = self.debug
            error = self.error
            exception = self.exception
