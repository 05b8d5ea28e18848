import os
import json
import logging.config
import yaml

SOLVER_FLAG_HANDLER = "solver_flag_handler"


class JsonLinesFormatter(logging.Formatter):
    """
    Create a formatter for one JSON object per log record. The solver flag and the parameter point of a record are
    taken from the extra attributes flag and grid_point, so flagged grid points can be filtered out of the log.
    """

    def format(self, record):
        log_entry = {
            "time": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        for extra_key in ("flag", "grid_point"):
            if hasattr(record, extra_key):
                log_entry[extra_key] = getattr(record, extra_key)

        # Non-finite floats and numpy scalars are written with their string representation.
        return json.dumps(log_entry, sort_keys=True, default=str)


class SolverFlagFilter(logging.Filter):
    """
    Let only records with a solver flag pass, so the flag file holds one line per flagged grid point or failed solver.
    """

    def filter(self, record):
        return getattr(record, "flag", None) is not None


def resolve_log_files(configuration, log_directory):
    """
    Move the files of all handlers with a relative file name into the log directory and create the directory. Absolute
    file names are kept.
    """

    for handler_configuration in configuration.get("handlers", {}).values():
        file_name = handler_configuration.get("filename")

        if file_name and not os.path.isabs(file_name):
            handler_configuration["filename"] = os.path.join(log_directory, file_name)

    os.makedirs(log_directory, exist_ok=True)

    return configuration


def setup_logging_configuration(configuration_file_path="logging.yaml", configuration_level=logging.INFO,
                                environment_key="LOG_CFG", log_directory=None, directory_key="PYCOVERT_LOG_DIR"):
    """
    Configure logging with the YAML file, or with the file named by the environment variable environment_key. The log
    files are written to log_directory, to the directory named by directory_key or to the working directory, in this
    order. Return the path of the solver flag file. Without a usable file or directory the basic configuration is used
    and None is returned.
    """

    environment_value = os.getenv(environment_key, None)

    if environment_value:
        configuration_file_path = environment_value

    if not os.path.exists(configuration_file_path):
        logging.basicConfig(level=configuration_level)
        logging.warning("A configuration file was not found in the path {}. .log files will not be produced. Please "
                        "check your logging settings and configuration file".format(configuration_file_path))

        return None

    with open(configuration_file_path, "rt") as configuration_file:
        configuration = yaml.safe_load(configuration_file.read())

    if log_directory is None:
        log_directory = os.getenv(directory_key, None) or os.getcwd()

    try:
        resolve_log_files(configuration, log_directory)

    except OSError as directory_error:
        logging.basicConfig(level=configuration_level)
        logging.warning("The log directory {} cannot be used, .log files will not be produced: {}".format(
            log_directory, directory_error))

        return None

    logging.config.dictConfig(configuration)
    flag_handler_configuration = configuration.get("handlers", {}).get(SOLVER_FLAG_HANDLER)

    if flag_handler_configuration is None:
        return None

    return flag_handler_configuration.get("filename")
