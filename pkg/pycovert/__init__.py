import os
import logging
import sys

from pycovert.logger import setup_logging_configuration

__version__ = '0a0'


def main():
    """
    Define a function, which describes the main part of the program: set up logging and run the command line.
    """

    # Define the path of the configuration file os independent.
    configuration_path = os.path.join(os.path.dirname(__file__), "logging.yaml")
    solver_flag_file = setup_logging_configuration(configuration_file_path=configuration_path)

    if solver_flag_file:
        logging.debug("Solver flags are written to {}".format(solver_flag_file))

    # The command line pulls in numpy, scipy and Qt, so it is imported after the logging setup.
    from pycovert.cli import main as command_line_main

    sys.exit(command_line_main())
