import os
import yaml
import logging
import copy

from pycovert.numerics import SolverConfig

# Keys of a run configuration file, named after the long command line flags.
RUN_CONFIGURATION_KEYS = ("eta", "nb", "eps", "m", "m_grid", "nb_grid", "eps_grid", "prior0", "ns", "threads", "out",
                          "format", "solver")
SOLVER_CONFIGURATION_KEYS = ("abs_tol", "rel_tol", "max_iter", "damping")


class RunConfigurator:
    """
    Create a class for the administration of a run configuration. The parameters of a run can be stored in a .yaml
    file, so a computation can be repeated with exactly the same input. The configuration is edited as dictionary and
    written back to the file on request. Without a file, the configurator starts with an empty dictionary.
    """

    def __init__(self, configuration_file=None):
        # Define the .yaml file of the run configuration, which can be None for a configuration in memory.
        self.yaml_run_configuration_file = configuration_file
        # Define the dictionary for the configuration and the last load error.
        self.configuration_dictionary = {}
        self.load_error = None

        if self.yaml_run_configuration_file is not None:
            self.load_configuration_data()

    def load_configuration_data(self):
        """
        Load the configuration out of the .yaml file. Return True for a success. For a missing file, broken YAML or
        unknown keys, the reason is logged and stored in load_error and False is returned.
        """

        self.load_error = None

        # Use a try statement in case of a broken or missing .yaml file.
        try:
            with open(self.yaml_run_configuration_file, "r") as configuration_data:
                # Use the function for a safe load, because the file is edited manually.
                loaded_data = yaml.safe_load(configuration_data)

        except yaml.YAMLError as yaml_error:
            mark = getattr(yaml_error, "problem_mark", None)
            line_description = " in line {}".format(mark.line + 1) if mark is not None else ""
            self.load_error = "The configuration file {} contains invalid YAML{}: {}".format(
                self.yaml_run_configuration_file, line_description, getattr(yaml_error, "problem", yaml_error))

        except OSError as file_error:
            self.load_error = "The configuration file {} cannot be opened: {}".format(self.yaml_run_configuration_file,
                                                                                   file_error)

        else:
            self.load_error = self.check_loaded_data(loaded_data)

            if self.load_error is None:
                # An empty file is an empty configuration.
                self.configuration_dictionary = loaded_data if loaded_data is not None else {}

        if self.load_error is not None:
            logging.error(self.load_error)

            return False

        return True

    @staticmethod
    def check_loaded_data(loaded_data):
        """
        Check the loaded data for a mapping with known keys. Return an error description or None.
        """

        if loaded_data is None:
            return None

        if not isinstance(loaded_data, dict):
            return "A run configuration has to be a mapping of keys to values, got {}".format(
                type(loaded_data).__name__)

        for configuration_key, configuration_value in loaded_data.items():
            if configuration_key not in RUN_CONFIGURATION_KEYS:
                return "Unknown configuration key {}, expected one of {}".format(configuration_key,
                                                                               ", ".join(RUN_CONFIGURATION_KEYS))

            if configuration_key == "solver":
                if not isinstance(configuration_value, dict):
                    return "The solver configuration has to be a mapping, got {}".format(configuration_value)

                for solver_key in configuration_value:
                    if solver_key not in SOLVER_CONFIGURATION_KEYS:
                        return "Unknown solver key {}, expected one of {}".format(
                            solver_key, ", ".join(SOLVER_CONFIGURATION_KEYS))

        return None

    def save_configuration_data(self, configuration_file=None):
        """
        Save the configuration in the .yaml file, or in the given file, which becomes the new file of the configurator.
        Return True for a success and False for a failure.
        """

        if configuration_file is not None:
            self.yaml_run_configuration_file = configuration_file

        try:
            # Open the .yaml file in writing mode for dumping the data.
            with open(self.yaml_run_configuration_file, "w") as configuration_data:
                yaml.safe_dump(self.configuration_dictionary, configuration_data, default_flow_style=False)

                # Report the success.
                return True

        except Exception as file_error:
            logging.error("The file {} cannot be opened and the run configuration cannot be saved with the following "
                          "error: {}".format(self.yaml_run_configuration_file, file_error))

            return False

    def get_single_configuration(self, configuration_to_check):
        """
        Get a single configuration parameter by its key. A missing key gives None.
        """

        try:
            configuration_value = self.configuration_dictionary[configuration_to_check]

        except KeyError:
            configuration_value = None
            logging.info("Configuration information for {} is not set.".format(configuration_to_check))

        return configuration_value

    def set_single_configuration(self, configuration_key, configuration_value):
        """
        Set a configuration with a configuration key and a configuration value.
        """

        self.configuration_dictionary[configuration_key] = configuration_value

    def update_configurations(self, configuration_mapping):
        """
        Set every key of the mapping whose value is not None, so explicit command line values override the file.
        """

        for configuration_key, configuration_value in configuration_mapping.items():
            if configuration_value is not None:
                self.set_single_configuration(configuration_key, configuration_value)

    def delete_single_configuration(self, configuration_key):
        """
        Delete a single configuration specified by the configuration key. Return True for a success and False for a
        missing key.
        """

        try:
            del self.configuration_dictionary[configuration_key]

            return True

        except KeyError:
            return False

    def get_all_current_configurations(self):
        """
        Return a copy of the dictionary with all current configuration data.
        """

        return copy.deepcopy(self.configuration_dictionary)

    def get_solver_configuration(self):
        """
        Get the solver tolerances of the solver mapping as SolverConfig, with defaults for missing keys.
        """

        solver_mapping = self.get_single_configuration("solver") or {}

        return SolverConfig(**solver_mapping)

    def configuration_file_exists(self):
        return self.yaml_run_configuration_file is not None and os.path.exists(self.yaml_run_configuration_file)
