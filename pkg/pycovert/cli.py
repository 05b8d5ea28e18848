"""
Command line interface: parse the arguments and the optional YAML run configuration, build the result table of the
command and write it as CSV, JSON or gnuplot data. The exit status is 0 for success, 1 for a configuration error, 2 if
a grid point carries a solver flag and 3 if a solver fails.
"""

import os
import sys
import math
import logging
import argparse

import numpy as np

from pycovert.bounds import covert_pe_lb
from pycovert.configurator import RunConfigurator
from pycovert.covert_opt import energy_limits, min_fidelity_numeric
from pycovert.csv_exporter import CSVExporter
from pycovert.fock_oracle import fock_from_channel, q_s_fock_oracle
from pycovert.gaussian import ScenarioParams, alice_received, q_s_gaussian, tmsv_state
from pycovert.numerics import SolverConfig, SolverError
from pycovert.probes import covert_curves, perfect_covert_sweep
from pycovert.sweep_executor import SweepExecutor

COMMANDS = ("energy-limits", "covert-bound", "covert-curves", "perfect-covert", "heatmap", "oracle-check")
OUTPUT_FORMATS = ("csv", "json", "gnuplot")

# Column sets of the result tables. They are read by downstream plotting scripts and must not change.
COLUMNS = {
    "energy-limits": ("m", "ns_min", "ns_max"),
    "covert-bound": ("eta", "nb", "eps", "m", "fidelity_lb", "pe_lb", "log10_pe_lb", "exponent", "guard_ok"),
    "covert-curves": ("m", "log10_pe_bound", "log10_pe_tmsv", "log10_pe_gcs"),
    "perfect-covert": ("nb", "chi_tmsv_qc", "chi_tmsv_qb", "chi_gcs_qc", "chi_gcs_qb", "ratio"),
    "heatmap": ("nb", "eps", "fid_ratio", "flag"),
    "oracle-check": ("s", "q_gaussian", "q_fock", "rel_diff"),
}

# Grids needed by each command. A heatmap without a background grid uses --nb.
REQUIRED_GRIDS = {
    "energy-limits": ("m_grid",),
    "covert-curves": ("m_grid",),
    "perfect-covert": ("nb_grid",),
    "heatmap": ("eps_grid",),
}

DEFAULT_CONFIGURATION = {"eta": 0.01, "nb": 0.2, "eps": 1e-3, "m": 1000, "prior0": 0.5, "format": "csv"}
ORACLE_CHECK_S_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
ORACLE_TOLERANCE = 1e-6

EXIT_SUCCESS = 0
EXIT_CONFIGURATION_ERROR = 1
EXIT_SOLVER_FLAGS = 2
EXIT_SOLVER_ERROR = 3


class ConfigurationError(ValueError):
    """
    Report an invalid command line or run configuration file.
    """


def parse_grid(grid_specification, grid_name):
    """
    Parse a grid given as lo:hi:log|lin:count, as comma separated values or as a list of numbers out of a configuration
    file. Return the grid as list of floats.
    """

    if isinstance(grid_specification, (list, tuple)):
        grid_values = grid_specification

    elif isinstance(grid_specification, (int, float)):
        grid_values = [grid_specification]

    elif ":" in str(grid_specification):
        grid_parts = str(grid_specification).split(":")

        if len(grid_parts) != 4 or grid_parts[2] not in ("log", "lin"):
            raise ConfigurationError("The grid {}={} does not have the form lo:hi:log|lin:count".format(
                grid_name, grid_specification))

        try:
            lower, upper, count = float(grid_parts[0]), float(grid_parts[1]), int(grid_parts[3])

        except ValueError:
            raise ConfigurationError("The grid {}={} contains a value which is not a number".format(
                grid_name, grid_specification))

        if count < 1:
            raise ConfigurationError("The grid {}={} is empty".format(grid_name, grid_specification))

        if grid_parts[2] == "log":
            if lower <= 0 or upper <= 0:
                raise ConfigurationError("The logarithmic grid {}={} needs positive limits".format(
                    grid_name, grid_specification))

            grid_values = np.geomspace(lower, upper, count)

        else:
            grid_values = np.linspace(lower, upper, count)

    else:
        grid_values = [grid_value for grid_value in str(grid_specification).split(",") if grid_value.strip()]

    try:
        grid = [float(grid_value) for grid_value in grid_values]

    except (TypeError, ValueError):
        raise ConfigurationError("The grid {}={} contains a value which is not a number".format(
            grid_name, grid_specification))

    if not grid:
        raise ConfigurationError("The grid {}={} is empty".format(grid_name, grid_specification))

    return grid


def parse_mode_grid(grid_specification):
    """
    Parse a grid of mode counts. Logarithmic grids are rounded to integers, repeated counts are dropped.
    """

    mode_grid = []

    for grid_value in parse_grid(grid_specification, "m_grid"):
        mode_count = int(round(grid_value))

        if mode_count < 1:
            raise ConfigurationError("The mode count {} in m_grid is smaller than 1".format(grid_value))

        if mode_count not in mode_grid:
            mode_grid.append(mode_count)

    return mode_grid


class RunConfig:
    """
    Hold everything a run needs: the command, the scenario, the parameter grids, the output path and format, the thread
    count and the solver tolerances. The effective configuration is kept as plain dictionary for saving it next to the
    results.
    """

    def __init__(self, command, scenario, grids=None, output_path=None, output_format="csv", threads=None, n_s=None,
                 solver_config=None, effective_configuration=None):
        if command not in COMMANDS:
            raise ConfigurationError("Unknown command {}, expected one of {}".format(command, ", ".join(COMMANDS)))

        if output_format not in OUTPUT_FORMATS:
            raise ConfigurationError("Unknown format {}, expected one of {}".format(output_format,
                                                                                   ", ".join(OUTPUT_FORMATS)))

        if threads is not None and threads < 1:
            raise ConfigurationError("The thread count has to be at least 1, got {}".format(threads))

        self.command = command
        self.scenario = scenario
        self.grids = dict(grids) if grids else {}
        self.output_path = output_path if output_path else "{}.{}".format(command, "json" if output_format == "json"
                                                                          else "csv")
        self.format = output_format
        self.threads = threads
        self.n_s = n_s
        self.solver_config = solver_config if solver_config is not None else SolverConfig()
        self.effective_configuration = dict(effective_configuration) if effective_configuration else {}

        for grid_name in REQUIRED_GRIDS.get(command, ()):
            if not self.grids.get(grid_name):
                raise ConfigurationError("The command {} needs the grid --{}".format(command,
                                                                                    grid_name.replace("_", "-")))

        output_directory = os.path.dirname(os.path.abspath(self.output_path))

        if not os.path.isdir(output_directory) or not os.access(output_directory, os.W_OK):
            raise ConfigurationError("The output path {} is not writable".format(self.output_path))

    @classmethod
    def from_arguments(cls, arguments):
        """
        Build the run configuration out of parsed command line arguments and an optional configuration file. Values
        given on the command line override the file.
        """

        run_configurator = RunConfigurator()

        if arguments.config is not None:
            run_configurator = RunConfigurator(arguments.config)

            if run_configurator.load_error is not None:
                raise ConfigurationError(run_configurator.load_error)

        run_configurator.update_configurations({"eta": arguments.eta, "nb": arguments.nb, "eps": arguments.eps,
                                                "m": arguments.m, "m_grid": arguments.m_grid,
                                                "nb_grid": arguments.nb_grid, "eps_grid": arguments.eps_grid,
                                                "prior0": arguments.prior0, "ns": arguments.ns,
                                                "threads": arguments.threads, "out": arguments.out,
                                                "format": arguments.format})

        for configuration_key, default_value in DEFAULT_CONFIGURATION.items():
            if run_configurator.get_single_configuration(configuration_key) is None:
                run_configurator.set_single_configuration(configuration_key, default_value)

        return cls.from_configurator(arguments.command, run_configurator)

    @classmethod
    def from_configurator(cls, command, run_configurator):
        configuration = run_configurator.get_all_current_configurations()

        try:
            scenario = ScenarioParams(float(configuration["eta"]), float(configuration["nb"]),
                                      int(configuration["m"]), float(configuration["eps"]),
                                      float(configuration["prior0"]))
            solver_config = run_configurator.get_solver_configuration()
            n_s = float(configuration["ns"]) if configuration.get("ns") is not None else None
            threads = int(configuration["threads"]) if configuration.get("threads") is not None else None

        except (TypeError, ValueError) as value_error:
            raise ConfigurationError("Invalid run parameters: {}".format(value_error))

        if n_s is not None and n_s < 0:
            raise ConfigurationError("The probe energy --ns has to be non-negative, got {}".format(n_s))

        grids = {}

        if configuration.get("m_grid") is not None:
            grids["m_grid"] = parse_mode_grid(configuration["m_grid"])

        for grid_name in ("nb_grid", "eps_grid"):
            if configuration.get(grid_name) is not None:
                grids[grid_name] = parse_grid(configuration[grid_name], grid_name)

        return cls(command, scenario, grids, configuration.get("out"), configuration.get("format", "csv"), threads,
                   n_s, solver_config, configuration)

    @property
    def configuration_path(self):
        return self.output_path + ".config.yaml"


class ResultTable:
    """
    Collect the rows of a result table with its column names and the number of grid points carrying a solver flag.
    """

    def __init__(self, columns):
        self.columns = tuple(columns)
        self.rows = []
        self.flag_count = 0

    def append(self, row_mapping, flagged=False):
        self.rows.append([_plain_value(row_mapping[column_name]) for column_name in self.columns])

        if flagged:
            self.flag_count += 1

    @property
    def data_list(self):
        return [list(self.columns)] + self.rows


def _plain_value(value):
    # Numpy scalars are written like Python floats.
    if isinstance(value, (bool, np.bool_)):
        return bool(value)

    if isinstance(value, (int, np.integer)):
        return int(value)

    return float(value)


def _energy_limits_row(scenario, solver_config):
    limits = energy_limits(scenario, solver_config)

    return {"m": scenario.m_modes, "ns_min": limits.ns_min, "ns_max": limits.ns_max}, limits.flagged


def _heatmap_row(scenario, solver_config):
    bound = covert_pe_lb(scenario)
    solution = min_fidelity_numeric(scenario, solver_config)

    if solution.objective > 0 and math.isfinite(bound.log_fidelity_lb):
        fidelity_ratio = math.exp(math.log(solution.objective) - bound.log_fidelity_lb)

    else:
        fidelity_ratio = math.nan

    flagged = not solution.converged or not bound.guard_ok

    return {"nb": scenario.n_b, "eps": scenario.epsilon, "fid_ratio": fidelity_ratio, "flag": flagged}, flagged


def _sweep(run_config, function_to_execute, parameter_list):
    executor = SweepExecutor(run_config.threads)

    return executor.execute(function_to_execute, parameter_list)


def build_energy_limits_table(run_config):
    table = ResultTable(COLUMNS["energy-limits"])
    parameter_list = [run_config.scenario.replace(m_modes=m_modes) for m_modes in run_config.grids["m_grid"]]
    results = _sweep(run_config, lambda scenario: _energy_limits_row(scenario, run_config.solver_config),
                     parameter_list)

    for scenario, result in zip(parameter_list, results):
        if result is None:
            table.append({"m": scenario.m_modes, "ns_min": math.nan, "ns_max": math.nan}, True)

        else:
            table.append(*result)

    return table


def build_covert_bound_table(run_config):
    table = ResultTable(COLUMNS["covert-bound"])
    scenario = run_config.scenario
    bound = covert_pe_lb(scenario)
    table.append({"eta": scenario.eta, "nb": scenario.n_b, "eps": scenario.epsilon, "m": scenario.m_modes,
                  "fidelity_lb": bound.fidelity_lb, "pe_lb": bound.pe_lb, "log10_pe_lb": bound.log10_pe_lb,
                  "exponent": bound.exponent, "guard_ok": bound.guard_ok}, not bound.guard_ok)

    return table


def build_covert_curves_table(run_config):
    table = ResultTable(COLUMNS["covert-curves"])
    m_grid = run_config.grids["m_grid"]
    rows = covert_curves(run_config.scenario, m_grid, run_config.threads)

    for m_modes, row in zip(m_grid, rows):
        if row is None:
            table.append({"m": m_modes, "log10_pe_bound": math.nan, "log10_pe_tmsv": math.nan,
                          "log10_pe_gcs": math.nan}, True)

        else:
            table.append(row, row["flag"])

    return table


def build_perfect_covert_table(run_config):
    table = ResultTable(COLUMNS["perfect-covert"])
    nb_grid = run_config.grids["nb_grid"]
    rows = perfect_covert_sweep(run_config.scenario.eta, nb_grid, run_config.threads)

    for n_b, row in zip(nb_grid, rows):
        if row is None:
            table.append(dict({"nb": n_b}, **{column_name: math.nan for column_name in table.columns[1:]}), True)

        else:
            table.append(row, row["flag"])

    return table


def build_heatmap_table(run_config):
    table = ResultTable(COLUMNS["heatmap"])
    nb_grid = run_config.grids.get("nb_grid", [run_config.scenario.n_b])
    parameter_list = [run_config.scenario.replace(n_b=n_b, epsilon=epsilon) for n_b in nb_grid
                      for epsilon in run_config.grids["eps_grid"]]
    results = _sweep(run_config, lambda scenario: _heatmap_row(scenario, run_config.solver_config), parameter_list)

    for scenario, result in zip(parameter_list, results):
        if result is None:
            table.append({"nb": scenario.n_b, "eps": scenario.epsilon, "fid_ratio": math.nan, "flag": True}, True)

        else:
            table.append(*result)

    return table


def build_oracle_check_table(run_config):
    table = ResultTable(COLUMNS["oracle-check"])
    scenario = run_config.scenario
    n_s = run_config.n_s if run_config.n_s is not None else scenario.n_b
    probe = tmsv_state(n_s)
    gaussian_pair = [alice_received(probe, hypothesis, scenario) for hypothesis in (0, 1)]
    fock_pair = [fock_from_channel(probe, hypothesis, scenario) for hypothesis in (0, 1)]

    for s in ORACLE_CHECK_S_GRID:
        q_gaussian = q_s_gaussian(gaussian_pair[0], gaussian_pair[1], s)
        q_fock = float(q_s_fock_oracle(fock_pair[0], fock_pair[1], s))
        relative_difference = abs(q_gaussian - q_fock) / q_fock

        if relative_difference >= ORACLE_TOLERANCE:
            logging.warning("The Gaussian and the Fock value of Q_s differ by {} at s={}".format(relative_difference,
                                                                                                  s),
                            extra={"flag": "oracle_mismatch", "grid_point": dict(scenario.to_dict(), s=s, n_s=n_s)})

        table.append({"s": s, "q_gaussian": q_gaussian, "q_fock": q_fock, "rel_diff": relative_difference},
                     relative_difference >= ORACLE_TOLERANCE)

    return table


TABLE_BUILDERS = {
    "energy-limits": build_energy_limits_table,
    "covert-bound": build_covert_bound_table,
    "covert-curves": build_covert_curves_table,
    "perfect-covert": build_perfect_covert_table,
    "heatmap": build_heatmap_table,
    "oracle-check": build_oracle_check_table,
}


def emit_plotdata(table, output_path, output_format="csv"):
    """
    Write the table to the output path. The gnuplot format writes the CSV file plus a whitespace separated .dat file
    next to it. Return the list of written files. An I/O failure raises an OSError naming the path.
    """

    csv_exporter = CSVExporter(table.data_list)

    if output_format == "json":
        exports = [(csv_exporter.export_result_to_json, output_path)]

    else:
        exports = [(csv_exporter.export_result_to_csv, output_path)]

        if output_format == "gnuplot":
            exports.append((csv_exporter.export_result_to_gnuplot, os.path.splitext(output_path)[0] + ".dat"))

    written_files = []

    for export_function, file_name in exports:
        if not export_function(file_name):
            raise OSError("The result table could not be written to {}".format(file_name))

        written_files.append(file_name)

    return written_files


def run(run_config):
    """
    Run the command of the configuration, write the result table and the effective configuration and return the exit
    status: 0 for success, 2 if any grid point carries a solver flag. Flagged results are written as well.
    """

    logging.info("Running {} with {}".format(run_config.command, run_config.scenario))
    table = TABLE_BUILDERS[run_config.command](run_config)
    emit_plotdata(table, run_config.output_path, run_config.format)

    run_configurator = RunConfigurator()
    run_configurator.update_configurations(run_config.effective_configuration)
    run_configurator.set_single_configuration("solver", run_config.solver_config.to_dict())
    run_configurator.save_configuration_data(run_config.configuration_path)

    if table.flag_count:
        logging.warning("{} of {} grid points of {} carry a solver flag".format(table.flag_count, len(table.rows),
                                                                               run_config.command))

        return EXIT_SOLVER_FLAGS

    return EXIT_SUCCESS


def build_argument_parser():
    argument_parser = argparse.ArgumentParser(prog="pycovert", description="Bounds and probe exponents for covert "
                                                                           "quantum target detection")
    subparsers = argument_parser.add_subparsers(dest="command", required=True)

    for command in COMMANDS:
        command_parser = subparsers.add_parser(command)
        command_parser.add_argument("--config", help="YAML run configuration, flags override its values")
        command_parser.add_argument("--out", help="path of the result table")
        command_parser.add_argument("--format", choices=OUTPUT_FORMATS)
        command_parser.add_argument("--threads", type=int)
        command_parser.add_argument("--eta", type=float, help="target reflectivity")
        command_parser.add_argument("--nb", type=float, help="background brightness per mode")
        command_parser.add_argument("--eps", type=float, help="covertness parameter")
        command_parser.add_argument("--m", type=int, help="number of modes")
        command_parser.add_argument("--prior0", type=float, help="prior of hypothesis 0")
        command_parser.add_argument("--ns", type=float, help="probe energy per mode for oracle-check")
        command_parser.add_argument("--m-grid", dest="m_grid", help="lo:hi:log|lin:count or comma separated values")
        command_parser.add_argument("--nb-grid", dest="nb_grid")
        command_parser.add_argument("--eps-grid", dest="eps_grid")

    return argument_parser


def main(argument_list=None):
    """
    Parse the command line, run the command and return the exit status. Configuration errors give 1, a failed solver
    gives 3, both with a one-line diagnostic on stderr.
    """

    argument_parser = build_argument_parser()

    try:
        arguments = argument_parser.parse_args(argument_list)

    except SystemExit as parser_exit:
        # argparse has printed its diagnostic already.
        return EXIT_CONFIGURATION_ERROR if parser_exit.code else EXIT_SUCCESS

    try:
        run_config = RunConfig.from_arguments(arguments)

        return run(run_config)

    except SolverError as solver_error:
        print("pycovert {}: solver failure: {}".format(arguments.command, solver_error), file=sys.stderr)
        logging.error("A solver failed in the run of {}: {}".format(arguments.command, solver_error),
                      extra={"flag": "solver_error"})

        return EXIT_SOLVER_ERROR

    except (ValueError, OSError) as run_error:
        print("pycovert {}: configuration error: {}".format(arguments.command, run_error), file=sys.stderr)
        logging.error("The run of {} failed: {}".format(arguments.command, run_error))

        return EXIT_CONFIGURATION_ERROR
