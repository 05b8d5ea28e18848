import unittest
import io
import os
import csv
import json
import tempfile
from contextlib import redirect_stderr
from unittest import mock

from pycovert.cli import COLUMNS, EXIT_SOLVER_ERROR, TABLE_BUILDERS, ConfigurationError, RunConfig, ResultTable, \
    parse_grid, parse_mode_grid, emit_plotdata, main
from pycovert.configurator import RunConfigurator
from pycovert.covert_opt import min_fidelity_numeric
from pycovert.gaussian import ScenarioParams

GOLDEN_DIRECTORY = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")

# (η, N_B, ε, M) of the rows in golden/covert_bound.csv and golden/covert_bound.dat.
GOLDEN_SCENARIOS = (("0.01", "0.2", "1e-3", "1000"), ("0.01", "0.002", "1e-3", "10000"), ("0.05", "2.0", "1e-2", "100"))


class TestCliMethods(unittest.TestCase):
    """
    Test the grid parser, the run configuration and the commands of the command line interface.
    """

    def setUp(self):
        self.temporary_directory = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.temporary_directory.cleanup()

    def get_path(self, file_name):
        return os.path.join(self.temporary_directory.name, file_name)

    def read_rows(self, file_name):
        with open(file_name, "r", newline="") as result_file:
            return list(csv.DictReader(result_file))

    def test_column_schemas(self):
        """
        Test the frozen header rows of the result tables, which are read by plotting scripts.
        """

        assert ",".join(COLUMNS["energy-limits"]) == "m,ns_min,ns_max"
        assert ",".join(COLUMNS["covert-curves"]) == "m,log10_pe_bound,log10_pe_tmsv,log10_pe_gcs"
        assert ",".join(COLUMNS["perfect-covert"]) == "nb,chi_tmsv_qc,chi_tmsv_qb,chi_gcs_qc,chi_gcs_qb,ratio"
        assert ",".join(COLUMNS["heatmap"]) == "nb,eps,fid_ratio,flag"

    def test_parse_grid(self):
        """
        Test the logarithmic, linear and comma separated grids and lists out of a configuration file.
        """

        log_grid = parse_grid("0.01:100:log:5", "nb_grid")

        assert len(log_grid) == 5
        assert abs(log_grid[2] - 1.0) < 1e-12
        assert parse_grid("0:1:lin:3", "eps_grid") == [0.0, 0.5, 1.0]
        assert parse_grid("0.1, 0.2,0.3", "nb_grid") == [0.1, 0.2, 0.3]
        assert parse_grid([1e-3, 1e-2], "eps_grid") == [1e-3, 1e-2]
        assert parse_grid(0.2, "nb_grid") == [0.2]

    def test_parse_grid_errors(self):
        """
        Test the errors for empty grids, unknown spacings, non-positive logarithmic limits and invalid numbers.
        """

        for grid_specification in ("", "1:2:cubic:3", "0:1:log:3", "1:2:lin:0", "1:2:lin", "a,b", "1:x:lin:2"):
            with self.assertRaises(ConfigurationError):
                parse_grid(grid_specification, "nb_grid")

    def test_parse_mode_grid(self):
        """
        Test the rounding of mode counts and the removal of repeated counts.
        """

        assert parse_mode_grid("100:1e6:log:5") == [100, 1000, 10000, 100000, 1000000]
        assert parse_mode_grid("10,10.2,20") == [10, 20]

        with self.assertRaises(ConfigurationError):
            parse_mode_grid("0.2")

    def test_run_config(self):
        """
        Test the default output path, the required grids and the configuration path.
        """

        scenario = ScenarioParams(0.01, 0.2, 100, 1e-3)
        output_path = self.get_path("bound.csv")
        run_config = RunConfig("covert-bound", scenario, output_path=output_path)

        assert run_config.configuration_path == output_path + ".config.yaml"
        assert RunConfig("covert-bound", scenario, output_format="json").output_path == "covert-bound.json"

        with self.assertRaises(ConfigurationError):
            RunConfig("energy-limits", scenario, output_path=output_path)

        with self.assertRaises(ConfigurationError):
            RunConfig("covert-bound", scenario, output_path=output_path, output_format="xlsx")

        with self.assertRaises(ConfigurationError):
            RunConfig("covert-bound", scenario, output_path=self.get_path(os.path.join("missing", "bound.csv")))

        with self.assertRaises(ConfigurationError):
            RunConfig("covert-bound", scenario, output_path=output_path, threads=0)

    def test_run_config_from_configurator(self):
        """
        Test the conversion of configuration values, including the solver tolerances.
        """

        run_configurator = RunConfigurator()
        run_configurator.update_configurations({"eta": 0.01, "nb": 0.2, "eps": 1e-3, "m": 100, "prior0": 0.5,
                                                "m_grid": "100,1000", "out": self.get_path("limits.csv"),
                                                "solver": {"max_iter": 80}})
        run_config = RunConfig.from_configurator("energy-limits", run_configurator)

        assert run_config.grids["m_grid"] == [100, 1000]
        assert run_config.solver_config.max_iter == 80
        assert run_config.scenario == ScenarioParams(0.01, 0.2, 100, 1e-3)

        run_configurator.set_single_configuration("eta", "high")

        with self.assertRaises(ConfigurationError):
            RunConfig.from_configurator("energy-limits", run_configurator)

    def test_emit_plotdata(self):
        """
        Test the written files of the gnuplot format and the error for an unwritable path.
        """

        table = ResultTable(("nb", "ratio"))
        table.append({"nb": 0.2, "ratio": 1.45})
        written_files = emit_plotdata(table, self.get_path("sweep.csv"), "gnuplot")

        assert written_files == [self.get_path("sweep.csv"), self.get_path("sweep.dat")]
        assert all(os.path.exists(file_name) for file_name in written_files)

        with self.assertRaises(OSError):
            emit_plotdata(table, self.get_path(os.path.join("missing", "sweep.csv")))

    def test_covert_bound_command(self):
        """
        Test a successful run: the exit status, the columns of the table and the saved effective configuration.
        """

        output_path = self.get_path("bound.csv")

        assert main(["covert-bound", "--eta", "0.01", "--nb", "0.2", "--eps", "1e-3", "--m", "1000", "--out",
                     output_path]) == 0

        rows = self.read_rows(output_path)
        assert tuple(rows[0]) == COLUMNS["covert-bound"]
        assert rows[0]["guard_ok"] == "1"
        assert 0 < float(rows[0]["pe_lb"]) < 0.5

        saved_configuration = RunConfigurator(output_path + ".config.yaml")
        assert saved_configuration.load_error is None
        assert saved_configuration.get_single_configuration("m") == 1000
        assert set(saved_configuration.get_single_configuration("solver")) == {"abs_tol", "rel_tol", "max_iter",
                                                                               "damping"}

    def assert_matching_table(self, written_rows, golden_rows):
        assert len(written_rows) == len(golden_rows)

        for written_row, golden_row in zip(written_rows, golden_rows):
            assert len(written_row) == len(golden_row)

            for written_value, golden_value in zip(written_row, golden_row):
                assert abs(float(written_value) - float(golden_value)) <= 1e-9 * abs(float(golden_value))

    def test_covert_bound_golden_tables(self):
        """
        Test the written CSV and .dat files of three covert-bound runs against stored tables, value by value with a
        relative tolerance of 1e-9.
        """

        with open(os.path.join(GOLDEN_DIRECTORY, "covert_bound.csv"), "r", newline="") as golden_file:
            golden_csv = list(csv.reader(golden_file))

        with open(os.path.join(GOLDEN_DIRECTORY, "covert_bound.dat"), "r") as golden_file:
            golden_dat = [line.split() for line in golden_file.read().splitlines()]

        written_csv = []
        written_dat = []

        for index, (eta, n_b, epsilon, m_modes) in enumerate(GOLDEN_SCENARIOS):
            output_path = self.get_path("golden{}.csv".format(index))

            assert main(["covert-bound", "--eta", eta, "--nb", n_b, "--eps", epsilon, "--m", m_modes, "--format",
                         "gnuplot", "--out", output_path]) == 0

            with open(output_path, "r", newline="") as result_file:
                csv_rows = list(csv.reader(result_file))

            with open(self.get_path("golden{}.dat".format(index)), "r") as result_file:
                dat_rows = [line.split() for line in result_file.read().splitlines()]

            assert csv_rows[0] == golden_csv[0]
            assert dat_rows[0] == golden_dat[0]
            written_csv.extend(csv_rows[1:])
            written_dat.extend(dat_rows[1:])

        self.assert_matching_table(written_csv, golden_csv[1:])
        self.assert_matching_table(written_dat, golden_dat[1:])

    def test_repeated_run_from_saved_configuration(self):
        """
        Test that a run repeated out of the saved configuration gives identical bytes.
        """

        first_path = self.get_path("first.csv")
        second_path = self.get_path("second.csv")

        assert main(["covert-bound", "--nb", "0.002", "--out", first_path]) == 0
        assert main(["covert-bound", "--config", first_path + ".config.yaml", "--out", second_path]) == 0

        with open(first_path, "rb") as first_file, open(second_path, "rb") as second_file:
            assert first_file.read() == second_file.read()

    def test_flags_override_configuration_file(self):
        """
        Test that command line values override the values of the configuration file.
        """

        configuration_file = self.get_path("run.yaml")
        output_path = self.get_path("bound.json")

        with open(configuration_file, "w") as configuration_data:
            configuration_data.write("eta: 0.01\nnb: 0.3\nm: 50\nformat: json\n")

        assert main(["covert-bound", "--config", configuration_file, "--nb", "0.2", "--out", output_path]) == 0

        with open(output_path, "r") as result_file:
            rows = json.load(result_file)

        assert rows[0]["nb"] == 0.2
        assert rows[0]["m"] == 50

    def test_configuration_errors(self):
        """
        Test the exit status 1 for invalid parameters, missing or empty grids, broken configuration files and unknown
        commands.
        """

        broken_file = self.get_path("broken.yaml")

        with open(broken_file, "w") as configuration_data:
            configuration_data.write("eta: [0.01\n")

        output_path = self.get_path("out.csv")

        assert main(["covert-bound", "--eta", "1.5", "--out", output_path]) == 1
        assert main(["energy-limits", "--out", output_path]) == 1
        assert main(["heatmap", "--eps-grid", "", "--out", output_path]) == 1
        assert main(["covert-bound", "--config", broken_file, "--out", output_path]) == 1
        assert main(["covert-bound", "--config", self.get_path("missing.yaml"), "--out", output_path]) == 1
        assert main(["covert-bound", "--out", self.get_path(os.path.join("missing", "out.csv"))]) == 1
        assert main(["fourier-transform"]) == 1
        assert os.path.exists(output_path) is False

    def test_flagged_run(self):
        """
        Test the exit status 2 for a violated convergence condition, where the table is still written.
        """

        output_path = self.get_path("bound.csv")

        assert main(["covert-bound", "--eta", "0.9", "--nb", "0.01", "--out", output_path]) == 2
        assert self.read_rows(output_path)[0]["guard_ok"] == "0"

    def test_solver_error(self):
        """
        Test the exit status 3 and the solver diagnostic for a command whose solver fails, distinct from a configuration
        error.
        """

        def failing_builder(run_config):
            return min_fidelity_numeric(run_config.scenario)

        output_path = self.get_path("heatmap.csv")
        diagnostic = io.StringIO()

        with mock.patch.dict(TABLE_BUILDERS, {"heatmap": failing_builder}), redirect_stderr(diagnostic):
            exit_status = main(["heatmap", "--eta", "0.9", "--nb", "0.01", "--eps-grid", "1e-3", "--out",
                                output_path])

        assert exit_status == EXIT_SOLVER_ERROR
        assert "solver failure" in diagnostic.getvalue()
        assert "configuration error" not in diagnostic.getvalue()
        assert os.path.exists(output_path) is False

    def test_energy_limits_command(self):
        """
        Test the energy limits for two mode counts, which enclose the background energy.
        """

        output_path = self.get_path("limits.csv")

        assert main(["energy-limits", "--m-grid", "100,1000", "--threads", "2", "--out", output_path]) == 0

        rows = self.read_rows(output_path)
        assert [row["m"] for row in rows] == ["100", "1000"]

        for row in rows:
            assert float(row["ns_min"]) < 0.2 < float(row["ns_max"])

    def test_heatmap_command(self):
        """
        Test the heat map of the fidelity ratio over a background and an ε grid.
        """

        output_path = self.get_path("heatmap.csv")

        assert main(["heatmap", "--m", "100", "--nb-grid", "0.2,20", "--eps-grid", "1e-3,1e-2", "--threads", "1",
                     "--out", output_path]) == 0

        rows = self.read_rows(output_path)
        assert [(row["nb"], row["eps"]) for row in rows] == [("0.20000000000000001", "0.001"),
                                                             ("0.20000000000000001", "0.01"),
                                                             ("20", "0.001"), ("20", "0.01")]

        for row in rows:
            assert 1 - 1e-9 <= float(row["fid_ratio"]) <= 1.05

    def test_oracle_check_command(self):
        """
        Test the comparison of the Gaussian and the Fock value of Q_s for a weak TMSV probe.
        """

        output_path = self.get_path("oracle.csv")

        assert main(["oracle-check", "--eta", "0.05", "--nb", "0.1", "--ns", "0.1", "--out", output_path]) == 0

        rows = self.read_rows(output_path)
        assert len(rows) == 5
        assert all(float(row["rel_diff"]) < 1e-6 for row in rows)
