import json
import logging
import math

from PyQt5.QtCore import QObject, pyqtSignal


def format_value(value):
    """
    Format a single table value with a stable representation: floats with 17 significant digits, booleans as 0 and 1.
    """

    if isinstance(value, bool):
        return "1" if value else "0"

    if isinstance(value, float):
        return format(value, ".17g")

    return str(value)


def _json_value(value):
    # JSON has no representation for non-finite floats.
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)

    return value


class CSVExporter(QObject):

    # Create a signal for a successful export with the file name.
    export_complete = pyqtSignal(str)

    """
    Create a class for exporting a result table to a file. The first row of the data list is the header with the column
    names, every further row holds the values of one grid point. The same input always gives the same bytes.
    """

    def __init__(self, data_list):
        super().__init__()

        if not data_list:
            raise ValueError("A data list with at least a header row is required for the export")

        self.data_list = data_list

    def write_lines(self, file_name, line_list):
        """
        Write the lines to the file. Return True for a success and False for a failure, which is logged with the path.
        """

        try:
            # The newline argument keeps the line endings identical on every platform.
            with open(file_name, "w", newline="\n") as file_to_save:
                for line in line_list:
                    file_to_save.write(line)
                    file_to_save.write("\n")

        except OSError as file_error:
            logging.error("The result table cannot be saved in the file {}: {}".format(file_name, file_error))

            return False

        self.export_complete.emit(file_name)

        return True

    def export_result_to_csv(self, file_name):
        """
        Export the result data as comma separated values.
        """

        return self.write_lines(file_name, [",".join(format_value(value) for value in data_row)
                                            for data_row in self.data_list])

    def export_result_to_gnuplot(self, file_name):
        """
        Export the result data as whitespace separated columns with a commented header, readable by gnuplot.
        """

        header_row = "# " + " ".join(str(column_name) for column_name in self.data_list[0])
        data_rows = [" ".join(format_value(value) for value in data_row) for data_row in self.data_list[1:]]

        return self.write_lines(file_name, [header_row] + data_rows)

    def export_result_to_json(self, file_name):
        """
        Export the result data as a list of objects, one per data row, with the header names as keys.
        """

        header_row = self.data_list[0]
        row_objects = [{column_name: _json_value(value) for column_name, value in zip(header_row, data_row)}
                       for data_row in self.data_list[1:]]

        return self.write_lines(file_name, [json.dumps(row_objects, indent=2)])
