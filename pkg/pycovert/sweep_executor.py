import os
import logging

from PyQt5.QtCore import QObject, pyqtSignal, QRunnable, pyqtSlot, QThreadPool, QThread, Qt


def default_thread_count():
    """
    Get the number of worker threads: the environment variable PYCOVERT_THREADS if it is set to a positive integer,
    the ideal thread count of the machine otherwise.
    """

    environment_value = os.getenv("PYCOVERT_THREADS", None)

    if environment_value:
        try:
            thread_count = int(environment_value)

            if thread_count >= 1:
                return thread_count

        except ValueError:
            pass

        logging.warning("The value {} of PYCOVERT_THREADS is not a positive integer and is ignored".format(
            environment_value))

    return max(1, QThread.idealThreadCount())


class SweepWorkerSignals(QObject):
    """
    Define a class of signals for the SweepWorker, because QRunnable is not a QObject and cannot have own signals.
    """

    # Define a signal for the result of one grid point with its index in the grid.
    result_data = pyqtSignal(int, object)
    # Define a signal for a failed grid point with its index and the error message.
    error = pyqtSignal(int, str)


class SweepWorker(QRunnable):
    """
    Define a worker as QRunnable for evaluating one point of a parameter grid in a thread of the thread pool.
    """

    def __init__(self, function_to_execute, index, parameter):
        """
        Get the function for executing, the index of the grid point and its parameter.
        """

        super().__init__()
        self.function_to_execute = function_to_execute
        self.index = index
        self.parameter = parameter
        self.signals = SweepWorkerSignals()

    @pyqtSlot()
    def run(self):
        """
        Run the function on the parameter. An exception is turned into an error signal, the result signal is emitted
        in every case, with None for a failed point.
        """

        result = None

        try:
            result = self.function_to_execute(self.parameter)

        except Exception as evaluation_error:
            logging.error("The evaluation of grid point {} with parameter {} failed: {}".format(
                self.index, self.parameter, evaluation_error), exc_info=True)
            self.signals.error.emit(self.index, str(evaluation_error))

        finally:
            self.signals.result_data.emit(self.index, result)


class SweepExecutor(QObject):
    """
    Create a class for evaluating a function on every point of a parameter grid with a thread pool. The signals of the
    workers are connected directly, so no event loop is necessary and the results keep the order of the grid.
    """

    def __init__(self, thread_count=None):
        super().__init__()

        if thread_count is None:
            thread_count = default_thread_count()

        if thread_count < 1:
            raise ValueError("The thread count has to be at least 1, got {}".format(thread_count))

        self.thread_count = int(thread_count)
        self.thread_pool = QThreadPool()
        self.thread_pool.setMaxThreadCount(self.thread_count)
        self.result_list = []
        self.error_list = []

    def store_result(self, index, result):
        self.result_list[index] = result

    def store_error(self, index, error_message):
        self.error_list.append((index, error_message))

    def execute(self, function_to_execute, parameter_list):
        """
        Evaluate the function on every parameter and return the results in the order of the parameter list. Failed
        points give None and are collected with their error message in the error list. With one thread, the points are
        evaluated in the calling thread.
        """

        self.result_list = [None] * len(parameter_list)
        self.error_list = []
        worker_list = []

        for index, parameter in enumerate(parameter_list):
            sweep_worker = SweepWorker(function_to_execute, index, parameter)
            # Python keeps the workers alive until all of them are done.
            sweep_worker.setAutoDelete(False)
            sweep_worker.signals.result_data.connect(self.store_result, Qt.DirectConnection)
            sweep_worker.signals.error.connect(self.store_error, Qt.DirectConnection)
            worker_list.append(sweep_worker)

        if self.thread_count == 1:
            for sweep_worker in worker_list:
                sweep_worker.run()

        else:
            for sweep_worker in worker_list:
                self.thread_pool.start(sweep_worker)

            self.thread_pool.waitForDone()

        self.error_list.sort()

        if self.error_list:
            logging.warning("{} of {} grid points failed".format(len(self.error_list), len(parameter_list)),
                            extra={"flag": "grid_point_failed"})

        return list(self.result_list)
