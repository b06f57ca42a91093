import csv
import logging

import numpy as np

from .conventions import LOGNAME

_log = logging.getLogger(LOGNAME)


class CSVReader(object):
    __samples = None
    __filename = None

    def get_header_data(self, __reader):
        header = next(__reader)
        return header

    def __init__(self, csvfile, delimiter=","):
        self.__filename = csvfile.name

        csvfile = [
            line for line in csvfile.readlines() if line.strip()
        ]  # remove any empty lines

        reader = csv.reader(csvfile, delimiter=delimiter)
        header = self.get_header_data(reader)

        data = [row for row in reader]
        self.__samples = len(data)

        if self.__samples == 0:
            _log.warning("No data read from file: " + self.__filename)
            self.__dict__.update({name: np.array([]) for name in header})
            return

        # transpose data
        data = list(zip(*data))

        self.__dict__.update(
            {header[i]: np.array(list(map(float, data[i]))) for i in range(len(header))}
        )

    def get_samples(self):
        return self.__samples

    def get_name(self):
        return self.__filename

    def get_complex(self, name):
        """Rebuild a COMPLEX column written as name_0, name_1."""
        return self.__dict__[name + "_0"] + 1j * self.__dict__[name + "_1"]
