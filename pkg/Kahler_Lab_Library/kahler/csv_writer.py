import csv

DOUBLE = "DOUBLE"
INT = "INT"
VECTOR2D = "VECTOR2D"
COMPLEX = "COMPLEX"


def get_item_size(data_type):
    if data_type in (VECTOR2D, COMPLEX):
        return 2
    if data_type in (DOUBLE, INT):
        return 1
    raise ValueError("Unknown CSV column type: " + str(data_type))


def _expand(value, data_type):
    if data_type == COMPLEX:
        value = complex(value)
        return [value.real, value.imag]
    if data_type == VECTOR2D:
        return [float(v) for v in value]
    if data_type == INT:
        return [int(value)]
    return [float(value)]


class CSVWriter(object):
    def __init__(self, csvfile, names, types, delimiter=","):
        if len(names) != len(types):
            raise ValueError("List sizes are not identical.")
        self.__names = names
        self.__types = types
        self.__header_names = []
        self.__columns = 0
        for i in range(len(self.__names)):
            size = get_item_size(self.__types[i])
            self.__columns += size
            if size > 1:
                for j in range(size):
                    name = self.__names[i] + "_" + str(j)
                    self.__header_names.append(name)
            else:
                name = self.__names[i]
                self.__header_names.append(name)
        self.__writer = csv.writer(csvfile, delimiter=delimiter)

    def writeheader(self):
        self.__writer.writerow(self.__header_names)

    def writerow(self, data_object):
        values = data_object if isinstance(data_object, dict) else data_object.__dict__
        data = []
        for i in range(len(self.__names)):
            data.extend(_expand(values[self.__names[i]], self.__types[i]))
        self.__writer.writerow(data)

    def writecolumns(self, columns):
        """Write rows from a dict of equally long per-column arrays."""
        count = len(columns[self.__names[0]])
        for j in range(count):
            self.writerow({name: columns[name][j] for name in self.__names})
