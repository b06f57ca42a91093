#!/usr/bin/env python
import argparse
import logging
import signal
import sys

import matplotlib.pyplot as p
import numpy as np

import kahler.csv_reader as csv_reader


class Plotter(object):
    """Re-plot CSV files written by kahler_lab.py; the first column is the x axis."""

    plot_data = []
    number_of_plot_colors = 12
    color_list = []

    def signal_handler(signal, frame):
        p.close("all")
        sys.exit(0)

    def __init__(self):
        parser = argparse.ArgumentParser()
        parser.add_argument("columns", help="columns to draw against the first one", nargs="*")
        parser.add_argument("--file", required=True, help="data file", nargs="+")
        parser.add_argument("--loglog", help="log scale on both axes (trend files)", action="store_true")
        parser.add_argument("--output", default=None, help="write an SVG instead of opening a window")
        args = parser.parse_args()

        logging.basicConfig(level=logging.INFO)

        self.get_plot_data(args.file)
        self.color_list = p.cm.Paired(np.linspace(0, 1, self.number_of_plot_colors))
        p.close("all")
        self.plot_all(args.columns, args.loglog)

        signal.signal(signal.SIGINT, self.signal_handler)
        if args.output:
            p.savefig(args.output, format="svg")
        else:
            p.show()

    def get_plot_data(self, files):
        for name in files:
            with open(name) as csvfile:
                self.plot_data.append((self.get_header(name), csv_reader.CSVReader(csvfile)))

    @staticmethod
    def get_header(name):
        with open(name) as csvfile:
            return csvfile.readline().strip().split(",")

    def get_plot_color(self, cnt):
        return self.color_list[(cnt * 2) % self.number_of_plot_colors]

    def plot_all(self, columns, loglog):
        f, subplot = p.subplots()
        draw = subplot.loglog if loglog else subplot.plot
        cnt = 0
        for header, data in self.plot_data:
            x = data.__dict__[header[0]]
            for name in columns or header[1:]:
                label = name if len(self.plot_data) == 1 else name + " " + data.get_name()
                draw(x, np.abs(data.__dict__[name]) if loglog else data.__dict__[name], "x-",
                     label=label, color=self.get_plot_color(cnt))
                cnt = cnt + 1
        subplot.set_xlabel(self.plot_data[0][0][0])
        subplot.legend(loc="upper right", shadow=True, fontsize="x-small")


Plotter()
