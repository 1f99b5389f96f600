import html
import os

dir_path = os.path.abspath(os.path.join((os.path.dirname(os.path.realpath(__file__))), ".."))

PARSE_MODE_NONE = 0
PARSE_MODE_ESCAPE = 1
PARSE_MODE_NUMBER = 2

NUMBER_FORMAT = "{:.4f}"


def fill_out(base, replacements):
    for r in replacements:
        if len(r) == 2:  # default case
            k, v = r
            r = (k, v, PARSE_MODE_ESCAPE)

        k, v, mode = r

        if mode == PARSE_MODE_NUMBER:
            v = NUMBER_FORMAT.format(float(v))
        elif mode == PARSE_MODE_ESCAPE:
            v = html.escape(str(v))

        base = base.replace("{{" + k + "}}", str(v))

    return base


def read_file(filename):
    with open(filename, "r", encoding="utf-8") as f:
        s = f.read()
    return s


# REPORT
total = read_file(dir_path + "/html/base.html")
summary = read_file(dir_path + "/html/report/summary.html")
summary_epsilon = read_file(dir_path + "/html/report/epsilon.html")
player_row = read_file(dir_path + "/html/report/player_row.html")
checks_row = read_file(dir_path + "/html/report/checks_row.html")

# CEM
cem_table = read_file(dir_path + "/html/cem/table.html")
cem_header_cell = read_file(dir_path + "/html/cem/header_cell.html")
cem_row = read_file(dir_path + "/html/cem/row.html")
cem_cell = read_file(dir_path + "/html/cem/cell.html")
