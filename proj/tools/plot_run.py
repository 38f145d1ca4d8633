#!/usr/bin/env python3
"""Plot an aerialqp run CSV into a single SVG figure.

Usage: plot_run.py RUN.csv [-o OUT.svg] [--compare OTHER.csv]
"""

import argparse
import math
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


def columns(df, prefix):
    """Columns named prefix_1, prefix_2, ... in index order."""
    cols = [c for c in df.columns if c.startswith(prefix + "_") and c[len(prefix) + 1:].isdigit()]
    return sorted(cols, key=lambda c: int(c[len(prefix) + 1:]))


def wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def error_norm(df, name):
    axes = ("x", "y", "z")
    sq = sum((df[f"{name}_{a}"] - df[f"{name}_ref_{a}"]) ** 2 for a in axes)
    return sq ** 0.5


def plot(df, out, label, other=None, other_label=None):
    fig, ax = plt.subplots(3, 2, figsize=(12, 10), sharex=True)
    t = df["t"]

    runs = [(df, label, "-")]
    if other is not None:
        runs.append((other, other_label, "--"))

    for d, lab, ls in runs:
        ax[0, 0].plot(d["t"], error_norm(d, "p_B"), ls, label=f"|e p_B| {lab}")
        ax[0, 0].plot(d["t"], error_norm(d, "p_E"), ls, label=f"|e p_E| {lab}")
        ax[0, 1].plot(d["t"], wrap(d["yaw"] - d["yaw_ref"]).abs(), ls, label=lab)
        ax[2, 1].semilogy(d["t"], np.maximum(d["norm_s"].to_numpy(dtype=float), 1e-16), ls, label=lab)
    ax[0, 0].set_ylabel("tracking error [m]")
    ax[0, 1].set_ylabel("|yaw error| [rad]")
    ax[2, 1].set_ylabel("|s|")

    for c in columns(df, "F"):
        ax[1, 0].plot(t, df[c], label=c)
    ax[1, 0].set_ylabel("rotor thrust [N]")

    for c in columns(df, "tau"):
        ax[1, 1].plot(t, df[c], label=c)
    ax[1, 1].set_ylabel("joint torque [N m]")

    for c in columns(df, "q"):
        ax[2, 0].plot(t, df[c], label=c)
    ax[2, 0].set_ylabel("joint angle [rad]")

    fallback = df["fallback_flag"] != 0
    if fallback.any():
        for a in ax.flat:
            a.fill_between(t, 0, 1, where=fallback, transform=a.get_xaxis_transform(), color="red", alpha=0.1)

    for a in ax.flat:
        a.grid(True, alpha=0.3)
        a.legend(fontsize=7, loc="best")
    for a in ax[2]:
        a.set_xlabel("t [s]")
    fig.suptitle(label)
    fig.tight_layout()
    fig.savefig(out)  # format follows the file suffix
    plt.close(fig)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("csv", type=pathlib.Path)
    p.add_argument("-o", "--out", type=pathlib.Path, help="output SVG (default: CSV path with .svg)")
    p.add_argument("--compare", type=pathlib.Path, help="second run overlaid on the error panels")
    args = p.parse_args(argv)

    df = pd.read_csv(args.csv)
    other = pd.read_csv(args.compare) if args.compare else None
    out = args.out or args.csv.with_suffix(".svg")
    plot(df, out, args.csv.stem, other, args.compare.stem if args.compare else None)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
