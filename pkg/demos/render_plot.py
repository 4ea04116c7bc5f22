"""Render a ``.plot`` command file written by ``nvent fig*`` with matplotlib.

    python demos/render_plot.py out/fig4.plot [-o fig4.png]
"""
import argparse
import re
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

ATTR = re.compile(r"(\w+)=(.*?)(?=\s\w+=|$)")
STYLES = {"solid": "-", "dashed": "--", "dotted": ":"}


def parse(path: Path) -> dict:
    spec = {"series": []}
    for line in path.read_text().splitlines():
        verb, _, rest = line.partition(" ")
        if verb == "series":
            x, y, attrs = rest.split(" ", 2)
            spec["series"].append({"x": x, "y": y, **dict(ATTR.findall(attrs))})
        elif verb:
            spec[verb] = rest
    return spec


def render(plot_path: Path, out: Path) -> None:
    spec = parse(plot_path)
    data = np.genfromtxt(plot_path.parent / spec["data"], delimiter=",", names=True, deletechars="")
    data = np.atleast_1d(data)
    fig, ax = plt.subplots(figsize=(6, 4))
    for s in spec["series"]:
        style = STYLES.get(s.get("style", "solid"), "-")
        if "group" in s:
            groups = defaultdict(list)
            for i, g in enumerate(data[s["group"]]):
                groups[g].append(i)
            for g, idx in groups.items():
                ax.plot(data[s["x"]][idx], data[s["y"]][idx], style, label=f"{s['label']}, {s['group']}={g:g}")
        else:
            ax.plot(data[s["x"]], data[s["y"]], style, label=s["label"])
    ax.set_title(spec.get("title", ""))
    ax.set_xlabel(spec.get("xlabel", ""))
    ax.set_ylabel(spec.get("ylabel", ""))
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("plot")
    p.add_argument("-o", "--out")
    args = p.parse_args()
    path = Path(args.plot)
    render(path, Path(args.out) if args.out else path.with_suffix(".png"))
