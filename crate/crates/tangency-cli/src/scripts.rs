//! Standalone plot scripts written next to the CSV artifacts. The tool
//! itself never renders images; these scripts are self-contained consumers
//! of the generated files.

pub const PLOT_PORTRAIT: &str = r##"#!/usr/bin/env python3
"""Render the phase portrait from portrait.csv (same directory)."""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "portrait.csv"
with open(path) as fh:
    rows = [line for line in fh if not line.startswith("#")]

groups = defaultdict(list)
for rec in csv.DictReader(rows):
    key = (rec["entity"], int(rec["index"]))
    groups[key].append((float(rec["x"]), float(rec["y"])))

fig, ax = plt.subplots(figsize=(7, 7))
cmap = plt.get_cmap("viridis")
orbit_ks = sorted(idx for (entity, idx) in groups if entity == "orbit")
for (entity, idx), pts in sorted(groups.items()):
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if entity == "unstable_manifold":
        ax.plot(xs, ys, lw=0.7, color="tab:blue", label="unstable manifold")
    elif entity == "stable_manifold":
        ax.plot(xs, ys, lw=0.7, color="tab:orange", label="stable manifold")
    elif entity == "orbit":
        frac = orbit_ks.index(idx) / max(len(orbit_ks) - 1, 1)
        ax.scatter(xs, ys, s=14, color=cmap(frac), zorder=3, label=f"orbit k={idx}")
    elif entity == "fixed_point":
        ax.scatter(xs, ys, marker="x", s=70, color="k", zorder=4)
    elif entity == "homoclinic":
        ax.scatter(xs, ys, marker="+", s=50, color="tab:red", zorder=4)

ax.set_xlabel("x")
ax.set_ylabel("y")
ax.set_xlim(-0.1, 1.3)
ax.set_ylim(-0.1, 1.3)
ax.legend(fontsize=6, ncol=2, loc="upper left")
fig.tight_layout()
fig.savefig("portrait.png", dpi=200)
print("wrote portrait.png")
"##;

pub const PLOT_SWEEP: &str = r##"#!/usr/bin/env python3
"""Render scaled bifurcation sequences from bifurcations.csv and fits.csv."""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


bif_path = sys.argv[1] if len(sys.argv) > 1 else "bifurcations.csv"
fit_path = sys.argv[2] if len(sys.argv) > 2 else "fits.csv"
bifs = [r for r in read_csv(bif_path) if r["status"] == "ok"]
fits = read_csv(fit_path)

fig, (ax_scaled, ax_eps) = plt.subplots(1, 2, figsize=(11, 4.5))
colors = {"SN": "tab:blue", "PD": "tab:red"}
for kind in ("SN", "PD"):
    rows = [r for r in bifs if r["kind"] == kind]
    ks = [int(r["k"]) for r in rows]
    scaled = [float(r["scaled_value"]) for r in rows]
    eps = [abs(float(r["epsilon"])) for r in rows]
    ax_scaled.plot(ks, scaled, "o-", color=colors[kind], label=f"{kind} scaled")
    ax_eps.semilogy(ks, eps, "o-", color=colors[kind], label=f"|epsilon| {kind}")
    for fit in fits:
        if fit["kind"] != kind:
            continue
        ax_scaled.axhline(float(fit["predicted_limit"]), color=colors[kind], ls="--", lw=0.8)
        ax_scaled.axhline(float(fit["fitted_limit"]), color=colors[kind], ls=":", lw=0.8)

ax_scaled.set_xlabel("k")
ax_scaled.set_ylabel("epsilon / rate(k)")
ax_scaled.set_title("scaled bifurcation values (dashed: predicted, dotted: fitted)")
ax_scaled.legend(fontsize=8)
ax_eps.set_xlabel("k")
ax_eps.set_ylabel("|epsilon|")
ax_eps.set_title("bifurcation distances")
ax_eps.legend(fontsize=8)
fig.tight_layout()
fig.savefig("sweep.png", dpi=200)
print("wrote sweep.png")
"##;
