"""Figure rendering for the report path (opt-in via ``cvphoton run --figures``).

Renders PNGs next to the delimited outputs; the CSVs remain the primary,
deterministic artifacts.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (6.0, 3.7),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "axes.titlesize": 11,
    "savefig.bbox": "tight",
}


def _styled():
    return plt.rc_context(_RC)


def save_marginal(path, coordinates, density, label, representation):
    with _styled():
        fig, ax = plt.subplots()
        ax.plot(coordinates, density, lw=1.2)
        ax.set_xlabel("x" if representation == "position" else "p")
        ax.set_ylabel("probability density")
        ax.set_title(f"{label} ({representation} marginal)")
        fig.savefig(path)
        plt.close(fig)


def save_phase_surface(path_mag, path_phase, magnitude, phase, labels):
    with _styled():
        for path, data, name, cmap in (
            (path_mag, magnitude, "|amplitude|", "viridis"),
            (path_phase, phase, "arg(amplitude)", "twilight"),
        ):
            fig, ax = plt.subplots()
            im = ax.imshow(data.T, origin="lower", aspect="auto", cmap=cmap)
            fig.colorbar(im, ax=ax, label=name)
            ax.set_xlabel(labels[0])
            ax.set_ylabel(labels[1])
            fig.savefig(path)
            plt.close(fig)


def save_nullifier_ladder(path, ladder, table):
    """table: {node: [variance per ladder value]}"""
    with _styled():
        fig, ax = plt.subplots()
        for node, values in table.items():
            ax.plot(ladder, values, marker="o", label=node)
        ax.set_xlabel("node squeezing w_p")
        ax.set_ylabel("nullifier variance")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.invert_xaxis()
        ax.legend()
        fig.savefig(path)
        plt.close(fig)


def save_moment_ellipse(path, summary, label):
    with _styled():
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        vals, vecs = np.linalg.eigh(summary.covariance)
        angles = np.linspace(0, 2 * np.pi, 200)
        circle = np.stack([np.cos(angles), np.sin(angles)])
        ellipse = vecs @ (np.sqrt(np.maximum(vals, 0))[:, None] * circle)
        ax.plot(summary.mean[0] + ellipse[0], summary.mean[1] + ellipse[1], lw=1.2)
        ax.plot(*summary.mean, marker="+", ms=10)
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        ax.set_title(f"{label}: 1-sigma covariance ellipse")
        ax.set_aspect("equal")
        fig.savefig(path)
        plt.close(fig)
