"""SVG figures.  Output is byte-stable: fixed hash salt, no date stamp."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .potential import PotentialField, default_cutoff  # noqa: E402

SVG_META = {"Date": None, "Creator": "wlab"}


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "wlab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return path


def figure1_svg(gallery, path, box=2.5):
    """(x1, x2) projections of every trajectory pair over contours of V."""
    V = PotentialField(gallery.theta, "line", default_cutoff(), 2)
    s = np.linspace(-box, box, 401)
    x1, x2 = np.meshgrid(s, s, indexing="xy")
    vals = V.evaluate(np.stack([x1, x2], axis=-1))
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.contour(x1, x2, vals, levels=np.linspace(0.1, 0.9, 9), colors="0.75", linewidths=0.6)
    ax.axvline(0.0, color="0.5", lw=0.5, ls=":")
    colors = plt.cm.viridis(np.linspace(0.0, 0.9, len(gallery.K_list)))
    for c, K in zip(colors, gallery.K_list):
        p = gallery.pairs[K]
        ax.plot(p.plus.X[:, 0], p.plus.X[:, 1], color=c, lw=1.0, label=f"K={K:g}")
        ax.plot(p.minus.X[:, 0], p.minus.X[:, 1], color=c, lw=1.0, ls="--")
    ax.set_xlim(-box, box)
    ax.set_ylim(-box, box)
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.legend(loc="lower right", fontsize=7)
    return _save(fig, path)


def gap_svg(summary, path):
    """Gap against eps per (t, phi) on log-log axes."""
    eps = np.asarray(summary["eps_list"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for (t, phi), row in sorted(summary["rows"].items(), key=lambda kv: str(kv[0])):
        g = np.asarray(row["gaps"])
        if np.all(g > 0):
            ax.loglog(eps[: g.size], g, marker="o", ms=3, lw=0.8, label=f"t={t:g} {phi}")
    ax.set_xlabel("eps")
    ax.set_ylabel("|quantum - classical|")
    ax.legend(fontsize=5, ncol=2)
    return _save(fig, path)


def two_limits_svg(report, path):
    m = [r["m"] for r in report.rows]
    side = [r["side_plus"] for r in report.rows]
    q = [r["quantum_side_plus"] for r in report.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(m, side, "o-", label="classical")
    ax.plot(m, q, "s", label="quantum")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("m (eps = 1/m)")
    ax.set_ylabel("mass on x1 > 0")
    ax.legend(fontsize=7)
    return _save(fig, path)
