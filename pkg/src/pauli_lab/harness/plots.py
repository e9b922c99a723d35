"""PNG figures for a finished sweep (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_figures(out: Path, hs, normalized, preds, lam, phi_min: float, bracket_tol: float) -> list:
    """Write ``normalized.png`` (values against their bracket) and ``slope.png``; return the paths."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    hs = np.asarray(hs)
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for k, p in enumerate(preds, start=1):
        line, = ax.plot(hs, normalized[:, k - 1], "o-", label=f"k={k}")
        ax.fill_between([0, hs.max()], p.C_inf * (1 - bracket_tol), p.C_sup * (1 + bracket_tol),
                        color=line.get_color(), alpha=0.12)
    ax.set_xlim(0, hs.max() * 1.05)
    ax.set_xlabel("h")
    ax.set_ylabel(r"$h^{k-1} e^{-2\phi_{min}/h}\,\lambda_k$")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    paths.append(out / "normalized.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(hs, hs * np.log(lam[:, 0]), "o-", label=r"$h\log\lambda_1$")
    ax.axhline(2 * phi_min, color="k", ls="--", label=r"$2\phi_{min}$")
    ax.set_xlabel("h")
    ax.legend()
    fig.tight_layout()
    paths.append(out / "slope.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)
    return paths
