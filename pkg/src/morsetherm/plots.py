"""Figure rendering for the report-producing commands.

Every plotting function takes plain rows/report objects, writes one PNG
next to the delimited output, and returns the path. Import is kept out
of the numerical modules so headless use never touches matplotlib.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finalize(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_catalog(catalog, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    values = [p.value for p in catalog.points]
    indexes = [p.morse_index for p in catalog.points]
    ax.scatter(values, indexes, s=25, alpha=0.7, edgecolor="k", linewidth=0.3)
    for v in catalog.critical_values:
        ax.axvline(v, color="0.85", zorder=0)
    ax.set_xlabel("critical value $v_c$")
    ax.set_ylabel("Morse index $k$")
    ax.set_yticks(range(catalog.N + 1))
    ax.set_title(f"{len(catalog.points)} critical points, N={catalog.N}")
    return _finalize(fig, path)


def plot_euler_curve(rows, N, path):
    vbar = [r["vbar"] for r in rows]
    chi = [r["chi"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.step(vbar, chi, where="post")
    ax1.set_ylabel(r"$\chi(M_v)$")
    ax1.axhline(0, color="0.8", zorder=0)
    for i in range(N + 1):
        key = f"mu_{i}"
        if any(r[key] for r in rows):
            ax2.step(vbar, [r[key] for r in rows], where="post", label=f"$\\mu_{{{i}}}$")
    ax2.set_xlabel(r"$\bar v$")
    ax2.set_ylabel("multiplicities")
    ax2.legend(fontsize=8, ncol=2)
    return _finalize(fig, path)


def plot_entropy_curve(rows, path):
    vbar = np.array([r["vbar"] for r in rows])
    S = np.array([r["S"] for r in rows])
    err = np.array([r["stderr_S"] for r in rows])
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].errorbar(vbar, S, yerr=3 * err, fmt="o-", ms=3, lw=1, capsize=2)
    axes[0].set_ylabel(r"$S^{(-)}(\bar v)$")
    in_band = [r.get("in_band") for r in rows]
    if any(in_band):
        band = np.array(in_band, dtype=bool)
        axes[0].scatter(vbar[band], S[band], color="crimson", s=12, zorder=5, label="in band")
        axes[0].legend(fontsize=8)
    for k, style in ((1, "-"), (2, "--"), (3, "-."), (4, ":")):
        d = np.array([r.get(f"dS{k}", math.nan) for r in rows])
        if np.isfinite(d).any():
            axes[1].plot(vbar, d, style, label=f"$d^{k}S/d\\bar v^{k}$", lw=1)
    axes[1].set_xlabel(r"$\bar v$")
    axes[1].set_ylabel("derivatives")
    axes[1].legend(fontsize=8)
    return _finalize(fig, path)


def plot_scaling(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for k in sorted(report.sup_norms):
        ax.errorbar(
            report.N_list,
            report.sup_norms[k],
            yerr=3 * report.noise_bands[k],
            marker="o",
            ms=4,
            capsize=2,
            label=f"k={k}" + (" (growth)" if report.growth_flags.get(k) else ""),
        )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\sup_{\bar v}|d^k S/d\bar v^k|$")
    ax.set_title(f"window {report.window}")
    ax.legend(fontsize=8)
    return _finalize(fig, path)


def plot_coefficients(A_table, b_rows, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ks = sorted(int(k) for k in A_table)
    vals = [A_table[k] if k in A_table else A_table[str(k)] for k in ks]
    ax1.bar([str(k) for k in ks], vals)
    ax1.set_xlabel("index k")
    ax1.set_ylabel(r"$A(N,k,\varepsilon_0)$")
    if b_rows:
        dv = [r["delta_v"] for r in b_rows]
        for key in sorted(b_rows[0]):
            if key.startswith("B_"):
                ax2.plot(dv, [r[key] for r in b_rows], label=key, lw=1)
        ax2.set_xlabel(r"$v - v_c$")
        ax2.set_ylabel("B")
        ax2.legend(fontsize=7)
    return _finalize(fig, path)


def plot_decomposition(reports, path):
    eps = [r.eps0 for r in reports]
    res = [r.residual_rel for r in reports]
    res_mc = [r.residual_vs_mc_rel for r in reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(eps, res, "o-", label="closed-form residual")
    ax.loglog(eps, res_mc, "s--", label="vs MC cylinders")
    ax.set_xlabel(r"$\varepsilon_0$")
    ax.set_ylabel("relative residual")
    ax.legend(fontsize=8)
    ax.invert_xaxis()
    return _finalize(fig, path)


def plot_staircase(vbars, s_values, bands, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(vbars, s_values, "-", lw=1.2)
    for lo, hi in bands:
        ax.axvspan(lo, hi, color="0.92", zorder=0)
    ax.set_xlabel(r"$\bar v$")
    ax.set_ylabel(r"$S_{\mathrm{decomposed}}$")
    return _finalize(fig, path)
