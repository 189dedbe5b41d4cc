"""Deterministic run artifacts: CSV traces, certificates, plot script, figures.

CSV files are the machine contract: identical config + seed must reproduce
them byte for byte, so reals are printed with 17 significant digits, rows
follow iteration order, and line endings are always LF.  Figures and the
generated gnuplot script are conveniences layered on top of the CSVs.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import DomainError
from .primal_dual import regret as regret_curve

FIG_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _fmt(x):
    return f"{float(x):.17g}"


def trace_header(n_constraints):
    cols = ["k"]
    cols += [f"lambda_{i}" for i in range(1, n_constraints + 1)]
    cols += [f"J_{i}" for i in range(n_constraints + 1)]
    cols += ["D", "regret", "subgrad_norm", "pg_steps", "eps_est"]
    return ",".join(cols)


def emit_trace_csv(trace, path):
    """Write one CSV row per dual iteration; see :func:`trace_header`."""
    if len(trace) == 0:
        raise DomainError("cannot emit an empty trace")
    if trace.D_star_ref is None:
        raise DomainError("trace carries no D_star_ref; regret column undefined")
    N = len(trace.records[0].lam)
    reg = regret_curve(trace, trace.D_star_ref)
    lines = [trace_header(N)]
    for r, rg in zip(trace.records, reg):
        cells = [str(r.k)]
        cells += [_fmt(v) for v in r.lam]
        cells += [_fmt(v) for v in r.costs]
        cells.append(_fmt(r.dual_value))
        cells.append(_fmt(rg))
        cells.append(_fmt(np.linalg.norm(r.subgradient)))
        cells.append(str(r.pg_steps_used))
        cells.append(_fmt(r.eps))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    return Path(path)


def emit_certificate_csv(cert, path):
    """Flatten a duality certificate into metric,value,threshold,pass rows."""
    rows = [("metric", "value", "threshold", "pass")]

    def add(metric, value, threshold, ok):
        rows.append((metric, _fmt(value), _fmt(threshold), str(bool(ok)).lower()))

    add("duality_gap_rel", cert.duality_gap_rel, cert.tol, cert.gap_ok)
    add("stationarity_norm", cert.stationarity_norm, cert.tol, cert.stationarity_ok)
    for i, (s, m, ci) in enumerate(
        zip(cert.slackness_residuals, cert.feasibility_margins, cert.limits), start=1
    ):
        add(f"slackness_{i}", s, cert.tol * ci, s <= cert.tol * ci)
        add(f"feasibility_margin_{i}", m, -cert.tol * ci, m >= -cert.tol * ci)
    for i, li in enumerate(cert.lambda_star, start=1):
        rows.append((f"lambda_star_{i}", _fmt(li), "", ""))
    rows.append(("primal_value", _fmt(cert.primal_value), "", ""))
    rows.append(("dual_value", _fmt(cert.dual_value), "", ""))
    rows.append(("passed", str(bool(cert.passed)).lower(), "", ""))
    text = "\n".join(",".join(r) for r in rows) + "\n"
    Path(path).write_text(text, newline="\n")
    return Path(path)


def write_plot_script(path, n_constraints, limits, trace_files):
    """Generate a gnuplot script that renders the CSV traces."""
    N = n_constraints
    k_col = 1
    d_col = 2 * N + 3
    regret_col = 2 * N + 4
    lines = [
        "# Generated plot script; consumes the CSV traces in this directory.",
        "set datafile separator ','",
        "set key top right",
        "set terminal pngcairo size 900,600",
        "",
        "set output 'regret_gp.png'",
        "set logscale xy",
        "set xlabel 'dual iteration k'",
        "set ylabel 'Regret_k'",
    ]
    plot_parts = [
        f"'{name}' every ::1 using {k_col}:{regret_col} with linespoints title '{label}'"
        for name, label in trace_files
    ]
    lines.append("plot " + ", \\\n     ".join(plot_parts))
    if N > 0:
        name, label = trace_files[-1]
        lines += [
            "",
            "set output 'violation_gp.png'",
            "unset logscale",
            "set xlabel 'dual iteration k'",
            "set ylabel 'relative constraint violation'",
        ]
        viol_parts = [
            f"'{name}' every ::1 using {k_col}:(column({N + 2 + i}) / {_fmt(limits[i - 1])} - 1.0) "
            f"with linespoints title 'constraint {i}'"
            for i in range(1, N + 1)
        ]
        lines.append("plot " + ", \\\n     ".join(viol_parts))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    return Path(path)


def render_regret_figure(traces, path, bounds=None):
    """Regret curves per labeled trace (log-log), optional bound overlays."""
    with plt.rc_context(FIG_STYLE):
        fig, ax = plt.subplots()
        for label, trace in traces.items():
            reg = regret_curve(trace, trace.D_star_ref)
            k = np.arange(1, len(reg) + 1)
            ax.loglog(k, np.maximum(reg, 1e-16), marker="o", ms=3, label=label)
            if bounds and label in bounds:
                ax.loglog(k, bounds[label], ls="--", alpha=0.7,
                          label=f"{label} bound")
        ax.set_xlabel("dual iteration k")
        ax.set_ylabel("running-average regret")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render_violation_figure(trace, limits, path, threshold=None):
    """Relative constraint violations (J_i - c_i)/c_i along one trace."""
    with plt.rc_context(FIG_STYLE):
        fig, ax = plt.subplots()
        k = np.arange(1, len(trace) + 1)
        J = trace.cost_rows
        for i in range(1, J.shape[1]):
            ax.plot(k, (J[:, i] - limits[i - 1]) / limits[i - 1],
                    marker="o", ms=3, label=f"constraint {i}")
        if threshold is not None:
            ax.axhline(threshold, color="k", ls=":", alpha=0.7,
                       label=f"threshold {threshold:g}")
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("dual iteration k")
        ax.set_ylabel("relative constraint violation")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render_gap_figure(trace, j0_star, path):
    """Relative optimality gap (J_0(K^k) - J0*)/J0* along one trace."""
    with plt.rc_context(FIG_STYLE):
        fig, ax = plt.subplots()
        k = np.arange(1, len(trace) + 1)
        gap = (trace.cost_rows[:, 0] - j0_star) / j0_star
        ax.plot(k, gap, marker="o", ms=3, color="tab:purple")
        ax.set_xlabel("dual iteration k")
        ax.set_ylabel("relative optimality gap")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render_dual_figure(trace, path):
    """Dual value D(lam^k) with the reference optimum."""
    with plt.rc_context(FIG_STYLE):
        fig, ax = plt.subplots()
        k = np.arange(1, len(trace) + 1)
        ax.plot(k, trace.dual_values, marker="o", ms=3, label="D(lambda^k)")
        if trace.D_star_ref is not None:
            ax.axhline(trace.D_star_ref, color="k", ls="--", alpha=0.7,
                       label="D* reference")
        ax.set_xlabel("dual iteration k")
        ax.set_ylabel("dual value")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def write_summary(path, lines):
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    return Path(path)
