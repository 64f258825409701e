# report/reporter.py
import json
import logging
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import polars as pl
import xxhash
from jinja2 import Template

from diagnostics.quantities import DiagnosticsSample
from network.model import Network
from report.report_modules import RunSummary, clean_json
from utils.errors import InvalidArgument

logger = logging.getLogger(__name__)

SVG_TEMPLATE = """<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" viewBox="{{ box }}" width="{{ size }}" height="{{ size }}">
<title>{{ title }}</title>
{%- if domain %}
<polygon class="domain" points="{{ domain }}" fill="none" stroke="#b0b0b0" stroke-width="{{ stroke }}"/>
{%- endif %}
{%- for c in curves %}
<path class="curve" data-id="{{ c.id }}" d="{{ c.d }}" fill="none" stroke="#1f3b73" stroke-width="{{ stroke }}"/>
{%- endfor %}
{%- for j in junctions %}
<circle class="junction" data-label="{{ j.label }}" cx="{{ j.x }}" cy="{{ j.y }}" r="{{ marker }}" fill="#c0392b"/>
{%- endfor %}
{%- for e in endpoints %}
<rect class="endpoint" data-label="{{ e.label }}" x="{{ e.x }}" y="{{ e.y }}" width="{{ marker2 }}" height="{{ marker2 }}" fill="#27ae60"/>
{%- endfor %}
</svg>
"""

HTML_TEMPLATE = """
<html>
<head><title>{{ summary.scenario }}</title>
<style>
body{font-family: Arial, sans-serif; margin: 20px;}
h1{color:#222}
table{border-collapse: collapse;}
th, td{border:1px solid #ddd; padding:6px;}
th{background:#f4f4f4;}
.code{font-family: monospace; background:#fafafa; padding:6px; display:block;}
</style>
</head>
<body>
<h1>{{ summary.scenario }}</h1>
<p>exit code {{ summary.exit_code }} ({{ summary.reason }}), final topology {{ summary.final_topology or "none" }}, t = {{ summary.t_final }}</p>
<h3>Transitions</h3>
<table><tr><th>t</th><th>kind</th><th>pre</th><th>post</th></tr>
{%- for tr in summary.transitions %}
<tr><td>{{ tr.t }}</td><td>{{ tr.kind }}</td><td>{{ tr.pre }}</td><td>{{ tr.post }}</td></tr>
{%- endfor %}
</table>
<h3>Snapshots</h3>
{%- for name in snapshots %}
<div><img src="{{ name }}" width="320"/><br/>{{ name }}</div>
{%- endfor %}
<h3>Summary</h3>
<pre class="code">{{ data | tojson(indent=2) }}</pre>
</body>
</html>
"""


def fmt(v: float, digits: int = 9) -> str:
    s = f"{float(v):.{digits}g}"
    return "0" if s == "-0" else s


def _write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the same directory so a failure leaves no partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def file_digest(path: str) -> str:
    h = xxhash.xxh64()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class ReportGenerator:
    def render_svg(self, network: Network, title: str = "network", size: int = 600) -> str:
        if not network.curves:
            raise InvalidArgument("cannot draw a network without curves")
        pts = network.all_nodes()
        if network.domain is not None:
            pts = np.vstack([pts, network.domain.boundary])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
        pad = 0.05 * span
        marker = 0.012 * span

        def xy(p) -> str:
            return f"{fmt(p[0])},{fmt(-p[1])}"

        curves = []
        for cid, c in zip(network.curve_ids, network.curves):
            d = "M" + " L".join(xy(p) for p in c.nodes)
            curves.append({"id": cid, "d": d + (" Z" if c.closed else "")})
        junctions = [{"label": j.label, "x": fmt(j.position[0]), "y": fmt(-j.position[1])} for j in network.junctions]
        endpoints = [{"label": e.label, "x": fmt(e.position[0] - marker), "y": fmt(-e.position[1] - marker)}
                     for e in network.endpoints]
        domain = None
        if network.domain is not None:
            domain = " ".join(xy(p) for p in network.domain.boundary)
        box = f"{fmt(lo[0] - pad)} {fmt(-hi[1] - pad)} {fmt(span + 2 * pad)} {fmt(span + 2 * pad)}"
        return Template(SVG_TEMPLATE).render(box=box, size=size, title=title, domain=domain, curves=curves,
                                             junctions=junctions, endpoints=endpoints, stroke=fmt(0.004 * span),
                                             marker=fmt(marker), marker2=fmt(2 * marker))

    def emit_snapshot(self, network: Network, path: str, title: str = "network") -> str:
        _write_atomic(path, self.render_svg(network, title))
        logger.debug("snapshot written to %s", path)
        return path

    def samples_frame(self, samples: Sequence[DiagnosticsSample]) -> pl.DataFrame:
        """One row per sample, every value preformatted with 12 significant digits."""
        n = max((len(s.L_i) for s in samples), default=0)
        k = max((len(s.A_i) for s in samples), default=0)
        p = max((len(s.theta) for s in samples), default=0)

        def cell(v: Optional[float]) -> Optional[str]:
            if v is None or not np.isfinite(v):
                return None
            return fmt(v, 12)

        def slot(values, i):
            return cell(values[i]) if i < len(values) else None

        columns: Dict[str, List[Optional[str]]] = {"t": [cell(s.t) for s in samples], "L": [cell(s.L) for s in samples]}
        for i in range(n):
            columns[f"L_{i + 1}"] = [slot(s.L_i, i) for s in samples]
        for i in range(k):
            columns[f"A_{i + 1}"] = [slot(s.A_i, i) for s in samples]
        columns["int_k2"] = [cell(s.int_k2) for s in samples]
        columns["max_abs_k"] = [cell(s.max_abs_k) for s in samples]
        columns["E"] = [cell(s.E) for s in samples]
        columns["Pi"] = [cell(s.Pi) for s in samples]
        for i in range(p):
            columns[f"Theta_{i + 1}"] = [slot(s.theta, i) for s in samples]
        return pl.DataFrame(columns, schema={name: pl.Utf8 for name in columns})

    def write_samples(self, samples: Sequence[DiagnosticsSample], path: str) -> str:
        _write_atomic(path, self.samples_frame(samples).write_csv())
        return path

    def write_events(self, records: Iterable[Dict[str, Any]], path: str) -> str:
        lines = [json.dumps(clean_json(r), sort_keys=True) for r in records]
        _write_atomic(path, "".join(line + "\n" for line in lines))
        return path

    def to_json(self, summary: RunSummary) -> str:
        return json.dumps(clean_json(summary.model_dump(mode="json")), sort_keys=True, indent=2)

    def write_summary(self, summary: RunSummary, path: str) -> str:
        _write_atomic(path, self.to_json(summary) + "\n")
        return path

    def render_html(self, summary: RunSummary, path: str, snapshots: Sequence[str] = ()) -> str:
        html = Template(HTML_TEMPLATE).render(summary=summary, snapshots=list(snapshots),
                                              data=clean_json(summary.model_dump(mode="json")))
        _write_atomic(path, html)
        return path
