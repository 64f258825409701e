# network/serialize.py
import json
from typing import Any, Dict

import numpy as np

from geometry.primitives import ConvexDomain, Curve
from network.model import Network, TopologyTag
from utils.errors import ScenarioError

SCHEMA_VERSION = 1


def network_to_dict(network: Network) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "curves": [
            {"id": int(cid), "closed": bool(c.closed), "nodes": [[float(x), float(y)] for x, y in c.nodes]}
            for cid, c in zip(network.curve_ids, network.curves)
        ],
        "junctions": [[[i.curve, i.end.value] for i in j.incident] for j in network.junctions],
        "endpoints": [[e.incident.curve, e.incident.end.value] for e in network.endpoints],
        "domain": None if network.domain is None else {
            "boundary": network.domain.boundary.tolist(),
            "anchors": [list(a) for a in network.domain.anchors],
        },
        "topology": None if network.topology is None else network.topology.value,
    }


def network_from_dict(data: Dict[str, Any]) -> Network:
    try:
        version = int(data.get("schema_version", SCHEMA_VERSION))
        if version != SCHEMA_VERSION:
            raise ScenarioError(f"network schema_version {version} is not supported", field="schema_version")
        curves = [Curve(nodes=np.asarray(c["nodes"], dtype=float), closed=bool(c.get("closed", False)))
                  for c in data["curves"]]
        ids = [int(c.get("id", k)) for k, c in enumerate(data["curves"])]
        domain = None
        if data.get("domain"):
            domain = ConvexDomain(boundary=np.asarray(data["domain"]["boundary"], dtype=float),
                                  anchors=tuple(np.asarray(a, dtype=float) for a in data["domain"].get("anchors", [])))
        topology = TopologyTag(data["topology"]) if data.get("topology") else None
        return Network.assemble(curves, data.get("junctions", []), data.get("endpoints", []),
                                domain=domain, topology=topology, curve_ids=ids)
    except KeyError as e:
        raise ScenarioError(f"network is missing field {e}", field=str(e)) from e


def dumps_network(network: Network) -> str:
    return json.dumps(network_to_dict(network), sort_keys=True)


def loads_network(text: str) -> Network:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"network JSON does not parse: {e.msg}", line=e.lineno) from e
    return network_from_dict(data)
