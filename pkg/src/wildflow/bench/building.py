"""Synthetic smart buildings served as one-hop Linked Data.

Each building lives on its own LDPServer. Rooms, lights, switches and a
clock are members of the ``building/`` container; every device links to
its writeable state resource (``<device>/state``), whose triples are also
embedded in the device's own representation so one GET shows the current
value. Only ``brick:hasLocation`` is stated; ``brick:isLocationOf`` comes
from the inverse-property rule and the declaration in ``INVERSES``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..ldp import LDPServer
from ..rdf import BRICK, OWL, SOSA, SSN, IRI, Graph, Literal, Triple, RDF_TYPE, integer
from ..turtle import parse_turtle

INVERSES = parse_turtle(f"""
<{BRICK}hasLocation> <{OWL}inverseOf> <{BRICK}isLocationOf> .
<{BRICK}hasPart> <{OWL}inverseOf> <{BRICK}isPartOf> .
""")

HAS_VALUE = IRI(SSN + "hasValue")
HAS_PROPERTY = IRI(SSN + "hasProperty")
HAS_LOCATION = IRI(BRICK + "hasLocation")
IS_LOCATION_OF = IRI(BRICK + "isLocationOf")
IS_PART_OF = IRI(BRICK + "isPartOf")


@dataclass(frozen=True)
class BuildingSpec:
    buildings: int = 1
    rooms: int = 2
    lights: int = 1  # per room
    switches: int = 1  # per room
    base: str = "http://b{n}.example.org/"
    hour: int = 10

    def __post_init__(self):
        for name in ("buildings", "rooms", "lights", "switches"):
            if getattr(self, name) < (1 if name in ("buildings", "rooms") else 0):
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lights < 1:
            raise ValueError("each room needs at least one light")


@dataclass
class Building:
    index: int
    server: LDPServer
    container: str
    instances: str
    models: str
    rooms: list = field(default_factory=list)
    lights: list = field(default_factory=list)  # (room, light) pairs
    switches: list = field(default_factory=list)
    clock: str = ""

    @property
    def base(self) -> str:
        return self.server.base

    @property
    def seeds(self) -> list[str]:
        return [self.instances, self.container]

    def state(self, device: str) -> str:
        return device + "/state"

    def device_states(self) -> dict[str, str]:
        """Current ssn:hasValue of every device state resource, keyed by path."""
        out = {}
        for _, device in self.lights + self.switches:
            res = self.server.resources[self.state(device)]
            value = res.graph.value(IRI(self.state(device)), HAS_VALUE)
            out[device[len(self.base):]] = value.lexical if value is not None else None
        return out


def _device(b: Building, room: str, path: str, kind: str, value: str) -> str:
    server = b.server
    iri = server.iri(path)
    state = iri + "/state"
    server.load(state, Graph([Triple(IRI(state), HAS_VALUE, Literal(value))]))
    server.load(path, Graph([
        Triple(IRI(iri), RDF_TYPE, IRI(BRICK + kind)),
        Triple(IRI(iri), HAS_LOCATION, IRI(room)),
        Triple(IRI(iri), HAS_PROPERTY, IRI(state)),
    ]), embeds=[state])
    return iri


def generate(spec: BuildingSpec) -> list[Building]:
    """Mint and mount the resources of spec.buildings buildings."""
    out = []
    for n in range(1, spec.buildings + 1):
        server = LDPServer(spec.base.format(n=n), containers=("building/", "instances/", "models/"))
        b = Building(n, server, server.iri("building/"), server.iri("instances/"),
                     server.iri("models/"))
        site = IRI(server.iri("building/site"))
        server.load("building/site", Graph([Triple(site, RDF_TYPE, IRI(BRICK + "Building"))]))
        for r in range(1, spec.rooms + 1):
            room = server.iri(f"building/r{r}")
            server.load(f"building/r{r}", Graph([
                Triple(IRI(room), RDF_TYPE, IRI(BRICK + "Room")),
                Triple(IRI(room), IS_PART_OF, site),
            ]))
            b.rooms.append(room)
            for k in range(1, spec.lights + 1):
                b.lights.append((room, _device(b, room, f"building/r{r}-light{k}", "Luminaire", "off")))
            for k in range(1, spec.switches + 1):
                b.switches.append((room, _device(b, room, f"building/r{r}-switch{k}", "Switch", "off")))
        b.clock = server.iri("building/clock")
        server.load("building/clock", Graph([
            Triple(IRI(b.clock), RDF_TYPE, IRI(SOSA + "Observation")),
            Triple(IRI(b.clock), IRI(SOSA + "hasSimpleResult"), integer(spec.hour)),
        ]))
        out.append(b)
    return out
