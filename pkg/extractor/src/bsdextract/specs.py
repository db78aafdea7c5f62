"""Expected output geometry per extractor kind."""

from dataclasses import dataclass


@dataclass(frozen=True)
class ExtractorSpec:
    kind: str
    dims: int
    clip_level: bool  # one vector per clip vs one per frame


EXTRACTOR_SPECS = {
    "vggish": ExtractorSpec("vggish", dims=128, clip_level=False),
    "fsdsinet": ExtractorSpec("fsdsinet", dims=512, clip_level=False),
    "clap": ExtractorSpec("clap", dims=512, clip_level=True),
    "fssimrep": ExtractorSpec("fssimrep", dims=846, clip_level=True),
}
