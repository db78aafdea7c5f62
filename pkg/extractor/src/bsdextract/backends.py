"""Model backends.

A backend is any object with an ``embed(samples, sample_rate)`` method
returning an (n, dims) float array and a ``checkpoint_id`` string that
ends up in the extraction run metadata. The built-in factories wrap the
published models when their libraries and weights are installed;
otherwise they raise :class:`MissingModelAssets` with an install hint.
Custom or test backends can be injected with :func:`register_backend`.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class MissingModelAssets(RuntimeError):
    """The backend's library or checkpoint is not available."""


_REGISTRY: dict[str, Callable[[], object]] = {}


def register_backend(kind: str, factory: Callable[[], object]) -> None:
    _REGISTRY[kind] = factory


def available_backends() -> list[str]:
    return sorted(_REGISTRY)


def resolve_backend(kind: str):
    try:
        factory = _REGISTRY[kind]
    except KeyError:
        raise MissingModelAssets(f"no backend registered for kind {kind!r}") from None
    return factory()


# ---- built-in wrappers ------------------------------------------------------


def _vggish_factory():
    try:
        import tensorflow_hub  # noqa: F401
    except ImportError as exc:
        raise MissingModelAssets(
            "vggish backend needs tensorflow_hub and the published vggish "
            "checkpoint (pip install tensorflow tensorflow_hub)"
        ) from exc
    import tensorflow_hub as hub

    model = hub.load("https://tfhub.dev/google/vggish/1")

    class VggishBackend:
        checkpoint_id = "tfhub.dev/google/vggish/1"

        def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
            # vggish consumes 16 kHz mono floats; naive decimation is fine
            # because input audio is already band-limited by standardization
            step = max(1, round(sample_rate / 16000))
            out = model(samples[::step].astype(np.float32))
            return np.asarray(out)

    return VggishBackend()


def _clap_factory():
    try:
        import laion_clap  # noqa: F401
    except ImportError as exc:
        raise MissingModelAssets(
            "clap backend needs the laion_clap package and its checkpoint "
            "(pip install laion_clap)"
        ) from exc
    import laion_clap

    model = laion_clap.CLAP_Module(enable_fusion=False)
    model.load_ckpt()

    class ClapBackend:
        checkpoint_id = "laion_clap:630k-audioset-best"

        def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
            vec = model.get_audio_embedding_from_data(
                x=samples[None, :].astype(np.float32), use_tensor=False
            )
            return np.asarray(vec).reshape(1, -1)

    return ClapBackend()


def _fsdsinet_factory():
    raise MissingModelAssets(
        "fsdsinet backend needs the published fsd-sinet-vgg42 model files; "
        "register a backend wrapping them with register_backend('fsdsinet', ...)"
    )


def _fssimrep_factory():
    raise MissingModelAssets(
        "fssimrep needs essentia's FreesoundExtractor plus the 846-stat "
        "aggregation used by your deployment; wrap it and install with "
        "register_backend('fssimrep', ...)"
    )


register_backend("vggish", _vggish_factory)
register_backend("clap", _clap_factory)
register_backend("fsdsinet", _fsdsinet_factory)
register_backend("fssimrep", _fssimrep_factory)
