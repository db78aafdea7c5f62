import json
import wave
from pathlib import Path

import numpy as np
import pytest

from bsdextract import (
    DimsMismatch,
    ExtractError,
    MissingModelAssets,
    extract_directory,
    register_backend,
    resolve_backend,
)
from bsdextract.cli import main
from bsdextract.extract import read_standardized_wav


def write_wav(path: Path, samples: np.ndarray, rate=44100, channels=1, width=2):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(samples.astype("<i2").tobytes())


def write_manifest(path: Path, sound_ids, feature_sets=()):
    lines = [json.dumps({
        "kind": "manifest-header", "taxonomy_version": "1.0",
        "feature_set_ids": list(feature_sets),
    })]
    for sid in sound_ids:
        lines.append(json.dumps({
            "sound_id": sid, "second_label": "animals", "duration_s": 1.0,
            "split": "unassigned",
        }))
    path.write_text("\n".join(lines) + "\n")


class DeterministicClipBackend:
    """Clip-level test backend: simple moment statistics tiled to `dims`."""

    checkpoint_id = "test-clip-v1"

    def __init__(self, dims):
        self.dims = dims

    def embed(self, samples, sample_rate):
        stats = np.array([samples.mean(), samples.std(), np.abs(samples).max()])
        return np.resize(stats, (1, self.dims))


class FrameBackend:
    checkpoint_id = "test-frames-v1"

    def __init__(self, dims):
        self.dims = dims

    def embed(self, samples, sample_rate):
        n = max(1, len(samples) // sample_rate)
        return np.resize(samples[: n * self.dims], (n, self.dims))


@pytest.fixture()
def audio_dir(tmp_path):
    d = tmp_path / "audio"
    d.mkdir()
    rng = np.random.default_rng(0)
    for sid in ("snd001", "snd002", "snd003"):
        write_wav(d / f"{sid}.wav", (rng.normal(scale=8000, size=44100)).astype(np.int64))
    return d


class TestReadStandardizedWav:
    def test_reads_mono_44k(self, audio_dir):
        samples = read_standardized_wav(audio_dir / "snd001.wav")
        assert samples.dtype == np.float32
        assert len(samples) == 44100

    def test_rejects_unstandardized(self, tmp_path):
        write_wav(tmp_path / "x.wav", np.zeros(100), rate=48000)
        with pytest.raises(ExtractError, match="standardized"):
            read_standardized_wav(tmp_path / "x.wav")

    def test_rejects_empty(self, tmp_path):
        write_wav(tmp_path / "x.wav", np.zeros(0))
        with pytest.raises(ExtractError, match="zero-length"):
            read_standardized_wav(tmp_path / "x.wav")


class TestExtractDirectory:
    def test_clap_shape_and_round_trip(self, audio_dir, tmp_path):
        register_backend("clap", lambda: DeterministicClipBackend(512))
        out = tmp_path / "features" / "clap"
        result = extract_directory("clap", audio_dir, out)
        assert result.written == ["snd001", "snd002", "snd003"]
        assert result.checkpoint_id == "test-clip-v1"

        # emitted files round-trip bit-exactly through the classifier's reader
        from broadsound import fvec

        matrix = fvec.read(out / "snd001.fvec")
        assert matrix.shape == (1, 512)
        backend = DeterministicClipBackend(512)
        want = backend.embed(read_standardized_wav(audio_dir / "snd001.wav"), 44100)
        assert np.array_equal(matrix, want.astype(np.float32))

    def test_vggish_multi_frame(self, audio_dir, tmp_path):
        register_backend("vggish", lambda: FrameBackend(128))
        out = tmp_path / "vggish"
        extract_directory("vggish", audio_dir, out)
        from broadsound import fvec

        matrix = fvec.read(out / "snd002.fvec")
        assert matrix.shape[1] == 128
        assert matrix.shape[0] >= 1

    def test_silent_clip_is_finite(self, tmp_path):
        d = tmp_path / "audio"
        d.mkdir()
        write_wav(d / "silent.wav", np.zeros(44100))
        register_backend("clap", lambda: DeterministicClipBackend(512))
        out = tmp_path / "out"
        extract_directory("clap", d, out)
        from broadsound import fvec

        assert np.all(np.isfinite(fvec.read(out / "silent.fvec")))

    def test_dims_mismatch_is_hard_failure(self, audio_dir, tmp_path):
        register_backend("clap", lambda: DeterministicClipBackend(100))
        with pytest.raises(DimsMismatch, match=r"expected \(n, 512\)"):
            extract_directory("clap", audio_dir, tmp_path / "out")

    def test_clip_level_kind_rejects_frames(self, audio_dir, tmp_path):
        class MultiFrameBackend:
            checkpoint_id = "frames"

            def embed(self, samples, sample_rate):
                return np.zeros((3, 512))

        register_backend("clap", lambda: MultiFrameBackend())
        with pytest.raises(DimsMismatch, match="clip-level"):
            extract_directory("clap", audio_dir, tmp_path / "out")

    def test_non_finite_backend_output_rejected(self, audio_dir, tmp_path):
        class NanBackend:
            checkpoint_id = "bad"

            def embed(self, samples, sample_rate):
                return np.full((1, 512), np.nan)

        register_backend("clap", lambda: NanBackend())
        with pytest.raises(ExtractError, match="non-finite"):
            extract_directory("clap", audio_dir, tmp_path / "out")

    def test_manifest_feature_set_updated_and_records_untouched(self, audio_dir, tmp_path):
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, ["snd001", "snd002", "snd003"], feature_sets=["clap"])
        before_records = manifest.read_text().splitlines()[1:]
        register_backend("vggish", lambda: FrameBackend(128))
        extract_directory("vggish", audio_dir, tmp_path / "out", manifest)
        lines = manifest.read_text().splitlines()
        header = json.loads(lines[0])
        assert header["feature_set_ids"] == ["clap", "vggish"]
        assert lines[1:] == before_records

    def test_sounds_missing_from_manifest_rejected(self, audio_dir, tmp_path):
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, ["snd001"])
        register_backend("clap", lambda: DeterministicClipBackend(512))
        with pytest.raises(ExtractError, match="not in the manifest"):
            extract_directory("clap", audio_dir, tmp_path / "out", manifest)

    def test_extract_meta_records_checkpoint(self, audio_dir, tmp_path):
        register_backend("clap", lambda: DeterministicClipBackend(512))
        out = tmp_path / "out"
        extract_directory("clap", audio_dir, out)
        meta = json.loads((out / "extract_meta.json").read_text())
        assert meta == {"kind": "clap", "checkpoint_id": "test-clip-v1", "count": 3}

    def test_unknown_kind(self, audio_dir, tmp_path):
        with pytest.raises(ExtractError, match="unknown kind"):
            extract_directory("mfcc", audio_dir, tmp_path / "out")

    def test_empty_input_dir(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(ExtractError, match="no .wav"):
            extract_directory("clap", tmp_path / "empty", tmp_path / "out")


class TestBackendRegistry:
    def test_missing_assets_message(self):
        register_backend("fsdsinet", __import__("bsdextract.backends", fromlist=["x"])._fsdsinet_factory)
        with pytest.raises(MissingModelAssets, match="fsd-sinet"):
            resolve_backend("fsdsinet")

    def test_unregistered_kind(self):
        with pytest.raises(MissingModelAssets, match="no backend"):
            resolve_backend("nonexistent")


class TestCli:
    def test_extract_command(self, audio_dir, tmp_path, capsys):
        register_backend("clap", lambda: DeterministicClipBackend(512))
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, ["snd001", "snd002", "snd003"])
        rc = main([
            "extract", "--kind", "clap", "--in", str(audio_dir),
            "--out", str(tmp_path / "features" / "clap"), "--manifest", str(manifest),
        ])
        assert rc == 0
        assert "extracted 3 clap feature files" in capsys.readouterr().out
        header = json.loads(manifest.read_text().splitlines()[0])
        assert "clap" in header["feature_set_ids"]

    def test_missing_assets_is_clean_error(self, audio_dir, tmp_path, capsys):
        import bsdextract.backends as backends

        register_backend("fssimrep", backends._fssimrep_factory)
        rc = main([
            "extract", "--kind", "fssimrep", "--in", str(audio_dir),
            "--out", str(tmp_path / "out"),
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err
