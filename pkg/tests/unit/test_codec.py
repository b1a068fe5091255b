"""
Codec configuration and bitstream container tests.
"""

import struct
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.codec import LAMBDAS, Bitstream, get_preset, lambda_index, parse, serialize
from src.codec.bitstream import MAGIC
from src.utils.errors import ConfigError, FormatError


class TestPresets:
    """Preset resolution"""

    def test_ccs_preset(self):
        cfg = get_preset("ccs-y128-uv64", lambda_id=2)
        assert (cfg.n_y, cfg.n_uv, cfg.conditional) == (128, 64, True)
        assert cfg.lam == 0.015
        assert cfg.m_uv == 192
        assert cfg.uv_in_channels == 3

    def test_nc_preset(self):
        cfg = get_preset("NC-Y128-UV64")
        assert not cfg.conditional
        assert cfg.m_uv == 64
        assert cfg.uv_in_channels == 2

    def test_micro_preset_pattern(self):
        cfg = get_preset("ccs-y8-uv4")
        assert (cfg.n_y, cfg.n_uv) == (8, 4)

    def test_baseline(self):
        cfg = get_preset("baseline-192")
        assert cfg.rgb_baseline and cfg.n_y == 192

    def test_options(self):
        cfg = get_preset("ccs-y8-uv8", options={"mixtures": 3, "prior_support": 16, "workers": 4})
        assert cfg.mixtures == 3 and cfg.prior_support == 16

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            get_preset("ccs-y128")

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            get_preset("ccs-y8-uv8", lambda_id=4)
        with pytest.raises(ConfigError):
            get_preset("ccs-y8-uv8", options={"mixtures": 4})
        with pytest.raises(ConfigError):
            get_preset("ccs-y8-uv8", options={"mixtures": 2, "table_mode": "scale_table"})

    def test_lambda_index(self):
        assert [lambda_index(lam) for lam in LAMBDAS] == [0, 1, 2, 3]
        with pytest.raises(ConfigError):
            lambda_index(0.01)


def _stream(**changes):
    fields = dict(width=256, height=128, n_y=128, n_uv=64, lambda_id=1, conditional=True,
                  z_y=b"\x01\x02", y_y=b"abc" * 10, z_uv=b"", y_uv=b"\xff" * 7)
    fields.update(changes)
    return Bitstream(**fields)


class TestBitstream:
    """Container serialization"""

    def test_round_trip(self):
        bs = _stream()
        parsed = parse(serialize(bs))
        assert parsed == bs
        assert parsed.output_size == (256, 128)

    def test_padded_round_trip(self):
        bs = _stream(original_size=(250, 100))
        data = serialize(bs)
        parsed = parse(data)
        assert parsed.padded and parsed.output_size == (250, 100)
        assert data[5] & 0x02

    def test_header_layout(self):
        data = serialize(_stream(conditional=False))
        assert data[:4] == MAGIC
        magic, version, flags, width, height, n_y, n_uv, lam = struct.unpack_from("<4sBBIIHHB", data)
        assert (version, flags, width, height, n_y, n_uv, lam) == (1, 0, 256, 128, 128, 64, 1)

    def test_substream_bits(self):
        assert _stream().substream_bits() == {"z_y": 16, "y_y": 240, "z_uv": 0, "y_uv": 56}

    def test_bad_magic(self):
        data = bytearray(serialize(_stream()))
        data[:4] = b"XXXX"
        with pytest.raises(FormatError):
            parse(bytes(data))

    def test_truncated(self):
        data = serialize(_stream())
        for cut in (3, 15, len(data) - 1):
            with pytest.raises(FormatError):
                parse(data[:cut])

    def test_trailing_bytes(self):
        with pytest.raises(FormatError):
            parse(serialize(_stream()) + b"\x00")

    def test_unknown_flags(self):
        data = bytearray(serialize(_stream()))
        data[5] |= 0x80
        with pytest.raises(FormatError):
            parse(bytes(data))

    def test_lambda_out_of_range(self):
        data = bytearray(serialize(_stream()))
        data[18] = 9
        with pytest.raises(FormatError):
            parse(bytes(data))

    def test_original_larger_than_coded(self):
        with pytest.raises(FormatError):
            parse(serialize(_stream(original_size=(300, 100))))

    def test_field_overflow(self):
        with pytest.raises(FormatError):
            serialize(_stream(n_y=70000))
