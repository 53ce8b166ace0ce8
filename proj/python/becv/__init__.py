"""Bidirectional learned video codec."""

from ._becv import (
    CodecError,
    DecodeError,
    Profile,
    decode,
    encode,
    format_plan,
    plan,
    psnr,
)

__all__ = ["CodecError", "DecodeError", "Profile", "decode", "encode", "format_plan", "plan", "psnr"]
