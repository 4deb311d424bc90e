"""Persistent redundancy region: page checksums, parity stripes, meta-checksum.

Pages are grouped into static stripes of consecutive data pages plus one
parity page held in a separate region. A trailing partial stripe behaves
as if padded with zero pages. The meta-checksum covers the checksum array
only (serialized little-endian in page order), not the parity pages.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .crc import crc32c, crc32c_pages

REGION_MAGIC = b"VLRR"
REGION_VERSION = 1


@dataclass(frozen=True)
class StripeConfig:
    data_pages_per_stripe: int = 4
    pages_per_stripe: int = 5

    def __post_init__(self):
        if self.data_pages_per_stripe < 1:
            raise ValueError("a stripe needs at least one data page")
        if self.pages_per_stripe != self.data_pages_per_stripe + 1:
            raise ValueError("pages_per_stripe must be data_pages_per_stripe + 1")

    def stripe_of(self, page: int) -> int:
        return page // self.data_pages_per_stripe

    def num_stripes(self, num_pages: int) -> int:
        d = self.data_pages_per_stripe
        return (num_pages + d - 1) // d

    def stripe_pages(self, stripe: int, num_pages: int) -> range:
        """Data pages of a stripe; the last stripe may be short."""
        d = self.data_pages_per_stripe
        lo = stripe * d
        return range(lo, min(lo + d, num_pages))


def compute_page_checksum(page_bytes) -> int:
    """CRC-32C of one page."""
    return crc32c(page_bytes)


def compute_parity(stripe_data_pages) -> np.ndarray:
    """Byte-wise XOR of a stripe's data pages."""
    pages = np.asarray(stripe_data_pages, dtype=np.uint8)
    if pages.ndim != 2:
        raise ValueError("expected a sequence of equal-length pages")
    return np.bitwise_xor.reduce(pages, axis=0)


class RedundancyRegion:
    """checksums[i] per data page, parity[s] per stripe, one meta-checksum."""

    def __init__(self, num_pages: int, page_size: int, stripe: StripeConfig):
        if num_pages < 1:
            raise ValueError("num_pages must be >= 1")
        self.num_pages = num_pages
        self.page_size = page_size
        self.stripe = stripe
        self.checksums = np.zeros(num_pages, dtype=np.uint32)
        self.parity = np.zeros((stripe.num_stripes(num_pages), page_size), dtype=np.uint8)
        self.meta_checksum = 0

    def compute_meta_checksum(self) -> int:
        """CRC-32C over the checksum array, little-endian, page order."""
        le = self.checksums if self.checksums.dtype.byteorder in ("<", "=") else \
            self.checksums.astype("<u4")
        return crc32c(np.ascontiguousarray(le, dtype="<u4").tobytes())

    def refresh_meta_checksum(self) -> int:
        self.meta_checksum = self.compute_meta_checksum()
        return self.meta_checksum

    def meta_checksum_ok(self) -> bool:
        return self.meta_checksum == self.compute_meta_checksum()

    def stripe_parity(self, stripe: int, data: np.ndarray) -> np.ndarray:
        """Fresh parity for one stripe read directly from the page array."""
        pages = self.stripe.stripe_pages(stripe, self.num_pages)
        return np.bitwise_xor.reduce(data[pages.start:pages.stop], axis=0)

    def reconstruct_page(self, page: int, data: np.ndarray) -> np.ndarray:
        """Rebuild one data page from parity XOR its stripe siblings."""
        s = self.stripe.stripe_of(page)
        out = self.parity[s].copy()
        for sibling in self.stripe.stripe_pages(s, self.num_pages):
            if sibling != page:
                out ^= data[sibling]
        return out

    def init_from_store(self, data: np.ndarray) -> None:
        """Bring the whole region up to date (new-file initialization)."""
        self.checksums[:] = crc32c_pages(data)
        for s in range(self.parity.shape[0]):
            self.parity[s] = self.stripe_parity(s, data)
        self.refresh_meta_checksum()

    # -- consistency checks (used by verification and the battery path) ------

    def checksum_mismatches(self, data: np.ndarray) -> np.ndarray:
        return np.flatnonzero(crc32c_pages(data) != self.checksums)

    def parity_mismatches(self, data: np.ndarray) -> list[int]:
        return [
            s for s in range(self.parity.shape[0])
            if not np.array_equal(self.parity[s], self.stripe_parity(s, data))
        ]

    # -- flat-file persistence ------------------------------------------------

    def save(self, path) -> None:
        header = REGION_MAGIC + struct.pack(
            "<IQI", REGION_VERSION, self.num_pages, self.stripe.pages_per_stripe
        )
        with open(path, "wb") as f:
            f.write(header)
            f.write(np.ascontiguousarray(self.checksums, dtype="<u4").tobytes())
            f.write(self.parity.tobytes())
            f.write(struct.pack("<I", self.meta_checksum))

    @classmethod
    def load(cls, path, page_size: int) -> "RedundancyRegion":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != REGION_MAGIC:
                raise ValueError(f"bad magic {magic!r}")
            version, num_pages, pps = struct.unpack("<IQI", f.read(16))
            if version != REGION_VERSION:
                raise ValueError(f"unsupported region version {version}")
            stripe = StripeConfig(data_pages_per_stripe=pps - 1, pages_per_stripe=pps)
            region = cls(num_pages, page_size, stripe)
            region.checksums[:] = np.frombuffer(f.read(4 * num_pages), dtype="<u4")
            nstripes = stripe.num_stripes(num_pages)
            raw = f.read(nstripes * page_size)
            region.parity[:] = np.frombuffer(raw, dtype=np.uint8).reshape(nstripes, page_size)
            (region.meta_checksum,) = struct.unpack("<I", f.read(4))
        return region
