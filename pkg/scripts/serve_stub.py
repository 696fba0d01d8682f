#!/usr/bin/env python3
"""Run the checkout service with a scripted identifier (no trained model).

Useful for driving the operator console and API integration tests: frames
whose mean intensity is bright identify confidently, mid-gray frames come
back rejected with a top-5 list, and near-black frames raise NoObject.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np
import uvicorn

from arc.dataset import Catalog, CatalogItem
from arc.errors import NoObject
from arc.service import CheckoutService, create_app

DEMO_CATALOG = Catalog(
    currency="USD",
    items=(
        CatalogItem(0, "soap", "bar soap", 1250),
        CatalogItem(1, "tea", "green tea 50g", 330),
        CatalogItem(2, "rice", "basmati rice 1kg", 990),
        CatalogItem(3, "milk", "milk 1L", 240),
        CatalogItem(4, "beans", "canned beans", 410),
    ),
)


def scripted_identifier(frame: np.ndarray) -> np.ndarray:
    k = len(DEMO_CATALOG)
    mean = float(frame.mean())
    if mean < 32:
        raise NoObject("nothing on the belt")
    if mean < 128:
        probs = np.full(k, 1.0 / k)  # undecided: operator must pick
        return probs
    winner = int(mean) % k
    probs = np.full(k, 0.02 / (k - 1))
    probs[winner] = 0.98
    return probs


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8711)
    parser.add_argument("--tau", type=float, default=0.5)
    parser.add_argument("--persist", default=None)
    args = parser.parse_args()

    service = CheckoutService(DEMO_CATALOG, scripted_identifier, tau=args.tau, persist_path=args.persist)
    uvicorn.run(create_app(service), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
