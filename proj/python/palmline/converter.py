"""Pre-trained weight conversion into PTWT containers.

Source checkpoints are not parsed here: callers hand in already loaded arrays
(or an .npz archive on the command line) plus a source-to-target name map.
Target layouts are [O, C/groups, kh, kw] for convolutions and [O, D] for dense
layers, with fc6 inputs flattened as [channel, row, col].
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Mapping

import numpy as np

from ._core import DEFAULT_MEAN_RGB, PalmlineError, Weights, extract_features, parameter_specs, read_image


class ConversionError(RuntimeError):
    """Raised with the error kind as the leading word of the message."""


def target_names(model: str) -> list[str]:
    return [name for name, _ in parameter_specs(model)]


def fc6_from_hwc(weight: np.ndarray, channels: int, side: int) -> np.ndarray:
    """Reorders fc6 columns from [row, col, channel] to [channel, row, col] flattening."""
    out_dim = weight.shape[0]
    if weight.shape[1] != channels * side * side:
        raise ConversionError(f"ShapeMismatch: fc6.weight has {weight.shape[1]} inputs, expected {channels * side * side}")
    return np.ascontiguousarray(weight.reshape(out_dim, side, side, channels).transpose(0, 3, 1, 2).reshape(out_dim, -1))


def _fc6_input(model: str) -> tuple[int, int]:
    specs = dict(parameter_specs(model))
    last_conv = [name for name in specs if name.startswith("conv") and name.endswith(".weight")][-1]
    channels = specs[last_conv][0]
    side = int(round((specs["fc6.weight"][1] / channels) ** 0.5))
    return channels, side


def convert(model: str, source: Mapping[str, np.ndarray], name_map: Mapping[str, str] | None = None,
            fc6_layout: str = "chw", mean_rgb=DEFAULT_MEAN_RGB) -> Weights:
    """Builds a validated weight store for `model` from source arrays.

    `name_map` maps source names to target names; identity when omitted.
    """
    name_map = dict(name_map) if name_map is not None else {name: name for name in source}
    targets = list(name_map.values())
    if len(set(targets)) != len(targets):
        raise ConversionError("InvalidNameMap: several source tensors map to the same target")
    wanted = dict(parameter_specs(model))
    by_target = {target: src for src, target in name_map.items()}
    extra = sorted(set(targets) - set(wanted))
    if extra:
        raise ConversionError(f"InvalidNameMap: unknown target names {extra}")

    store = Weights()
    for name, dims in wanted.items():
        src = by_target.get(name)
        if src is None or src not in source:
            raise ConversionError(f"MissingSourceTensor: nothing maps to {name}")
        array = np.asarray(source[src], dtype=np.float32)
        if name == "fc6.weight" and fc6_layout == "hwc":
            array = fc6_from_hwc(array, *_fc6_input(model))
        if list(array.shape) != list(dims):
            raise ConversionError(f"ShapeMismatch: {name} has shape {list(array.shape)}, expected {list(dims)}")
        store.insert(name, array)
    store.insert("meta.mean_rgb", np.asarray(mean_rgb, dtype=np.float32))
    store.validate(model)
    return store


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ConversionError(f"ShapeMismatch: {a.size} vs {b.size} values")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ConversionError("NotComparable: a feature vector has zero norm")
    return float(a @ b / (na * nb))


def verify(model: str, weights: Weights, probe: np.ndarray, reference: np.ndarray, layer: str = "fc6") -> float:
    """Cosine similarity between the engine's feature for `probe` and a reference activation."""
    return cosine_similarity(extract_features(weights, probe, model=model, layer=layer), reference)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="palmline-convert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convert", help="Write a PTWT container from an .npz of source arrays")
    conv.add_argument("--model", required=True, choices=["alexnet", "vgg16", "vgg19"])
    conv.add_argument("--src", required=True, help=".npz archive of source tensors")
    conv.add_argument("--out", required=True, help="PTWT output path")
    conv.add_argument("--name-map", help="JSON object mapping source names to target names")
    conv.add_argument("--fc6-layout", choices=["chw", "hwc"], default="chw", help="Flattening order of fc6 inputs in the source")

    ver = sub.add_parser("verify", help="Compare engine features with a reference activation")
    ver.add_argument("--model", required=True, choices=["alexnet", "vgg16", "vgg19"])
    ver.add_argument("--weights", required=True, help="PTWT container")
    ver.add_argument("--probe", required=True, help="Probe ROI image (PNG/JPEG)")
    ver.add_argument("--reference", required=True, help="CSV of reference activations")
    ver.add_argument("--layer", choices=["fc6", "fc7"], default="fc6")
    ver.add_argument("--threshold", type=float, default=0.99)

    args = parser.parse_args(argv)
    try:
        if args.command == "convert":
            with np.load(args.src) as archive:
                source = {name: archive[name] for name in archive.files}
            name_map = json.loads(open(args.name_map, encoding="utf-8").read()) if args.name_map else None
            store = convert(args.model, source, name_map, args.fc6_layout)
            store.save(args.out)
            print(f"wrote {len(store)} tensors to {args.out}")
            return 0
        reference = np.loadtxt(args.reference, delimiter=",", dtype=np.float64, ndmin=1).ravel()
        similarity = verify(args.model, Weights.load(args.weights), read_image(args.probe), reference, args.layer)
        print(f"cosine similarity {similarity:.6f}")
        return 0 if similarity >= args.threshold else 1
    except (ConversionError, PalmlineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
