"""Command-line front end.

One executable with subcommands mapping onto the library operations:

propagate | transmit | multislice | tie | retrieve-paganin |
retrieve-schiske | coherence | gradient | tomo-forward | tomo-recon |
validity

Inputs and outputs use the raster format of :mod:`xpci.fileio` (volumes
as .npz, rocking curves as two-column text). Every writing command also
emits ``<output>.manifest.json`` recording the command line, input
hashes, seed, toolkit version and wall time, so any output can be
regenerated from its manifest. Exit codes: 0 success, 2 validation
failure, 3 numerical failure. The environment variable ``XPCI_THREADS``
is exported to the numeric libraries' thread-count variables at startup
(best effort; the toolkit's own loops are single-threaded and
deterministic).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .field import ComplexField, IntensityImage, PhaseMap, compose_field, extract_intensity
from .fileio import (
    GenericMap,
    load_volume,
    read_raster,
    read_rocking_curve,
    write_raster,
    write_rocking_curve,
)
from .gradient import AngularKernel, RockingCurve, convolution_forward, deconvolution_retrieve
from .propagation import FreeSpace, fresnel_propagate
from .retrieval import RetrievalConfig, paganin_retrieve, schiske_combine
from .sample import (
    Material,
    apply_sample,
    fresnel_number,
    multislice,
    project,
    sphere_phantom,
    transmission_function,
)
from .tie import tie_forward, tie_terms
from .tomo import fbp_reconstruct, forward_sinogram, paganin_fbp


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(output_base: str, args: argparse.Namespace, inputs: list[str], outputs: list[str], started: float) -> None:
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "inputs": {p: _sha256_file(p) for p in inputs if os.path.exists(p)},
        "seed": getattr(args, "seed", None),
        "toolkit_version": __version__,
        "wall_time_s": time.time() - started,
        "outputs": outputs,
    }
    with open(output_base + ".manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=1, sort_keys=True)
        handle.write("\n")


def _raster_paths(base: str) -> list[str]:
    return [base + ".raw", base + ".json"]


def _cmd_validity(args) -> int:
    check = fresnel_number(args.a_m, args.t_m, args.lambda_m, args.magnification)
    print(f"N_F = {check.n_f:.6g}")
    print(f"verdict: {check.verdict}")
    return 0


def _cmd_propagate(args) -> int:
    started = time.time()
    field = read_raster(args.input)
    if not isinstance(field, ComplexField):
        raise ValidationError("propagate expects a complex_field raster")
    out = fresnel_propagate(field, args.distance_m, pad=args.pad)
    base = write_raster(args.output, out, seed=args.seed)
    _write_manifest(base, args, _raster_paths(args.input if args.input.endswith(".raw") else args.input), _raster_paths(base), started)
    return 0


def _cmd_transmit(args) -> int:
    started = time.time()
    field = read_raster(args.input)
    if not isinstance(field, ComplexField):
        raise ValidationError("transmit expects a complex_field raster")
    inputs = _raster_paths(args.input)
    if args.volume:
        volume = load_volume(args.volume)
        transmission = transmission_function(project(volume, field.wavelength))
        inputs.append(args.volume)
    elif args.sphere_diameter_m is not None:
        material = Material(args.delta, args.beta, field.wavelength)
        transmission = transmission_function(
            sphere_phantom(field.grid, args.sphere_diameter_m, material)
        )
    else:
        raise ValidationError("transmit needs --volume or --sphere-diameter-m with --delta/--beta")
    out = apply_sample(field, transmission)
    base = write_raster(args.output, out, seed=args.seed)
    _write_manifest(base, args, inputs, _raster_paths(base), started)
    return 0


def _cmd_multislice(args) -> int:
    started = time.time()
    field = read_raster(args.input)
    if not isinstance(field, ComplexField):
        raise ValidationError("multislice expects a complex_field raster")
    volume = load_volume(args.volume)
    out = multislice(field, volume)
    base = write_raster(args.output, out, seed=args.seed)
    _write_manifest(base, args, _raster_paths(args.input) + [args.volume], _raster_paths(base), started)
    return 0


def _cmd_tie(args) -> int:
    started = time.time()
    intensity = read_raster(args.intensity)
    phase = read_raster(args.phase)
    if not isinstance(intensity, IntensityImage) or not isinstance(phase, PhaseMap):
        raise ValidationError("tie expects an intensity raster and a phase raster")
    k = 2.0 * np.pi / args.lambda_m
    out = tie_forward(intensity, phase, k, args.delta_z_m, method=args.method)
    base = write_raster(args.output, out, seed=args.seed)
    outputs = _raster_paths(base)
    if args.terms_output:
        terms = tie_terms(intensity, phase, k, method=args.method)
        terms_base = write_raster(args.terms_output, GenericMap(intensity.grid, terms.dIdz))
        outputs += _raster_paths(terms_base)
    _write_manifest(base, args, _raster_paths(args.intensity) + _raster_paths(args.phase), outputs, started)
    return 0


def _cmd_retrieve_paganin(args) -> int:
    started = time.time()
    image = read_raster(args.input)
    if not isinstance(image, IntensityImage):
        raise ValidationError("retrieve-paganin expects an intensity raster")
    cfg = RetrievalConfig(
        delta=args.delta,
        mu=args.mu_per_m,
        distance=args.distance_m,
        wavelength=args.lambda_m,
        flat_field=args.flat_field,
    )
    thickness = paganin_retrieve(image, cfg)
    base = write_raster(args.output, GenericMap(image.grid, thickness), seed=args.seed, modality="thickness_m")
    _write_manifest(base, args, _raster_paths(args.input), _raster_paths(base), started)
    return 0


def _cmd_retrieve_schiske(args) -> int:
    started = time.time()
    if len(args.inputs) != len(args.distances_m):
        raise ValidationError("need one --distances-m entry per input field")
    fields = []
    inputs = []
    for path in args.inputs:
        field = read_raster(path)
        if not isinstance(field, ComplexField):
            raise ValidationError(f"{path} is not a complex_field raster")
        fields.append(field)
        inputs += _raster_paths(path)
    systems = [FreeSpace(d) for d in args.distances_m]
    out = schiske_combine(fields, systems, regularization=args.reg)
    base = write_raster(args.output, out, seed=args.seed)
    _write_manifest(base, args, inputs, _raster_paths(base), started)
    return 0


def _cmd_coherence(args) -> int:
    from .config import load_config
    from .pipelines import run_pipeline, sphere_sweep

    started = time.time()
    cfg = load_config(args.config)
    prefix = cfg.output_prefix
    os.makedirs(os.path.dirname(os.path.abspath(prefix)), exist_ok=True)
    outputs = []

    if cfg.sweep is not None:
        lam = cfg.spectrum[0]["wavelength_m"]
        material = Material(cfg.sweep["delta"], cfg.sweep["beta"], lam)
        cells = sphere_sweep(
            cfg.grid,
            cfg.sweep["diameter_m"],
            material,
            tuple(cfg.sweep["source_diameters_m"]),
            tuple(cfg.sweep["distances_m"]),
            cfg.sweep["r1_m"],
        )
        detections = []
        for i, cell in enumerate(cells):
            base = write_raster(f"{prefix}_sweep{i:02d}", cell.image, seed=cfg.seed)
            outputs += _raster_paths(base)
            detections.append(
                {
                    "source_diameter_m": cell.source_diameter,
                    "distance_m": cell.distance,
                    "fringe_detected": cell.fringe_detected,
                    "raster": base,
                }
            )
        with open(prefix + "_detections.json", "w", encoding="utf-8") as handle:
            json.dump(detections, handle, indent=1)
            handle.write("\n")
        outputs.append(prefix + "_detections.json")
    elif cfg.tomography is not None:
        # a tomography block makes the run a tomographic experiment; the
        # per-projection imaging (plane-wave illumination, propagation)
        # happens inside forward_sinogram
        spec = cfg.tomography
        volume = load_volume(cfg.sample["path"])
        lam = cfg.spectrum[0]["wavelength_m"]
        angles = np.arange(spec["n_angles"]) * np.pi / spec["n_angles"]
        sino = forward_sinogram(
            volume,
            angles,
            spec["modality"],
            lam,
            distance=spec.get("distance_m"),
            noise_counts=spec.get("noise_counts"),
            seed=cfg.seed,
        )
        base = write_raster(prefix + "_sinogram", sino, seed=cfg.seed)
        outputs += _raster_paths(base)
        if spec.get("paganin", False):
            ret = cfg.retrieval or {}
            rcfg = RetrievalConfig(
                delta=ret.get("delta", 0.0),
                mu=ret.get("mu_per_m", 1.0),
                distance=spec.get("distance_m", 0.0),
                wavelength=lam,
                flat_field=ret.get("flat_field", 1.0),
            )
            recon = paganin_fbp(sino, rcfg, output=spec.get("quantity", "mu"))
        else:
            recon = fbp_reconstruct(sino)
        base = write_raster(
            prefix + "_slice",
            GenericMap(recon.grid, recon.values),
            seed=cfg.seed,
            modality=spec.get("quantity", "mu"),
        )
        outputs += _raster_paths(base)
    else:
        result = run_pipeline(cfg)
        for j, density in enumerate(result.spectral_densities):
            base = write_raster(f"{prefix}_bin{j:02d}_s", density, seed=cfg.seed)
            outputs += _raster_paths(base)
        base = write_raster(prefix + "_detected", result.detected, seed=cfg.seed)
        outputs += _raster_paths(base)

        if cfg.retrieval is not None:
            spec = cfg.retrieval
            rcfg = RetrievalConfig(
                delta=spec["delta"],
                mu=spec["mu_per_m"],
                distance=spec["distance_m"],
                wavelength=cfg.spectrum[0]["wavelength_m"],
                flat_field=spec.get("flat_field", 1.0),
                regularization=spec.get("regularization", 0.0),
            )
            thickness = paganin_retrieve(result.detected, rcfg)
            base = write_raster(
                prefix + "_thickness",
                GenericMap(cfg.grid, thickness),
                seed=cfg.seed,
                modality="thickness_m",
            )
            outputs += _raster_paths(base)

    args.seed = cfg.seed
    _write_manifest(prefix, args, [args.config], outputs, started)
    return 0


def _cmd_gradient(args) -> int:
    started = time.time()
    if args.mode == "forward":
        curve = read_rocking_curve(args.reference)
        kern = AngularKernel(args.a0, args.shift_rad, args.width_rad)
        out = convolution_forward(curve.theta, curve.t, kern)
        write_rocking_curve(args.output, RockingCurve(curve.theta, np.clip(out, 0.0, 1.0)))
        _write_manifest(args.output, args, [args.reference], [args.output], started)
        return 0
    reference = read_rocking_curve(args.reference)
    measured = read_rocking_curve(args.measured)
    if reference.theta.shape != measured.theta.shape or np.any(reference.theta != measured.theta):
        raise ValidationError("reference and measured scans must share one theta grid")
    result = deconvolution_retrieve(reference.theta, measured.t, reference.t, regularization=args.reg)
    print(f"a0 = {result.attenuation:.6g}")
    print(f"shift_rad = {result.shift:.6g}")
    print(f"width_rad = {result.width:.6g}")
    if args.output:
        data = np.column_stack([result.offsets, result.kernel])
        header = "# retrieved kernel: offset_rad  density\n"
        body = "\n".join(f"{o:.17g} {v:.17g}" for o, v in data) + "\n"
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(header + body)
        _write_manifest(args.output, args, [args.reference, args.measured], [args.output], started)
    return 0


def _cmd_tomo_forward(args) -> int:
    started = time.time()
    volume = load_volume(args.volume)
    angles = np.arange(args.n_angles) * np.pi / args.n_angles
    sino = forward_sinogram(
        volume,
        angles,
        args.modality,
        args.lambda_m,
        distance=args.distance_m,
        noise_counts=args.noise_counts,
        seed=args.seed,
    )
    base = write_raster(args.output, sino, seed=args.seed)
    _write_manifest(base, args, [args.volume], _raster_paths(base), started)
    return 0


def _cmd_tomo_recon(args) -> int:
    started = time.time()
    sino = read_raster(args.input)
    if args.paganin:
        cfg = RetrievalConfig(
            delta=args.delta,
            mu=args.mu_per_m,
            distance=sino.distance if sino.distance is not None else 0.0,
            wavelength=sino.wavelength,
            flat_field=args.flat_field,
        )
        recon = paganin_fbp(sino, cfg, output=args.quantity, apodization=args.apodization)
    else:
        recon = fbp_reconstruct(sino, apodization=args.apodization)
    if isinstance(recon, list):
        raise ValidationError("tomo-recon writes single slices; reconstruct stacked sinograms via the API")
    base = write_raster(args.output, GenericMap(recon.grid, recon.values), seed=args.seed, modality=args.quantity)
    _write_manifest(base, args, _raster_paths(args.input), _raster_paths(base), started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xpci",
        description="X-ray phase-contrast simulation and inversion toolkit",
    )
    parser.add_argument("--version", action="version", version=f"xpci {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validity", help="projection-approximation Fresnel-number check")
    p.add_argument("--a_m", type=float, required=True, help="feature/resolution scale (m)")
    p.add_argument("--t_m", type=float, required=True, help="thickness or distance (m)")
    p.add_argument("--lambda_m", type=float, required=True, help="wavelength (m)")
    p.add_argument("--magnification", type=float, default=1.0)
    p.set_defaults(func=_cmd_validity)

    p = sub.add_parser("propagate", help="Fresnel free-space propagation of a field raster")
    p.add_argument("--input", required=True)
    p.add_argument("--distance_m", type=float, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--pad", action="store_true", help="zero-pad by 2x during the transform")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("transmit", help="apply a sample transmission to a field raster")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--volume", help="refractive volume .npz (projection approximation)")
    p.add_argument("--sphere-diameter-m", dest="sphere_diameter_m", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_transmit)

    p = sub.add_parser("multislice", help="multi-slice propagation through a thick volume")
    p.add_argument("--input", required=True)
    p.add_argument("--volume", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_multislice)

    p = sub.add_parser("tie", help="transport-of-intensity finite-distance forward model")
    p.add_argument("--intensity", required=True)
    p.add_argument("--phase", required=True)
    p.add_argument("--lambda_m", type=float, required=True)
    p.add_argument("--delta_z_m", type=float, required=True)
    p.add_argument("--method", choices=("spectral", "fd"), default="spectral")
    p.add_argument("--output", required=True)
    p.add_argument("--terms-output", dest="terms_output")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_tie)

    p = sub.add_parser("retrieve-paganin", help="single-image single-material thickness retrieval")
    p.add_argument("--input", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mu_per_m", type=float, required=True)
    p.add_argument("--distance_m", type=float, required=True)
    p.add_argument("--lambda_m", type=float, required=True)
    p.add_argument("--flat-field", dest="flat_field", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_retrieve_paganin)

    p = sub.add_parser("retrieve-schiske", help="multi-image field recovery (free-space states)")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--distances-m", dest="distances_m", nargs="+", type=float, required=True)
    p.add_argument("--reg", type=float, default=0.0)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_retrieve_schiske)

    p = sub.add_parser("coherence", help="run a partial-coherence pipeline config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_coherence)

    p = sub.add_parser("gradient", help="rocking-curve convolution forward / deconvolution retrieval")
    p.add_argument("--mode", choices=("forward", "retrieve"), required=True)
    p.add_argument("--reference", required=True, help="reference scan, two-column text")
    p.add_argument("--measured", help="measured scan (retrieve mode)")
    p.add_argument("--a0", type=float, default=1.0)
    p.add_argument("--shift_rad", type=float, default=0.0)
    p.add_argument("--width_rad", type=float, default=0.0)
    p.add_argument("--reg", type=float, default=None)
    p.add_argument("--output")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_gradient)

    p = sub.add_parser("tomo-forward", help="forward-project a volume into a sinogram")
    p.add_argument("--volume", required=True)
    p.add_argument("--n-angles", dest="n_angles", type=int, required=True)
    p.add_argument("--modality", choices=("attenuation_log", "phase", "propagated_intensity"), required=True)
    p.add_argument("--lambda_m", type=float, required=True)
    p.add_argument("--distance_m", type=float, default=None)
    p.add_argument("--noise-counts", dest="noise_counts", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_tomo_forward)

    p = sub.add_parser("tomo-recon", help="filtered back-projection (optionally Paganin-filtered)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--paganin", action="store_true")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mu_per_m", type=float, default=1.0)
    p.add_argument("--flat-field", dest="flat_field", type=float, default=1.0)
    p.add_argument("--quantity", choices=("mu", "delta"), default="mu")
    p.add_argument("--apodization", choices=("none", "hann"), default="none")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_tomo_recon)

    return parser


def main(argv: list[str] | None = None) -> int:
    threads = os.environ.get("XPCI_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
