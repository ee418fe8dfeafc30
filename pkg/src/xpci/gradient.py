"""Angular-transmission (rocking-curve / grating) phase-gradient imaging.

A sample placed in an analyser- or grating-based system attenuates,
refracts and scatters the beam; the working point on the system's
angular transmission curve converts the refraction angle into intensity.
Forward models: the geometric (first-order Taylor) approximation
I = I0*a0*T(theta0 - shift), its scattering generalisation integrating
over an angular kernel, and the convolution model I(theta) = I0(theta)
convolved with the sample kernel. Retrievals: the two-image flank method
solving the linearised system pixelwise, and Fourier-domain regularised
deconvolution with kernel moments (transmitted fraction, refraction
shift, scattering width).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from .errors import ValidationError

__all__ = [
    "RockingCurve",
    "AngularKernel",
    "DeiResult",
    "KernelRetrieval",
    "geometric_forward",
    "scatter_forward",
    "dei_two_image",
    "convolution_forward",
    "deconvolution_retrieve",
]


@dataclass(frozen=True)
class RockingCurve:
    """Sampled angular transmission T(theta) with piecewise-cubic evaluation.

    theta samples must be strictly increasing, transmissions within
    [0, 1]. Evaluation outside the sampled range extrapolates flat from
    the end values, unless ``periodic`` (grating-style curves), in which
    case theta wraps modulo the sampled span.
    """

    theta: np.ndarray
    t: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64)
        tv = np.asarray(self.t, dtype=np.float64)
        if th.ndim != 1 or th.shape != tv.shape or th.size < 2:
            raise ValidationError("rocking curve needs matching 1D theta/t arrays, >= 2 samples")
        if np.any(np.diff(th) <= 0):
            raise ValidationError("theta samples must be strictly increasing")
        if np.any(tv < 0) or np.any(tv > 1):
            raise ValidationError("transmission values must lie in [0, 1]")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "t", tv)
        interp = PchipInterpolator(th, tv, extrapolate=True)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_deriv", interp.derivative())

    @property
    def support(self) -> tuple[float, float]:
        return float(self.theta[0]), float(self.theta[-1])

    def _fold(self, angle):
        angle = np.asarray(angle, dtype=np.float64)
        lo, hi = self.support
        if self.periodic:
            return lo + np.mod(angle - lo, hi - lo)
        return np.clip(angle, lo, hi)

    def __call__(self, angle):
        out = self._interp(self._fold(angle))
        return float(out) if np.ndim(out) == 0 else out

    def slope(self, angle):
        """dT/dtheta at the given angle(s); zero in the flat-extrapolated region."""
        angle = np.asarray(angle, dtype=np.float64)
        folded = self._fold(angle)
        out = self._deriv(folded)
        if not self.periodic:
            lo, hi = self.support
            out = np.where((angle < lo) | (angle > hi), 0.0, out)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AngularKernel:
    """Per-pixel sample action on the angular axis.

    attenuation is the transmitted fraction a0 in [0, 1], shift the
    refraction angle, width the standard deviation of the normalised
    scattering density (zero for a pure attenuate-and-refract sample).
    attenuation and shift may be arrays (pixel maps); width is scalar.
    """

    attenuation: float | np.ndarray
    shift: float | np.ndarray
    width: float = 0.0
    shape: str = "gaussian"

    def __post_init__(self):
        a = np.asarray(self.attenuation, dtype=np.float64)
        if np.any(a < 0) or np.any(a > 1):
            raise ValidationError("attenuation must lie in [0, 1]")
        if self.width < 0:
            raise ValidationError("scattering width must be nonnegative")
        if self.shape != "gaussian":
            raise ValidationError(f"unsupported kernel shape {self.shape!r}")

    def density(self, u: np.ndarray) -> np.ndarray:
        """Normalised zero-mean scattering density evaluated at angle offsets u."""
        if self.width == 0:
            raise ValidationError("a zero-width kernel has no density (Dirac limit)")
        w = self.width
        return np.exp(-(u * u) / (2.0 * w * w)) / (np.sqrt(2.0 * np.pi) * w)


class DeiResult(NamedTuple):
    attenuation: np.ndarray
    shift: np.ndarray
    valid: np.ndarray


class KernelRetrieval(NamedTuple):
    offsets: np.ndarray
    kernel: np.ndarray
    attenuation: float
    shift: float
    width: float


def _warn_if_extrapolating(curve: RockingCurve, angle) -> None:
    if curve.periodic:
        return
    lo, hi = curve.support
    angle = np.asarray(angle)
    if np.any(angle < lo) or np.any(angle > hi):
        warnings.warn(
            "working angle falls outside the sampled rocking curve; "
            "flat extrapolation in effect",
            RuntimeWarning,
            stacklevel=3,
        )


def geometric_forward(i0, curve: RockingCurve, theta0: float, kern: AngularKernel):
    """First-order forward model I = I0 * a0 * T(theta0 - shift).

    Any scattering width on the kernel is ignored; this is the
    zero-width (pure refraction) limit of scatter_forward.
    """
    angle = theta0 - np.asarray(kern.shift, dtype=np.float64)
    _warn_if_extrapolating(curve, angle)
    out = np.asarray(i0, dtype=np.float64) * np.asarray(kern.attenuation) * curve(angle)
    return float(out) if np.ndim(out) == 0 else out


def scatter_forward(
    i0,
    curve: RockingCurve,
    theta0: float,
    kern: AngularKernel,
    quadrature_points: int = 257,
):
    """Second-order forward model integrating the scattering density.

    I = I0 * a0 * integral T(theta0 - shift - u) f(u) du over the kernel
    density f. Reduces to geometric_forward as width -> 0.
    """
    if kern.width == 0.0:
        return geometric_forward(i0, curve, theta0, kern)
    half_span = 6.0 * kern.width
    u = np.linspace(-half_span, half_span, quadrature_points)
    weights = kern.density(u)
    weights = weights / trapezoid(weights, u)  # unit mass on the truncated support
    angle = theta0 - np.asarray(kern.shift, dtype=np.float64)
    _warn_if_extrapolating(curve, angle)
    samples = curve(angle[..., np.newaxis] - u)
    integral = trapezoid(samples * weights, u, axis=-1)
    out = np.asarray(i0, dtype=np.float64) * np.asarray(kern.attenuation) * integral
    return float(out) if np.ndim(out) == 0 else out


def dei_two_image(
    i_lo,
    i_hi,
    curve: RockingCurve,
    theta_lo: float,
    theta_hi: float,
    i0: float = 1.0,
) -> DeiResult:
    """Two-image flank retrieval of (transmitted fraction, refraction shift).

    Linearises the curve at the two working points (opposite flanks) and
    solves I_m = I0*a0*[T(theta_m) - T'(theta_m)*shift] pixelwise.
    Pixels where the solve degenerates (nonpositive or nonfinite
    transmitted fraction) are flagged invalid.
    """
    t_lo, t_hi = curve(theta_lo), curve(theta_hi)
    s_lo, s_hi = curve.slope(theta_lo), curve.slope(theta_hi)
    if s_lo == 0.0 or s_hi == 0.0 or np.sign(s_lo) == np.sign(s_hi):
        raise ValidationError(
            "working points must sit on opposite flanks with nonzero slopes "
            f"(slopes {s_lo:.3g}, {s_hi:.3g})"
        )
    det = t_hi * s_lo - t_lo * s_hi
    y_lo = np.asarray(i_lo, dtype=np.float64) / i0
    y_hi = np.asarray(i_hi, dtype=np.float64) / i0
    y_lo, y_hi = np.broadcast_arrays(y_lo, y_hi)
    if abs(det) < 1e-300:
        flat = np.zeros(y_lo.shape)
        return DeiResult(flat, flat, np.zeros(y_lo.shape, dtype=bool))
    a0 = (s_lo * y_hi - s_hi * y_lo) / det
    v = (t_lo * y_hi - t_hi * y_lo) / det
    valid = np.isfinite(a0) & (a0 > 0)
    shift = np.where(valid, v / np.where(valid, a0, 1.0), 0.0)
    return DeiResult(a0, shift, valid)


def _kernel_weights(kern: AngularKernel, dtheta: float) -> np.ndarray:
    """Discrete unit-mass kernel weights on a symmetric offset lattice."""
    shift = float(np.asarray(kern.shift))
    if kern.width == 0.0:
        half = int(np.ceil(abs(shift) / dtheta)) + 1
        weights = np.zeros(2 * half + 1)
        pos = shift / dtheta
        lo = int(np.floor(pos))
        frac = pos - lo
        weights[half + lo] = 1.0 - frac
        if frac:
            weights[half + lo + 1] = frac
        return weights
    half = int(np.ceil((6.0 * kern.width + abs(shift)) / dtheta)) + 2
    offsets = np.arange(-half, half + 1) * dtheta
    weights = kern.density(offsets - shift) * dtheta
    return weights / weights.sum()


def convolution_forward(thetas: np.ndarray, reference: np.ndarray, kern: AngularKernel) -> np.ndarray:
    """Angular scan through a sample: I(theta) = a0 * (I0 * S)(theta).

    ``reference`` is the no-sample scan I0 sampled on the uniform theta
    grid; the kernel is discretised on the same pitch (a zero-width
    kernel becomes a linearly split delta, preserving mass and mean).
    Values beyond the scan are treated as zero, so curves should decay
    within the window.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if thetas.ndim != 1 or thetas.shape != reference.shape:
        raise ValidationError("thetas and reference must be matching 1D arrays")
    steps = np.diff(thetas)
    if thetas.size < 2 or np.any(steps <= 0):
        raise ValidationError("thetas must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValidationError("convolution_forward requires uniform theta sampling")
    scalar_a0 = float(np.asarray(kern.attenuation))
    weights = scalar_a0 * _kernel_weights(kern, float(steps[0]))
    return np.convolve(reference, weights, mode="same")


def deconvolution_retrieve(
    thetas: np.ndarray,
    measured: np.ndarray,
    reference: np.ndarray,
    regularization: float | None = None,
) -> KernelRetrieval:
    """Estimate the sample kernel S(theta) from measured and reference scans.

    Fourier-domain regularised deconvolution, S = IFFT[ R* M / (|R|^2 +
    reg) ], with reg defaulting to 1e-3 * max|R|^2. The retrieval
    products are the kernel's moments: transmitted fraction (0th),
    refraction shift (1st), scattering width (root of the 2nd central
    moment). Moments are read off the kernel's characteristic function
    at the lowest frequencies, where the reference spectrum is strongest;
    real-space moment sums would be dominated by deconvolution ringing
    at frequencies the reference cannot probe.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    measured = np.asarray(measured, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if thetas.ndim != 1 or thetas.shape != measured.shape or thetas.shape != reference.shape:
        raise ValidationError("thetas, measured and reference must be matching 1D arrays")
    if thetas.size < 8:
        raise ValidationError("need at least 8 angular samples to deconvolve")
    steps = np.diff(thetas)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValidationError("thetas must be strictly increasing and uniform")
    if not np.any(reference):
        raise ValidationError("reference scan is identically zero")
    dtheta = float(steps[0])

    ref_spectrum = np.fft.fft(reference)
    if regularization is None:
        regularization = 1e-3 * float(np.max(np.abs(ref_spectrum)) ** 2)
    if regularization < 0:
        raise ValidationError("regularization must be nonnegative")
    kernel_spectrum = (
        np.conj(ref_spectrum) * np.fft.fft(measured) / (np.abs(ref_spectrum) ** 2 + regularization)
    )
    weights = np.fft.ifft(kernel_spectrum).real

    n = thetas.size
    offsets = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / (n * dtheta)))
    a0 = float(kernel_spectrum[0].real)
    if a0 <= 0.0:
        return KernelRetrieval(offsets, np.fft.fftshift(weights) / dtheta, a0, 0.0, 0.0)
    # cumulants from the characteristic function at the first frequency bin:
    # S(k1) = a0 * exp(-i*mean*k1 - var*k1^2/2 + ...), exact for Gaussian kernels
    k1 = 2.0 * np.pi / (n * dtheta)
    first = complex(kernel_spectrum[1])
    mean = float(-np.angle(first / a0) / k1)
    magnitude = min(abs(first) / a0, 1.0)
    var = -2.0 * np.log(magnitude) / (k1 * k1) if magnitude > 0 else 0.0
    return KernelRetrieval(
        offsets, np.fft.fftshift(weights) / dtheta, a0, mean, float(np.sqrt(max(var, 0.0)))
    )
