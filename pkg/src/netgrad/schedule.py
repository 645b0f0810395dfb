"""Weight schedules: the step-size, consensus, and annealing-noise sequences.

Each schedule is an immutable law k -> value, positive and finite for every
k >= 0 and non-increasing (except the constant law, which may be zero to
disable a term). The same laws evaluate at real arguments for the
continuous-time flows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POWER = "power"
EXPONENTIAL = "exponential"
EXP_SQRT = "exp-sqrt"
ANNEALING = "annealing"
CONSTANT = "constant"

# smallest offset with log(log(k0)) > 0; e^e ~ 15.15
MIN_ANNEALING_OFFSET = 16


@dataclass(frozen=True)
class Schedule:
    """One weight law. Use the module factories rather than the constructor."""

    law: str
    c: float
    tau: float = 0.0   # power only
    r: float = 0.0     # exponential / exp-sqrt only
    k0: int = 0        # power / annealing only

    def eval_array(self, ks) -> np.ndarray:
        """Evaluate the law at an array of (integer or real) indices >= 0."""
        ks = np.asarray(ks, dtype=np.float64)
        if np.any(ks < 0):
            raise ValueError("schedule index must be >= 0")
        if self.law == POWER:
            return self.c * (ks + self.k0) ** (-self.tau)
        if self.law == EXPONENTIAL:
            return self.c * self.r ** ks
        if self.law == EXP_SQRT:
            return self.c * self.r ** np.sqrt(ks)
        if self.law == ANNEALING:
            shifted = ks + self.k0
            return self.c * (shifted * np.log(np.log(shifted))) ** -0.5
        if self.law == CONSTANT:
            return np.full_like(ks, self.c)
        raise ValueError(f"unknown law {self.law!r}")

    def eval(self, k) -> float:
        return float(self.eval_array(np.asarray([k]))[0])

    @property
    def is_zero(self) -> bool:
        return self.law == CONSTANT and self.c == 0.0

    def describe(self) -> str:
        if self.law == POWER:
            return f"power(c={self.c!r}, tau={self.tau!r}, k0={self.k0})"
        if self.law in (EXPONENTIAL, EXP_SQRT):
            return f"{self.law}(c={self.c!r}, r={self.r!r})"
        if self.law == ANNEALING:
            return f"annealing(c={self.c!r}, k0={self.k0})"
        return f"constant({self.c!r})"


def power(c: float, tau: float, k0: int = 1) -> Schedule:
    """c * (k + k0)^(-tau). Offset k0 >= 1 keeps the value finite at k = 0."""
    if c <= 0:
        raise ValueError("power law needs c > 0")
    if tau < 0:
        raise ValueError("power law needs tau >= 0 to be non-increasing")
    if k0 < 1:
        raise ValueError("power law needs offset k0 >= 1")
    return Schedule(POWER, float(c), tau=float(tau), k0=int(k0))


def exponential(c: float, r: float) -> Schedule:
    """c * r^k with 0 < r <= 1."""
    if c <= 0:
        raise ValueError("exponential law needs c > 0")
    if not 0 < r <= 1:
        raise ValueError("exponential law needs r in (0, 1]")
    return Schedule(EXPONENTIAL, float(c), r=float(r))


def exp_sqrt(c: float, r: float) -> Schedule:
    """c * r^sqrt(k) with 0 < r <= 1."""
    if c <= 0:
        raise ValueError("exp-sqrt law needs c > 0")
    if not 0 < r <= 1:
        raise ValueError("exp-sqrt law needs r in (0, 1]")
    return Schedule(EXP_SQRT, float(c), r=float(r))


def annealing(c: float, k0: int = MIN_ANNEALING_OFFSET) -> Schedule:
    """c * ((k + k0) * log(log(k + k0)))^(-1/2), natural logs."""
    if c <= 0:
        raise ValueError("annealing law needs c > 0")
    if k0 < MIN_ANNEALING_OFFSET:
        raise ValueError(f"annealing law needs offset k0 >= {MIN_ANNEALING_OFFSET}")
    return Schedule(ANNEALING, float(c), k0=int(k0))


def constant(c: float) -> Schedule:
    """The constant law; c = 0 disables the term it weights."""
    if c < 0:
        raise ValueError("constant law needs c >= 0")
    return Schedule(CONSTANT, float(c))


@dataclass(frozen=True)
class WeightTriple:
    """Step-size (alpha), consensus (beta), and annealing (gamma) schedules."""

    alpha: Schedule
    beta: Schedule
    gamma: Schedule = field(default_factory=lambda: constant(0.0))

    def __post_init__(self):
        if self.alpha.is_zero:
            raise ValueError("alpha must not be identically zero")
        if self.alpha.law == POWER and self.beta.law == POWER:
            if not self.beta.tau < self.alpha.tau:
                raise ValueError(
                    "power-law weights need the consensus exponent below the "
                    f"step-size exponent, got tau_beta={self.beta.tau} >= tau_alpha={self.alpha.tau}"
                )

    def describe(self) -> str:
        return (f"alpha={self.alpha.describe()}, beta={self.beta.describe()}, "
                f"gamma={self.gamma.describe()}")


@dataclass
class ValidationReport:
    """Outcome of a schedule check: hard failures and advisory warnings."""

    ok: bool = True
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def fail(self, message: str, permissive: bool = False):
        if permissive:
            self.warnings.append(message)
        else:
            self.ok = False
            self.errors.append(message)

    def warn(self, message: str):
        self.warnings.append(message)

    def merge(self, other: "ValidationReport"):
        self.ok = self.ok and other.ok
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)


def validate_dsgd(w: WeightTriple, permissive: bool = False,
                  max_degree: int | None = None) -> ValidationReport:
    """Check a triple against the local-minimum convergence regime.

    Pass requires alpha = power with tau in (1/2, 1], beta a power law with a
    smaller exponent or a constant, and gamma identically zero. In permissive
    mode every failure is downgraded to a warning (experimental schedules such
    as exponential step sizes are then allowed through).
    """
    report = ValidationReport()
    if w.alpha.law != POWER:
        report.fail(f"step size should be a power law, got {w.alpha.describe()}", permissive)
    elif not 0.5 < w.alpha.tau <= 1.0:
        report.fail(
            f"step-size exponent must lie in (1/2, 1], got tau_alpha={w.alpha.tau}", permissive)
    if w.beta.law == POWER:
        if w.alpha.law == POWER and not w.beta.tau < w.alpha.tau:
            report.fail(
                f"consensus exponent must be below the step-size exponent, "
                f"got tau_beta={w.beta.tau}", permissive)
    elif w.beta.law == CONSTANT:
        if w.beta.c == 0:
            report.fail("consensus weight is identically zero", permissive)
        elif max_degree and w.beta.c >= 1.0 / (2.0 * max_degree):
            report.warn(
                f"constant consensus weight {w.beta.c} is not small relative to the "
                f"graph degree (threshold 1/(2*{max_degree})); contraction is not guaranteed")
    else:
        report.fail(f"consensus weight should be a power law or constant, "
                    f"got {w.beta.describe()}", permissive)
    if not w.gamma.is_zero:
        report.fail(f"annealing must be disabled for plain descent, got "
                    f"gamma={w.gamma.describe()}", permissive)
    return report


def validate_annealing(w: WeightTriple, ratio_floor: float = 0.0,
                       distributed: bool = True) -> ValidationReport:
    """Check a triple against the global-optimization annealing regime.

    Pass requires alpha = power(c_alpha, 1), gamma the annealing law, and the
    constant ratio (c_gamma^2 / c_alpha in the distributed case, c_gamma /
    c_alpha otherwise) above ``ratio_floor``. The floor is configuration: the
    threshold constant the theory compares against is not computable here, so
    the default floor 0 makes the ratio check advisory.
    """
    report = ValidationReport()
    if w.alpha.law != POWER or w.alpha.tau != 1.0:
        report.fail(f"annealing regime needs alpha = power(c, 1), got {w.alpha.describe()}")
    if w.gamma.law != ANNEALING:
        report.fail(f"annealing regime needs the annealing gamma law, got {w.gamma.describe()}")
    if report.ok:
        if distributed:
            ratio = w.gamma.c ** 2 / w.alpha.c
            name = "c_gamma^2/c_alpha"
        else:
            ratio = w.gamma.c / w.alpha.c
            name = "c_gamma/c_alpha"
        if ratio <= ratio_floor:
            report.fail(f"{name} = {ratio:g} does not exceed the floor {ratio_floor:g}")
    return report
