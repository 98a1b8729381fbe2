"""
ADMM solver for the tensor-weighted second-order restoration model.

Each iteration solves four closed-form subproblems in a fixed order
(u_tilde, u, W, V) and then updates the multipliers s, d and b. The
isotropic second-order model is the special case of an identity tensor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List

import numpy as np

from ..errors import DimensionMismatchError, ParameterError, RestorationError
from .diffops import MatrixField, div2, hessian
from .grid import MaskField, ScalarField, as_field, full_mask, luminance
from .spectral import spectral_denominator, solve_u
from .tensor import DiffusionTensorField, TensorParams, build_diffusion_tensor

log = logging.getLogger(__name__)

TASKS = ("denoise", "inpaint")
CHANGE_FLOOR = 1e-12
SOLVE_TOLERANCE = 1e-8
# Hessian and tensor splits count as satisfied below this fraction of ||f||
CONSTRAINT_TOLERANCE = 1e-3

SOLVER_DEFAULT: Dict[str, Any] = {
    "eta": 20.0,
    "p": 2,
    "theta1": 100.0,
    "theta2": 10.0,
    "theta3": 10.0,
    "max_iter": 300,
    "tol": 1e-5,
    "refine_every": 10,
}

TENSOR_DEFAULT: Dict[str, Any] = {
    "sigma": 1.0,
    "rho": 2.0,
    "contrast": None,
    "gamma": 0.01,
    "mode": "edge",
}

# salt-and-pepper restoration is a denoise task with the l1 fidelity
TASK_DEFAULT: Dict[str, Dict[str, Any]] = {
    "denoise": {"solver": {}, "tensor": {"mode": "edge"}},
    "saltpepper": {
        "solver": {"p": 1, "eta": 2.0, "theta1": 10.0, "theta2": 1.0, "theta3": 1.0},
        "tensor": {"mode": "edge"},
    },
    "inpaint": {"solver": {"eta": 1000.0, "p": 2}, "tensor": {"mode": "coherence"}},
}


@dataclass(frozen=True)
class SolverParams:
    eta: float = 20.0
    p: int = 2
    theta1: float = 100.0
    theta2: float = 10.0
    theta3: float = 10.0
    max_iter: int = 300
    tol: float = 1e-5
    refine_every: int = 10
    tensor: TensorParams = field(default_factory=TensorParams)

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ParameterError(f"p must be 1 or 2 (got {self.p})")
        for name in ("eta", "theta1", "theta2", "theta3", "tol"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0 (got {getattr(self, name)})")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1 (got {self.max_iter})")
        if self.refine_every < 0:
            raise ParameterError(f"refine_every must be >= 0 (got {self.refine_every})")


def params_for_task(task: str, tensor: Dict[str, Any] | None = None, **overrides: Any) -> SolverParams:
    """Defaults for ``task`` (denoise, saltpepper or inpaint) with explicit overrides on top."""
    if task not in TASK_DEFAULT:
        raise ParameterError(f"unknown task {task!r}; expected one of {sorted(TASK_DEFAULT)}")
    preset = TASK_DEFAULT[task]
    tensor_args = {**TENSOR_DEFAULT, **preset["tensor"], **(tensor or {})}
    solver_args = {**SOLVER_DEFAULT, **preset["solver"], **overrides}
    return SolverParams(**solver_args, tensor=TensorParams(**tensor_args))


@dataclass(frozen=True)
class Problem:
    f: ScalarField
    mask: MaskField
    task: str = "denoise"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ParameterError(f"task must be one of {TASKS} (got {self.task!r})")
        if self.mask.shape != self.f.shape[:2]:
            raise DimensionMismatchError(f"mask is {self.mask.shape}, image is {self.f.shape[:2]}")
        if self.task == "denoise" and not self.mask.all():
            raise ParameterError("a denoising problem must have every pixel known")

    @classmethod
    def denoise(cls, f) -> "Problem":
        f = as_field(f, "f")
        return cls(f, full_mask(f.shape), "denoise")

    @classmethod
    def inpaint(cls, f, known: MaskField) -> "Problem":
        return cls(as_field(f, "f"), np.asarray(known, dtype=bool), "inpaint")

    def channel(self, c: int) -> "Problem":
        return replace(self, f=self.f[..., c])


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    hessian_residual: float
    tensor_residual: float
    split_residual: float
    relative_change: float
    energy: float


@dataclass
class AdmmState:
    u: ScalarField
    u_tilde: ScalarField
    s: ScalarField
    w: MatrixField
    v: MatrixField
    d: MatrixField
    b: MatrixField
    tensor: DiffusionTensorField
    iteration: int = 0
    history: List[IterationRecord] = field(default_factory=list)

    @classmethod
    def initial(cls, f: ScalarField, tensor: DiffusionTensorField, warm: bool = False) -> "AdmmState":
        """
        u = u_tilde = f and zero multipliers. ``warm`` also sets V to the
        Hessian of f and W to T V, so the first u-step returns f unchanged.
        """
        shape = f.shape
        v = hessian(f) if warm else MatrixField.zeros(shape)
        return cls(
            u=f.copy(),
            u_tilde=f.copy(),
            s=np.zeros(shape),
            w=tensor.apply(v) if warm else MatrixField.zeros(shape),
            v=v,
            d=MatrixField.zeros(shape),
            b=MatrixField.zeros(shape),
            tensor=tensor,
        )


def initial_fill(f: ScalarField, known: MaskField) -> ScalarField:
    """
    Starting guess for inpainting: each missing pixel is interpolated
    linearly between the nearest known pixels of its row. Rows with no
    known pixel are then interpolated along the columns.
    """
    if f.ndim == 3:
        return np.stack([initial_fill(f[..., c], known) for c in range(f.shape[2])], axis=-1)
    if known.all() or not known.any():
        return f.copy()
    m, n = f.shape
    filled = f.copy()
    cols = np.arange(n)
    covered = known.any(axis=1)
    for i in np.flatnonzero(covered):
        row = known[i]
        filled[i, ~row] = np.interp(cols[~row], cols[row], f[i, row])
    if not covered.all():
        rows = np.arange(m)
        for j in cols:
            filled[~covered, j] = np.interp(rows[~covered], rows[covered], filled[covered, j])
    return filled


def solve_u_tilde(
    f: ScalarField, u: ScalarField, s: ScalarField, mask: MaskField, eta: float, theta1: float, p: int
) -> ScalarField:
    known = mask.astype(np.float64)
    if p == 2:
        return (known * eta * f + theta1 * (u + s)) / (known * eta + theta1)
    psi = u + s - f
    return f + np.maximum(np.abs(psi) - known * eta / theta1, 0.0) * np.sign(psi)


def solve_w(tv_product: MatrixField, b: MatrixField, theta3: float) -> MatrixField:
    a = tv_product + b
    m = a.magnitude()
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(m > 0, np.maximum(m - 1.0 / theta3, 0.0) / m, 0.0)
    return a * factor


def solve_v(
    hess_u: MatrixField,
    d: MatrixField,
    w: MatrixField,
    b: MatrixField,
    tensor: DiffusionTensorField,
    theta2: float,
    theta3: float,
) -> MatrixField:
    """Pixelwise Cramer solve of (theta2 I + theta3 T^T T) V = theta2 (H + d) - theta3 T^T (b - W)."""
    t11, t12, t22 = tensor.t11, tensor.t12, tensor.t22
    t21 = t12
    q = b - w
    r11 = theta3 * (t11**2 + t21**2) + theta2
    r12 = theta3 * (t11 * t12 + t21 * t22)
    r22 = theta3 * (t12**2 + t22**2) + theta2
    det = r11 * r22 - r12 * r12
    if np.any(det < theta2**2 * (1.0 - 1e-12)):
        raise RestorationError("V-subproblem determinant fell below theta2^2")

    g1 = theta2 * (hess_u.p1 + d.p1) - theta3 * (t11 * q.p1 + t21 * q.p2)
    g2 = theta2 * (hess_u.p2 + d.p2) - theta3 * (t12 * q.p1 + t22 * q.p2)
    h1 = theta2 * (hess_u.p3 + d.p3) - theta3 * (t11 * q.p3 + t21 * q.p4)
    h2 = theta2 * (hess_u.p4 + d.p4) - theta3 * (t12 * q.p3 + t22 * q.p4)
    return MatrixField(
        (g1 * r22 - r12 * g2) / det,
        (r11 * g2 - r12 * g1) / det,
        (h1 * r22 - r12 * h2) / det,
        (r11 * h2 - r12 * h1) / det,
    )


def update_multipliers(state: AdmmState) -> AdmmState:
    return replace(
        state,
        s=state.s + state.u - state.u_tilde,
        d=state.d + hessian(state.u) - state.v,
        b=state.b + state.tensor.apply(state.v) - state.w,
    )


def _fidelity(u: ScalarField, problem: Problem, eta: float, p: int) -> float:
    gap = np.abs(u - problem.f)[problem.mask]
    return float(eta / p * np.sum(gap**p))


def twso_energy(u: ScalarField, problem: Problem, tensor: DiffusionTensorField, params: SolverParams) -> float:
    regulariser = float(np.sum(tensor.apply(hessian(u)).magnitude()))
    return _fidelity(u, problem, params.eta, params.p) + regulariser


def augmented_lagrangian(state: AdmmState, problem: Problem, params: SolverParams) -> float:
    split = state.u_tilde - state.u - state.s
    hess_gap = state.v - hessian(state.u) - state.d
    tensor_gap = state.w - state.tensor.apply(state.v) - state.b
    return (
        _fidelity(state.u_tilde, problem, params.eta, params.p)
        + float(np.sum(state.w.magnitude()))
        + 0.5 * params.theta1 * float(np.sum(split**2))
        + 0.5 * params.theta2 * hess_gap.inner(hess_gap)
        + 0.5 * params.theta3 * tensor_gap.inner(tensor_gap)
    )


class AdmmSolver:
    """
    Drives the iteration for one single-channel problem.

    ``tensor`` fixes T for the whole run (no refinement); otherwise T is
    built from the starting image and, for inpainting, rebuilt every
    ``refine_every`` steps. Inpainting starts from ``initial_fill`` with a
    warm V and W. With ``debug`` set every subproblem is checked against
    the augmented Lagrangian and the Fourier solve against its spatial
    residual.

    The loop stops once u has settled (relative change below ``tol``),
    u agrees with u_tilde to ``tol * ||f||`` and the Hessian and tensor
    splits are below ``CONSTRAINT_TOLERANCE * ||f||``, or at ``max_iter``.
    """

    def __init__(
        self,
        problem: Problem,
        params: SolverParams,
        tensor: DiffusionTensorField | None = None,
        debug: bool = False,
    ):
        if problem.f.ndim != 2:
            raise DimensionMismatchError("AdmmSolver works on single-channel images; use run_color")
        self.problem = problem
        self.params = params
        self.debug = debug
        inpaint = problem.task == "inpaint"
        self.refine = tensor is None and params.refine_every > 0 and inpaint
        start = initial_fill(problem.f, problem.mask) if inpaint else problem.f
        if tensor is None:
            tensor = build_diffusion_tensor(start, params.tensor)
        self.state = AdmmState.initial(start, tensor, warm=inpaint)
        self.denominator = spectral_denominator(problem.f.shape, params.theta1, params.theta2)
        self.scale = max(float(np.linalg.norm(problem.f)), CHANGE_FLOOR)

    @property
    def converged(self) -> bool:
        if not self.state.history:
            return False
        last = self.state.history[-1]
        return (
            last.relative_change < self.params.tol
            and last.split_residual < self.params.tol * self.scale
            and max(last.hessian_residual, last.tensor_residual) < CONSTRAINT_TOLERANCE * self.scale
        )

    @property
    def finished(self) -> bool:
        return self.converged or self.state.iteration >= self.params.max_iter

    def set_tensor(self, tensor: DiffusionTensorField) -> None:
        self.state.tensor = tensor

    def _checked(self, label: str, before: float) -> float:
        after = augmented_lagrangian(self.state, self.problem, self.params)
        if after > before + SOLVE_TOLERANCE * max(1.0, abs(before)):
            raise RestorationError(f"{label} step increased the augmented Lagrangian ({before:.12g} -> {after:.12g})")
        return after

    def step(self) -> IterationRecord:
        st, pr, pa = self.state, self.problem, self.params
        previous = st.u
        lagrangian = augmented_lagrangian(st, pr, pa) if self.debug else 0.0

        st.u_tilde = solve_u_tilde(pr.f, st.u, st.s, pr.mask, pa.eta, pa.theta1, pa.p)
        if self.debug:
            lagrangian = self._checked("u_tilde", lagrangian)

        st.u = solve_u(st.u_tilde, st.s, st.v, st.d, pa.theta1, pa.theta2, self.denominator)
        if self.debug:
            self._check_spectral_residual()
            lagrangian = self._checked("u", lagrangian)

        st.w = solve_w(st.tensor.apply(st.v), st.b, pa.theta3)
        if self.debug:
            lagrangian = self._checked("W", lagrangian)

        hess_u = hessian(st.u)
        st.v = solve_v(hess_u, st.d, st.w, st.b, st.tensor, pa.theta2, pa.theta3)
        if self.debug:
            self._checked("V", lagrangian)

        updated = update_multipliers(st)
        st.s, st.d, st.b = updated.s, updated.d, updated.b
        st.iteration += 1

        change = float(np.linalg.norm(st.u - previous) / max(np.linalg.norm(previous), CHANGE_FLOOR))
        tv = st.tensor.apply(st.v)
        record = IterationRecord(
            iteration=st.iteration,
            hessian_residual=(hess_u - st.v).norm(),
            tensor_residual=(tv - st.w).norm(),
            split_residual=float(np.linalg.norm(st.u - st.u_tilde)),
            relative_change=change,
            energy=twso_energy(st.u, pr, st.tensor, pa),
        )
        st.history.append(record)
        log.debug(
            "[solver] it=%d hess=%.3e tensor=%.3e split=%.3e change=%.3e energy=%.6g",
            record.iteration,
            record.hessian_residual,
            record.tensor_residual,
            record.split_residual,
            record.relative_change,
            record.energy,
        )

        if self.refine and st.iteration % pa.refine_every == 0 and not self.finished:
            st.tensor = build_diffusion_tensor(st.u, pa.tensor)
        return record

    def _check_spectral_residual(self) -> None:
        st, pa = self.state, self.params
        rhs = pa.theta1 * (st.u_tilde - st.s) + pa.theta2 * div2(st.v - st.d)
        applied = pa.theta1 * st.u + pa.theta2 * div2(hessian(st.u))
        residual = float(np.max(np.abs(applied - rhs)))
        if residual > SOLVE_TOLERANCE * max(1.0, float(np.max(np.abs(rhs)))):
            raise RestorationError(f"Fourier solve residual {residual:.3g} exceeds tolerance")

    def run(self) -> tuple[ScalarField, List[IterationRecord]]:
        while not self.finished:
            self.step()
        reason = "converged" if self.converged else "max_iter"
        log.info("[solver] %s stopped after %d iterations (%s)", self.problem.task, self.state.iteration, reason)
        return np.clip(self.state.u, 0.0, 1.0), list(self.state.history)


def run(problem: Problem, params: SolverParams, debug: bool = False) -> tuple[ScalarField, List[IterationRecord]]:
    if problem.f.ndim == 3:
        return run_color(problem, params)
    return AdmmSolver(problem, params, debug=debug).run()


def run_sotv(problem: Problem, params: SolverParams, debug: bool = False) -> tuple[ScalarField, List[IterationRecord]]:
    """The isotropic model: identity tensor, no refinement."""
    if problem.f.ndim == 3:
        return run_color(problem, params, isotropic=True)
    identity = DiffusionTensorField.identity(problem.f.shape)
    return AdmmSolver(problem, params, tensor=identity, debug=debug).run()


def run_color(
    problem: Problem, params: SolverParams, isotropic: bool = False
) -> tuple[ScalarField, List[List[IterationRecord]]]:
    """
    Channel-wise restoration sharing one tensor built from luminance.

    Channels advance in lockstep so an inpainting refinement can rebuild the
    tensor from the luminance of the current estimate.
    """
    if problem.f.ndim != 3:
        raise DimensionMismatchError("run_color expects an M x N x C image")
    shape = problem.f.shape[:2]
    if isotropic:
        tensor = DiffusionTensorField.identity(shape)
    else:
        start = initial_fill(problem.f, problem.mask) if problem.task == "inpaint" else problem.f
        tensor = build_diffusion_tensor(luminance(start), params.tensor)
    solvers = [AdmmSolver(problem.channel(c), params, tensor=tensor) for c in range(problem.f.shape[2])]
    refine = not isotropic and params.refine_every > 0 and problem.task == "inpaint"

    sweeps = 0
    while not all(s.finished for s in solvers):
        for solver in solvers:
            if not solver.finished:
                solver.step()
        sweeps += 1
        if refine and sweeps % params.refine_every == 0:
            current = np.stack([s.state.u for s in solvers], axis=-1)
            tensor = build_diffusion_tensor(luminance(current), params.tensor)
            for solver in solvers:
                solver.set_tensor(tensor)

    log.info("[solver] color %s stopped after %d iterations", problem.task, max(s.state.iteration for s in solvers))
    u = np.stack([np.clip(s.state.u, 0.0, 1.0) for s in solvers], axis=-1)
    return u, [list(s.state.history) for s in solvers]
