"""Yeoh hyperelastic mesh deformation: energy, stress, tangent, Newton solve.

The mesh is a fictitious nearly-incompressible Yeoh solid in plane
strain (out-of-plane stretch fixed at 1).  With the volume-split
invariants J1 = I1 * J^(-2/3) and J3 = J = det F, the strain energy is

    W = A10 (J1 - 3) + A20 (J1 - 3)^2 + A30 (J1 - 3)^3 + kappa (J3 - 1)^2

The quadratic A20 term barely resists small distortions but hardens
rapidly as elements shear, which is what protects the interface
neighborhood.  Layered stiffening scales A20 only.

Equilibrium is found by an incremental total Lagrangian Newton solve:
interface displacements grow in equal load increments, each solved with
the consistent tangent.  Voigt order is (11, 22, 12) with engineering
shear strain, so tangent matrix entries are plain tensor components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import apply_constraints, assemble_csr, merge_constraints, scatter_triplets, solve_spd
from .errors import (
    ConfigError,
    InadmissibleStateError,
    NewtonDivergenceError,
    SolverError,
)
from .layers import stiffening_multipliers
from .mesh import QuadMesh
from .problems import PrescribedMotion
from .elastic import gauss_points, shape_gradients


@dataclass(frozen=True)
class YeohConfig:
    """Material and solver settings for the hyperelastic model."""

    a10: float = 1.0
    a20: float = 1e3
    a30: float = 0.0
    kappa: float = 1.0
    layer_factors: tuple = ()
    n_increments: int = 10
    newton_tol: float = 1e-8
    max_newton_iters: int = 25
    max_backtracks: int = 8

    def __post_init__(self):
        if self.a10 <= 0.0:
            raise ConfigError("a10 must be positive")
        if self.kappa <= 0.0:
            raise ConfigError("kappa must be positive")
        if self.a20 < 0.0 or self.a30 < 0.0:
            raise ConfigError("a20 and a30 must be non-negative")
        if self.n_increments < 1:
            raise ConfigError("n_increments must be at least 1")
        if self.newton_tol <= 0.0 or self.max_newton_iters < 1:
            raise ConfigError("newton_tol and max_newton_iters must be positive")
        if self.max_backtracks < 0:
            raise ConfigError("max_backtracks must be non-negative")


def _as_f(f):
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (2, 2):
        raise InadmissibleStateError("deformation gradient must be 2x2 (plane strain)")
    return f


def _det2(a):
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def _invariants_from_c(c):
    """(J, I1, p) with p = J^(-2/3), from right Cauchy-Green blocks."""
    det_c = _det2(c)
    jac = np.sqrt(det_c)
    trace = c[..., 0, 0] + c[..., 1, 1] + 1.0
    return jac, trace, det_c ** (-1.0 / 3.0)


def yeoh_energy(f, config: YeohConfig) -> float:
    """Strain energy density at deformation gradient ``f``."""
    f = _as_f(f)
    jac = _det2(f)
    if jac <= 0.0:
        raise InadmissibleStateError(f"non-positive det F = {jac}")
    c = f.T @ f
    _, trace, p = _invariants_from_c(c[None])
    jm3 = float(trace[0] * p[0]) - 3.0
    return (
        config.a10 * jm3
        + config.a20 * jm3**2
        + config.a30 * jm3**3
        + config.kappa * (jac - 1.0) ** 2
    )


def _pk2_batch(c, a10, a20, a30, kappa):
    """(g, 2, 2) second Piola-Kirchhoff stress from (g, 2, 2) C blocks."""
    jac, trace, p = _invariants_from_c(c)
    jm3 = trace * p - 3.0
    psi1 = a10 + 2.0 * a20 * jm3 + 3.0 * a30 * jm3**2
    psi3 = 2.0 * kappa * (jac - 1.0)
    inv_c = _inv2(c)
    eye = np.eye(2)
    dev = p[..., None, None] * (eye - (trace / 3.0)[..., None, None] * inv_c)
    return 2.0 * psi1[..., None, None] * dev + (psi3 * jac)[..., None, None] * inv_c


def _inv2(c):
    inv = np.empty_like(c)
    det = _det2(c)
    inv[..., 0, 0] = c[..., 1, 1]
    inv[..., 1, 1] = c[..., 0, 0]
    inv[..., 0, 1] = -c[..., 0, 1]
    inv[..., 1, 0] = -c[..., 1, 0]
    return inv / det[..., None, None]


def _tangent_batch(c, a10, a20, a30, kappa):
    """(g, 3, 3) Voigt material tangent d S / d E from (g, 2, 2) C blocks."""
    jac, trace, p = _invariants_from_c(c)
    jm3 = trace * p - 3.0
    psi1 = a10 + 2.0 * a20 * jm3 + 3.0 * a30 * jm3**2
    psi1_prime = 2.0 * a20 + 6.0 * a30 * jm3
    psi3 = 2.0 * kappa * (jac - 1.0)
    inv_c = _inv2(c)
    eye_v = np.array([1.0, 1.0, 0.0])
    hv = np.stack([inv_c[..., 0, 0], inv_c[..., 1, 1], inv_c[..., 0, 1]], axis=-1)
    gv = p[..., None] * (eye_v - (trace / 3.0)[..., None] * hv)

    def outer(a, b):
        return a[..., :, None] * b[..., None, :]

    # fourth-order -1/2 (H_ac H_bd + H_ad H_bc) in Voigt components
    h00, h11, h01 = hv[..., 0], hv[..., 1], hv[..., 2]
    ih = np.empty(c.shape[:-2] + (3, 3))
    ih[..., 0, 0] = -h00 * h00
    ih[..., 0, 1] = -h01 * h01
    ih[..., 0, 2] = -h00 * h01
    ih[..., 1, 1] = -h11 * h11
    ih[..., 1, 2] = -h01 * h11
    ih[..., 2, 2] = -0.5 * (h00 * h11 + h01 * h01)
    ih[..., 1, 0] = ih[..., 0, 1]
    ih[..., 2, 0] = ih[..., 0, 2]
    ih[..., 2, 1] = ih[..., 1, 2]

    hh = outer(hv, hv)
    dg_dc = (
        -(p / 3.0)[..., None, None] * (outer(np.broadcast_to(eye_v, hv.shape), hv)
                                       + outer(hv, np.broadcast_to(eye_v, hv.shape)))
        + ((p * trace) / 9.0)[..., None, None] * hh
        - ((p * trace) / 3.0)[..., None, None] * ih
    )
    return (
        4.0 * psi1_prime[..., None, None] * outer(gv, gv)
        + 4.0 * psi1[..., None, None] * dg_dc
        + (2.0 * kappa * jac**2 + psi3 * jac)[..., None, None] * hh
        + (2.0 * psi3 * jac)[..., None, None] * ih
    )


def pk2_stress(f, config: YeohConfig) -> np.ndarray:
    """Second Piola-Kirchhoff stress S = 2 dW/dC at ``f``."""
    f = _as_f(f)
    if _det2(f) <= 0.0:
        raise InadmissibleStateError(f"non-positive det F = {_det2(f)}")
    c = (f.T @ f)[None]
    return _pk2_batch(c, config.a10, config.a20, config.a30, config.kappa)[0]


def material_tangent(f, config: YeohConfig) -> np.ndarray:
    """3x3 Voigt tangent dS/dE at ``f`` (order 11, 22, 12; engineering shear)."""
    f = _as_f(f)
    if _det2(f) <= 0.0:
        raise InadmissibleStateError(f"non-positive det F = {_det2(f)}")
    c = (f.T @ f)[None]
    return _tangent_batch(c, config.a10, config.a20, config.a30, config.kappa)[0]


@dataclass(frozen=True)
class KinematicState:
    """Per-Gauss-point kinematics snapshot at one material point."""

    deformation_gradient: np.ndarray
    j1: float
    j3: float
    lagrangian_strain: np.ndarray
    pk2: np.ndarray
    load_factor: float = 1.0

    @classmethod
    def from_deformation_gradient(cls, f, config: YeohConfig, load_factor=1.0):
        f = _as_f(f)
        jac = _det2(f)
        if jac <= 0.0:
            raise InadmissibleStateError(f"non-positive det F = {jac}")
        c = f.T @ f
        _, trace, p = _invariants_from_c(c[None])
        return cls(
            deformation_gradient=f,
            j1=float(trace[0] * p[0]),
            j3=float(jac),
            lagrangian_strain=0.5 * (c - np.eye(2)),
            pk2=pk2_stress(f, config),
            load_factor=load_factor,
        )


def _reference_gradients(ref_corners):
    """Shape gradients w.r.t. reference coordinates and Jacobian weights.

    Returns (dndx, weights): lists over the four Gauss points of
    (m, 4, 2) gradients and (m,) det J0 values.
    """
    dndx_all = []
    weights = []
    for xi, eta in gauss_points():
        grads = shape_gradients(xi, eta)
        jac = np.einsum("mia,ib->mab", ref_corners, grads)
        det = _det2(jac)
        if np.any(det <= 0.0):
            bad = int(np.flatnonzero(det <= 0.0)[0])
            raise InadmissibleStateError(
                f"non-positive reference Jacobian in element {bad}"
            )
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv /= det[:, None, None]
        dndx_all.append(np.einsum("ib,mba->mia", grads, inv))
        weights.append(det)
    return dndx_all, weights


def internal_forces_and_tangent(mesh: QuadMesh, nodal_displacements,
                                config: YeohConfig, a20_scale=None,
                                need_tangent=True):
    """Assembled internal force vector and consistent tangent matrix.

    ``nodal_displacements`` is flat (2n,) or (n, 2).  ``a20_scale`` holds
    per-element multipliers on A20 (layered stiffening); default ones.
    Returns ``(forces, tangent_csr)``; the tangent is ``None`` when
    ``need_tangent`` is false.
    """
    disp = np.asarray(nodal_displacements, dtype=np.float64).reshape(mesh.n_nodes, 2)
    if a20_scale is None:
        a20_scale = np.ones(mesh.n_quads)
    a20_e = config.a20 * np.asarray(a20_scale, dtype=np.float64)
    ref_corners = mesh.corner_coords()
    u_corners = disp[mesh.quads]
    dndx_all, weights = _reference_gradients(ref_corners)

    m = mesh.n_quads
    forces_e = np.zeros((m, 8))
    tangent_e = np.zeros((m, 8, 8)) if need_tangent else None
    eye = np.eye(2)
    for dndx, det in zip(dndx_all, weights):
        f_grad = eye + np.einsum("mia,mib->mab", u_corners, dndx)
        jac = _det2(f_grad)
        if np.any(jac <= 0.0):
            bad = int(np.flatnonzero(jac <= 0.0)[0])
            raise InadmissibleStateError(
                f"non-positive det F at a Gauss point of element {bad}"
            )
        c = np.einsum("mca,mcb->mab", f_grad, f_grad)
        stress = _pk2_batch(c, config.a10, a20_e, config.a30, config.kappa)
        sv = np.stack([stress[:, 0, 0], stress[:, 1, 1], stress[:, 0, 1]], axis=-1)

        b_mat = np.zeros((m, 3, 8))
        for a in range(2):
            b_mat[:, 0, a::2] = f_grad[:, a, 0, None] * dndx[:, :, 0]
            b_mat[:, 1, a::2] = f_grad[:, a, 1, None] * dndx[:, :, 1]
            b_mat[:, 2, a::2] = (
                f_grad[:, a, 0, None] * dndx[:, :, 1]
                + f_grad[:, a, 1, None] * dndx[:, :, 0]
            )
        forces_e += np.einsum("mvi,mv->mi", b_mat, sv) * det[:, None]
        if need_tangent:
            tangent_v = _tangent_batch(c, config.a10, a20_e, config.a30, config.kappa)
            k_mat = np.einsum("mvi,mvw,mwj->mij", b_mat, tangent_v, b_mat)
            geo = np.einsum("mia,mab,mjb->mij", dndx, stress, dndx)
            k_geo = np.zeros((m, 8, 8))
            k_geo[:, 0::2, 0::2] = geo
            k_geo[:, 1::2, 1::2] = geo
            tangent_e += (k_mat + k_geo) * det[:, None, None]

    dofs = np.empty((m, 8), dtype=np.intp)
    dofs[:, 0::2] = 2 * mesh.quads
    dofs[:, 1::2] = 2 * mesh.quads + 1
    forces = np.zeros(mesh.n_dofs)
    np.add.at(forces, dofs.ravel(), forces_e.ravel())
    tangent = None
    if need_tangent:
        rows, cols, vals = scatter_triplets(tangent_e, dofs)
        tangent = assemble_csr(rows, cols, vals, mesh.n_dofs)
    return forces, tangent


@dataclass(frozen=True)
class EquilibriumState:
    """Immutable converged-solve snapshot consumed by the sensitivity blocks."""

    mesh: QuadMesh
    displacements: np.ndarray
    prescribed_dofs: np.ndarray
    prescribed_values: np.ndarray
    interface_dofs: np.ndarray
    config: YeohConfig
    a20_scale: np.ndarray
    residual_free: np.ndarray
    newton_iterations: int
    converged: bool

    @property
    def free_dofs(self):
        mask = np.ones(self.mesh.n_dofs, dtype=bool)
        mask[self.prescribed_dofs] = False
        return np.flatnonzero(mask)

    def deformed_mesh(self) -> QuadMesh:
        return self.mesh.displaced(self.displacements)


def _newton(mesh, config, a20_scale, x, prescribed_dofs, target_values, free_mask):
    """Newton iterations toward equilibrium at fixed prescribed values.

    The deficit between the prescribed DOFs and their targets rides in
    the first linearized solve's right-hand side, so interface and free
    nodes move together; later iterations see a zero deficit.  Steps
    are backtracked (halved) when they would invert an element, or,
    once the targets are met, when they would grow the residual.
    Returns (x, residual_free, iterations, converged); a step that
    cannot be damped counts as non-convergence so the caller can cut
    the increment.
    """
    x = x.copy()
    scale = max(1.0, float(np.abs(target_values).max(initial=0.0)))
    last_residual = None
    for it in range(config.max_newton_iters + 1):
        jump = target_values - x[prescribed_dofs]
        if np.abs(jump).max(initial=0.0) <= 1e-12 * scale:
            # snap is admissible because the deficit is negligible
            x[prescribed_dofs] = target_values
            jump = np.zeros(prescribed_dofs.size)
        loaded = np.any(jump != 0.0)
        try:
            forces, tangent = internal_forces_and_tangent(
                mesh, x, config, a20_scale, need_tangent=True
            )
        except InadmissibleStateError:
            return x, last_residual, it, False
        residual = -forces[free_mask]
        last_residual = residual
        res_norm = np.linalg.norm(residual)
        if not loaded and res_norm < config.newton_tol:
            return x, residual, it, True
        if it == config.max_newton_iters:
            return x, residual, it, False
        try:
            mat, rhs = apply_constraints(tangent, -forces, prescribed_dofs, jump)
            delta = solve_spd(mat, rhs, context="newton step")
        except SolverError:
            return x, residual, it, False
        step = 1.0
        for _ in range(config.max_backtracks + 1):
            x_trial = x + step * delta
            try:
                trial_forces, _ = internal_forces_and_tangent(
                    mesh, x_trial, config, a20_scale, need_tangent=False
                )
            except InadmissibleStateError:
                step *= 0.5
                continue
            if loaded or np.linalg.norm(trial_forces[free_mask]) < res_norm:
                break
            step *= 0.5
        else:
            return x, residual, it, False
        x = x_trial
    return x, last_residual, config.max_newton_iters, False


def solve_equilibrium(mesh: QuadMesh, prescribed_dofs, prescribed_values,
                      config: YeohConfig, a20_scale=None, x0=None,
                      interface_dofs=None) -> EquilibriumState:
    """Incremental Newton solve with the prescribed DOFs ramped to their targets.

    ``x0`` warm-starts the displacement field (used by re-solves around
    an existing equilibrium).  On divergence an increment is retried
    once as two half-increments before giving up.  ``interface_dofs``
    records which prescribed DOFs carry structural displacements (all of
    them by default); the sensitivity mapping needs the distinction.
    """
    prescribed_dofs = np.asarray(prescribed_dofs, dtype=np.intp)
    prescribed_values = np.asarray(prescribed_values, dtype=np.float64)
    if a20_scale is None:
        a20_scale = np.ones(mesh.n_quads)
    a20_scale = np.asarray(a20_scale, dtype=np.float64)
    free_mask = np.ones(mesh.n_dofs, dtype=bool)
    free_mask[prescribed_dofs] = False

    x = np.zeros(mesh.n_dofs) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    total_iters = 0
    residual = np.zeros(np.count_nonzero(free_mask))
    fractions = [(i + 1) / config.n_increments for i in range(config.n_increments)]
    prev = 0.0
    for inc, frac in enumerate(fractions):
        x_new, res, iters, ok = _newton(
            mesh, config, a20_scale, x, prescribed_dofs,
            prescribed_values * frac, free_mask,
        )
        total_iters += iters
        if not ok:
            # one retry level: replay this increment as two halves
            mid = 0.5 * (prev + frac)
            for sub in (mid, frac):
                x_new, res, iters, ok = _newton(
                    mesh, config, a20_scale, x, prescribed_dofs,
                    prescribed_values * sub, free_mask,
                )
                total_iters += iters
                if not ok:
                    norm = float(np.linalg.norm(res)) if res is not None else float("nan")
                    raise NewtonDivergenceError(
                        f"Newton diverged at increment {inc + 1}/{config.n_increments}"
                        f" (load fraction {sub:.3f}), residual norm {norm:.3e}",
                        increment=inc + 1,
                        residual_norm=norm,
                    )
                x = x_new
        else:
            x = x_new
        residual = res
        prev = frac

    if interface_dofs is None:
        interface_dofs = prescribed_dofs
    return EquilibriumState(
        mesh=mesh,
        displacements=x,
        prescribed_dofs=prescribed_dofs,
        prescribed_values=prescribed_values,
        interface_dofs=np.asarray(interface_dofs, dtype=np.intp),
        config=config,
        a20_scale=a20_scale,
        residual_free=residual,
        newton_iterations=total_iters,
        converged=True,
    )


def deform_hyperelastic(mesh: QuadMesh, motion: PrescribedMotion,
                        config: YeohConfig = YeohConfig()):
    """Deform the mesh as a fictitious Yeoh solid.

    Returns ``(deformed_mesh, equilibrium_state)``.
    """
    mesh.validate_reference()
    a20_scale = stiffening_multipliers(mesh, mesh.interface, config.layer_factors)

    move_dofs, move_vals = motion.dof_values()
    fixed = np.setdiff1d(mesh.fixed_nodes(), motion.node_indices)
    fixed_dofs = np.concatenate([2 * fixed, 2 * fixed + 1])
    dofs, vals = merge_constraints(
        np.concatenate([move_dofs, fixed_dofs]),
        np.concatenate([move_vals, np.zeros(fixed_dofs.size)]),
    )
    state = solve_equilibrium(
        mesh, dofs, vals, config, a20_scale, interface_dofs=np.unique(move_dofs)
    )
    return state.deformed_mesh(), state
