"""Single-step solvers for the coupled ablation model.

One time level advances in five stages, each a pure function of its
inputs: a flow step and a potential step (both using the previous
temperature), the resistive heating field, the artificial-viscosity
field, and finally the heat step using the fresh velocity and
potentials. Coefficients are lagged one level, so every stage is a
linear solve. Parabolic steps use backward Euler; convection is
linearized with the previous velocity and skew-symmetrized.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    ScalarSpace,
    VelocitySpace,
    apply_dirichlet,
    assemble_advection,
    assemble_body_load,
    assemble_cellwise_load,
    assemble_convection_skew,
    assemble_divergence,
    assemble_mass,
    assemble_pressure_mass,
    assemble_stiffness,
    assemble_velocity_load,
    assemble_velocity_mass,
    assemble_viscous,
    collect_scalar_dirichlet,
    collect_velocity_dirichlet,
    element_gradients,
    element_mean,
)
from .geometry import (
    BLOOD,
    TAG_ELECTRODE,
    TAG_INLET,
    TAG_OUTLET,
    TAG_TISSUE_BOTTOM,
    TAG_TISSUE_LEFT,
    TAG_TISSUE_RIGHT,
    TAG_TOP,
    TISSUE,
)
from .materials import (
    eta_blood,
    eta_tissue,
    kinematic_viscosity,
    sigma_blood,
    sigma_tissue,
)
from .sparse import CSRMatrix, SolveReport, solve_general, solve_spd

#: relative shift of the pressure block that fixes the constant mode
PRESSURE_SHIFT = 1e-10


class StepError(RuntimeError):
    """A linear solve inside a step failed; carries the solver report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class StabilizationParams:
    """Knobs of the residual-driven artificial viscosity."""

    alpha: float = 2.0
    beta: float = 0.5
    c_r: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if not 1.0 <= self.alpha <= 2.0:
            raise ValueError("alpha must lie in [1, 2]")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.c_r <= 0.0:
            raise ValueError("c_r must be positive")


@dataclass
class FieldState:
    """All unknowns at one time level.

    Velocity and pressure live on the blood subdomain; temperature is a
    single field over all vertices, continuous across the interface by
    construction. Potentials are stored as full vertex vectors that are
    zero outside their subdomain.
    """

    t: float
    u: np.ndarray
    pressure: np.ndarray
    theta: np.ndarray
    phi_blood: np.ndarray = None
    phi_tissue: np.ndarray = None

    def is_finite(self):
        parts = [self.u, self.pressure, self.theta, self.phi_blood, self.phi_tissue]
        return all(p is None or np.isfinite(p).all() for p in parts)


def _solved(x, report, what):
    if not report.converged:
        raise StepError(f"{what} solve did not converge "
                        f"(residual {report.residual_norm:.3e})", report)
    return x


def potential_step(mesh, model, theta, phi_electrode, phi_blood0=None,
                   phi_tissue0=None, report_sink=None):
    """Electric potential on both subdomains for the given temperature.

    Solves the two conduction problems independently: the potential is
    phi_electrode on the electrode boundary, zero on the outer walls of
    the respective subdomain, with natural zero flux across the
    blood/tissue interface. Returns full vertex vectors, zero at
    vertices the subdomain does not touch.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.isfinite(theta).all():
        raise ValueError("temperature field contains non-finite values")
    out = []
    cases = (
        (mesh.blood_tris, sigma_blood, BLOOD,
         {TAG_INLET: 0.0, TAG_TOP: 0.0, TAG_OUTLET: 0.0,
          TAG_ELECTRODE: float(phi_electrode)}, phi_blood0),
        (mesh.tissue_tris, sigma_tissue, TISSUE,
         {TAG_TISSUE_LEFT: 0.0, TAG_TISSUE_BOTTOM: 0.0, TAG_TISSUE_RIGHT: 0.0,
          TAG_ELECTRODE: float(phi_electrode)}, phi_tissue0),
    )
    for els, sigma_fn, side, bc, x0 in cases:
        space = ScalarSpace(mesh, els)
        coeff = sigma_fn(model, element_mean(mesh, els, theta))
        k = assemble_stiffness(space, coeff)
        dofs, vals = collect_scalar_dirichlet(mesh, bc, side=side)
        dofs = np.concatenate([dofs, space.inactive])
        vals = np.concatenate([vals, np.zeros(len(space.inactive))])
        a, b = apply_dirichlet(k, np.zeros(space.n_dofs), dofs, vals)
        x, report = solve_spd(a, b, x0=x0, tol=1e-12)
        if report_sink is not None:
            report_sink.append(("potential", report))
        x = _solved(x, report, "potential")
        x[dofs] = vals
        out.append(x)
    return out[0], out[1]


def joule_field(mesh, model, theta, phi_blood, phi_tissue):
    """Resistive heating per element: conductivity times |grad phi|^2."""
    out = np.zeros(mesh.n_triangles)
    for els, sigma_fn, phi in (
        (mesh.blood_tris, sigma_blood, phi_blood),
        (mesh.tissue_tris, sigma_tissue, phi_tissue),
    ):
        grad = element_gradients(mesh, els, phi)
        coeff = sigma_fn(model, element_mean(mesh, els, theta))
        out[els] = coeff * (grad**2).sum(axis=1)
    return out


def _bubble_part(vspace, u):
    """Per-element bubble coefficients (ne, 2) of a velocity dof vector."""
    s, nv = vspace.n_scalar, vspace.n_vert
    return np.stack([u[nv:s], u[s + nv : 2 * s]], axis=1)


def flow_step(mesh, model, state, tau, bc, force=None, steady=False,
              extra_load=None, vspace=None, report_sink=None):
    """One momentum/continuity step on the blood subdomain.

    The viscosity is evaluated at the previous temperature, convection
    at the previous velocity in skew-symmetric form. ``bc`` maps
    boundary tags to velocity data; untagged boundary parts get the
    natural outflow condition. ``force`` is a per-element (ne, 2) body
    force or a callable on coordinates; ``steady`` drops the time term
    for stationary solves. Returns (u, pressure).
    """
    if not steady and tau <= 0.0:
        raise ValueError("tau must be positive")
    vs = VelocitySpace(mesh) if vspace is None else vspace
    theta_e = element_mean(mesh, vs.elements, state.theta)
    visc = kinematic_viscosity(model, theta_e)
    f_block = assemble_viscous(vs, visc).mat + assemble_convection_skew(
        vs, state.u
    ).mat
    rhs_u = np.zeros(vs.n_dofs)
    if not steady:
        mass = assemble_velocity_mass(vs).mat
        f_block = f_block + mass / tau
        rhs_u += mass @ np.asarray(state.u, dtype=float) / tau
    if force is not None:
        if callable(force):
            rhs_u += assemble_velocity_load(vs, force)
        else:
            rhs_u += assemble_body_load(vs, force)
    if extra_load is not None:
        rhs_u += extra_load
    div = assemble_divergence(vs).mat
    mp = assemble_pressure_mass(vs).mat
    saddle = CSRMatrix(
        sp.bmat([[f_block, -div.T], [div, PRESSURE_SHIFT * mp]], format="csr")
    )
    rhs = np.concatenate([rhs_u, np.zeros(vs.n_vert)])
    dofs, vals = collect_velocity_dirichlet(vs, bc)
    a, b = apply_dirichlet(saddle, rhs, dofs, vals)
    lu = spla.splu(a.mat.tocsc(), permc_spec="COLAMD")
    x = lu.solve(b)
    rnorm = float(np.linalg.norm(b - a.mat @ x))
    report = SolveReport(iterations=1, residual_norm=rnorm,
                         converged=rnorm <= 1e-8 * max(1.0, np.linalg.norm(b)))
    if report_sink is not None:
        report_sink.append(("flow", report))
    x = _solved(x, report, "flow")
    x[dofs] = vals
    return x[: vs.n_dofs], x[vs.n_dofs :]


def _velocity_inf_norms(mesh, vspace, u):
    """Per-element max speed, sampled at the vertices and the centroid.

    The bubble mode peaks at the centroid with unit value, so sampling
    there captures its contribution exactly.
    """
    out = np.zeros(mesh.n_triangles)
    uv = vspace.vertex_field(u)
    conn = mesh.triangles[vspace.elements]
    vert = uv[conn]
    speed = np.linalg.norm(vert, axis=2).max(axis=1)
    centroid = vert.mean(axis=1) + _bubble_part(vspace, u)
    out[vspace.elements] = np.maximum(speed, np.linalg.norm(centroid, axis=1))
    return out


def entropy_viscosity(mesh, theta_now, theta_prev, theta_prev2, u, joule,
                      model, tau, stab, vspace=None):
    """Per-element artificial viscosity driven by the heat residual.

    The residual combines the lagged time increment
    (theta_prev - theta_prev2)/tau, transport of theta_now by u, and the
    resistive source, scaled by the entropy weight of theta_now. The
    in-element diffusion of a piecewise-linear field is identically zero
    and is dropped. Each element is capped at beta * max|u| * h; missing
    history or a flat temperature field falls back to that cap.
    """
    out = np.zeros(mesh.n_triangles)
    if not stab.enabled:
        return out
    vs = VelocitySpace(mesh) if vspace is None else vspace
    unorm = _velocity_inf_norms(mesh, vs, u)
    els = vs.elements
    h = mesh.tri_diams[els]
    cap = stab.beta * unorm[els] * h
    theta_now = np.asarray(theta_now, dtype=float)
    var = float(theta_now.max() - theta_now.min())
    box = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    diam = float(np.hypot(box[0], box[1]))
    c = stab.c_r * unorm.max() * var * diam ** (stab.alpha - 2.0)
    if theta_prev is None or theta_prev2 is None or c <= 0.0:
        out[els] = cap
        return out
    dtheta = (np.asarray(theta_prev, dtype=float)
              - np.asarray(theta_prev2, dtype=float)) / tau
    conn = mesh.triangles[els]
    grad = element_gradients(mesh, els, theta_now)
    uv = vs.vertex_field(u)[conn]
    residual = dtheta[conn] + np.einsum("kid,kd->ki", uv, grad) - joule[els, None]
    if stab.alpha == 2.0:
        weight = theta_now[conn]
    else:
        weight = np.abs(theta_now[conn] - model.theta_bar) ** (stab.alpha - 1.0)
    rmax = np.abs(residual * weight).max(axis=1)
    out[els] = stab.beta * unorm[els] * np.minimum(
        h, h**stab.alpha * rmax / c
    )
    return out


def heat_step(mesh, model, state, tau, bc, joule, nu_tilde, extra_load=None,
              vspace=None, report_sink=None):
    """One backward-Euler step of the temperature equation.

    The conductivity is evaluated at the previous temperature and
    augmented by the artificial viscosity; transport by the fresh
    velocity acts on blood elements only. ``bc`` maps boundary tags to
    Dirichlet data; the interface needs no entry, the temperature field
    being single-valued there by construction. Returns the new
    temperature.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    theta_prev = np.asarray(state.theta, dtype=float)
    space = ScalarSpace(mesh)
    capacity = np.where(mesh.subdomain == BLOOD, model.capacity_blood,
                        model.capacity_tissue)
    mass = assemble_mass(space, capacity).mat
    cond = np.zeros(mesh.n_triangles)
    cond[mesh.blood_tris] = eta_blood(
        model, element_mean(mesh, mesh.blood_tris, theta_prev)
    )
    cond[mesh.tissue_tris] = eta_tissue(
        model, element_mean(mesh, mesh.tissue_tris, theta_prev)
    )
    stiff = assemble_stiffness(space, cond + np.asarray(nu_tilde, dtype=float))
    vs = VelocitySpace(mesh) if vspace is None else vspace
    blood_space = ScalarSpace(mesh, vs.elements)
    adv = assemble_advection(blood_space, vs.vertex_field(state.u),
                             bubble=_bubble_part(vs, state.u))
    lhs = CSRMatrix(mass / tau + stiff.mat + adv.mat)
    rhs = mass @ theta_prev / tau + assemble_cellwise_load(space, joule)
    if extra_load is not None:
        rhs = rhs + extra_load
    dofs, vals = collect_scalar_dirichlet(mesh, bc)
    a, b = apply_dirichlet(lhs, rhs, dofs, vals)
    x, report = solve_general(a, b, x0=theta_prev, tol=1e-11)
    if report_sink is not None:
        report_sink.append(("heat", report))
    x = _solved(x, report, "heat")
    x[dofs] = vals
    return x
