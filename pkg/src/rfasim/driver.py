"""Time loop, scenario presets, probes, and checkpointing.

A run advances the decoupled scheme on a channel/tissue mesh: per step
the flow and the potentials are solved at the previous temperature, the
resistive source and the artificial viscosity are formed, and the heat
step closes the level. Scenario presets cover the heating baseline, the
saline-cooled electrode, and the buoyancy-forced variant.
"""

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import (
    ScalarSpace,
    VelocitySpace,
    assemble_mass,
    assemble_velocity_mass,
    element_mean,
)
from .geometry import (
    BLOOD,
    GeometryParams,
    MeshError,
    build_channel_tissue_mesh,
    locate_points,
)
from .materials import MaterialModel
from .sparse import SolveReport
from .stepping import (
    FieldState,
    StabilizationParams,
    StepError,
    entropy_viscosity,
    flow_step,
    heat_step,
    joule_field,
    potential_step,
)

VELOCITY_KINDS = ("inlet", "saline", "noslip", "natural")
FORCE_KINDS = ("none", "boussinesq")

#: buoyancy coefficient of the forced scenario
BOUSSINESQ_K = 1.0e-3 * 9.81 / 303.0


class RunError(RuntimeError):
    """A step failed mid-run; carries the step index and solve report."""

    def __init__(self, message, step, t, report=None):
        super().__init__(message)
        self.step = step
        self.t = t
        self.report = report


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation run."""

    geometry: GeometryParams = field(default_factory=GeometryParams)
    material: MaterialModel = field(default_factory=MaterialModel)
    stab: StabilizationParams = field(default_factory=StabilizationParams)
    t_final: float = 1.0
    tau: float = 0.01
    phi_electrode: float = 1.0
    bc_velocity: dict = field(default_factory=dict)
    bc_heat: dict = field(default_factory=dict)
    force: str = "none"
    boussinesq_k: float = BOUSSINESQ_K
    probes: tuple = ()
    output_dir: str = None
    output_every: int = 10
    name: str = "custom"

    def __post_init__(self):
        if self.t_final <= 0.0 or self.tau <= 0.0:
            raise ValueError("t_final and tau must be positive")
        if self.tau > self.t_final:
            raise ValueError("tau must not exceed t_final")
        steps = round(self.t_final / self.tau)
        if abs(steps * self.tau - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError("t_final must be an integer multiple of tau")
        for tag, kind in self.bc_velocity.items():
            if kind not in VELOCITY_KINDS:
                raise ValueError(f"unknown velocity condition {kind!r} on tag {tag}")
        for tag, value in self.bc_heat.items():
            if not np.isfinite(float(value)):
                raise ValueError(f"heat boundary value on tag {tag} must be finite")
        if self.force not in FORCE_KINDS:
            raise ValueError(f"unknown force kind {self.force!r}")
        if self.output_every < 1:
            raise ValueError("output_every must be at least 1")

    @property
    def n_steps(self):
        return round(self.t_final / self.tau)


@dataclass
class Snapshot:
    """One stored time level plus its per-element diagnostic fields."""

    state: FieldState
    nu_tilde: np.ndarray
    joule: np.ndarray


@dataclass
class SimulationResult:
    """Everything a run produces: series, snapshots, final state."""

    mesh: object
    config: ScenarioConfig
    times: np.ndarray
    series: dict
    probe_points: np.ndarray
    probe_theta: np.ndarray
    probe_phi: np.ndarray
    snapshots: list
    reports: list
    state: FieldState
    checkpoint: dict


def scenario_test1():
    """Baseline heating: parabolic inflow, resting electrode, no force."""
    material = MaterialModel()
    return ScenarioConfig(
        bc_velocity={1: "inlet", 2: "noslip", 3: "natural", 7: "noslip", 8: "noslip"},
        bc_heat={tag: material.theta_bar for tag in range(1, 7)},
        material=material,
        probes=((0.75, 0.15),),
        name="test1",
    )


def scenario_test2():
    """Saline-cooled electrode: injected flow and 20 C on the electrode."""
    cfg = scenario_test1()
    bc_v = dict(cfg.bc_velocity)
    bc_v[8] = "saline"
    bc_h = dict(cfg.bc_heat)
    bc_h[8] = 20.0
    return replace(cfg, bc_velocity=bc_v, bc_heat=bc_h, name="test2")


def scenario_test3():
    """Buoyancy-forced variant of the heating baseline."""
    return replace(scenario_test1(), force="boussinesq", name="test3")


def inlet_velocity(height):
    """Parabolic inflow profile, peak 1 at mid-height."""

    def profile(p):
        y = p[:, 1]
        return np.stack([4.0 * y * (height - y), np.zeros(len(p))], axis=1)

    return profile


def saline_velocity(length, radius):
    """Injection profile on the electrode arc."""
    half = length / 2.0
    amp = 20.0 / radius

    def profile(p):
        x, y = p[:, 0], p[:, 1]
        shape = amp * (x - half + radius) * (half + radius - x)
        return np.stack([shape * (half - x), -shape * y], axis=1)

    return profile


def velocity_bc_data(config):
    """Translate per-tag condition kinds into Dirichlet data."""
    g = config.geometry
    out = {}
    for tag, kind in config.bc_velocity.items():
        if kind == "natural":
            continue
        if kind == "noslip":
            out[tag] = (0.0, 0.0)
        elif kind == "inlet":
            out[tag] = inlet_velocity(g.height)
        elif kind == "saline":
            out[tag] = saline_velocity(g.length, g.electrode_radius)
    return out


def boussinesq_force(mesh, elements, model, theta, k):
    """Vertical buoyancy per element, opposing the temperature excess."""
    excess = element_mean(mesh, elements, theta) - model.theta_bar
    out = np.zeros((len(elements), 2))
    out[:, 1] = -k * excess
    return out


def probe_field(mesh, values, points):
    """Piecewise-linear interpolation of a vertex field at given points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri, bary = locate_points(mesh, points)
    vals = np.asarray(values, dtype=float)[mesh.triangles[tri]]
    return np.einsum("ki,ki->k", vals, bary)


_CHECKPOINT_MAGIC = b"RFACHK01"
_CHECKPOINT_ARRAYS = ("u", "pressure", "theta", "theta_m1", "theta_m2",
                      "phi_blood", "phi_tissue")
_ABSENT = 2**64 - 1


def save_checkpoint(path, checkpoint):
    """Write a resume point: 8-byte magic, step and time, then the arrays.

    Layout after the header: for each of u, pressure, theta, theta_m1,
    theta_m2, phi_blood, phi_tissue a little-endian u64 length (all-ones
    when the array is absent) followed by that many little-endian f64.
    """
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Qd", int(checkpoint["step"]), float(checkpoint["t"])))
        for key in _CHECKPOINT_ARRAYS:
            arr = checkpoint.get(key)
            if arr is None:
                fh.write(struct.pack("<Q", _ABSENT))
                continue
            data = np.asarray(arr, dtype="<f8")
            fh.write(struct.pack("<Q", data.size))
            fh.write(data.tobytes())


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint."""
    with open(path, "rb") as fh:
        if fh.read(8) != _CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        step, t = struct.unpack("<Qd", fh.read(16))
        out = {"step": step, "t": t}
        for key in _CHECKPOINT_ARRAYS:
            (size,) = struct.unpack("<Q", fh.read(8))
            if size == _ABSENT:
                out[key] = None
                continue
            out[key] = np.frombuffer(fh.read(8 * size), dtype="<f8").astype(float)
    return out


def _heat_bc(config):
    return {int(tag): float(val) for tag, val in config.bc_heat.items()}


def run(config, stop_after=None, resume_from=None):
    """Advance the scheme over the configured time grid.

    ``stop_after`` truncates the run after that many total steps (for
    checkpoint tests); ``resume_from`` is a checkpoint path to continue
    from. Series are recorded every step, snapshots every
    ``output_every`` steps; when an output directory is configured the
    mesh, snapshots, and series are written there, partial results
    included if a step fails.
    """
    mesh = build_channel_tissue_mesh(config.geometry)
    model = config.material
    vs = VelocitySpace(mesh)
    heat_space_mass = assemble_mass(ScalarSpace(mesh))
    u_mass = assemble_velocity_mass(vs)
    probes = np.atleast_2d(np.asarray(config.probes, dtype=float)) if config.probes else np.empty((0, 2))
    if len(probes):
        probe_tri, probe_bary = locate_points(mesh, probes)
    bc_vel = velocity_bc_data(config)
    bc_heat = _heat_bc(config)
    n_total = config.n_steps if stop_after is None else min(stop_after, config.n_steps)

    if resume_from is not None:
        ck = load_checkpoint(resume_from)
        start = int(ck["step"])
        state = FieldState(t=float(ck["t"]), u=ck["u"], pressure=ck["pressure"],
                           theta=ck["theta"], phi_blood=ck["phi_blood"],
                           phi_tissue=ck["phi_tissue"])
        hist1, hist2 = ck["theta_m1"], ck["theta_m2"]
    else:
        start = 0
        theta0 = np.full(mesh.n_vertices, model.theta_bar)
        pb0, pt0 = potential_step(mesh, model, theta0, config.phi_electrode)
        state = FieldState(t=0.0, u=np.zeros(vs.n_dofs),
                           pressure=np.zeros(vs.n_vert), theta=theta0,
                           phi_blood=pb0, phi_tissue=pt0)
        hist1 = hist2 = None

    times = [state.t]
    series = {k: [] for k in ("u_l2", "theta_l2", "joule_total", "theta_max",
                              "theta_argmax_x", "theta_argmax_y")}
    probe_theta, probe_phi = [], []
    snapshots = []
    reports = []

    def phi_merged():
        # potential of the subdomain each vertex belongs to; blood wins
        # at interface vertices (both sides agree on the electrode)
        merged = state.phi_tissue.copy()
        blood_verts = np.unique(mesh.triangles[mesh.blood_tris])
        merged[blood_verts] = state.phi_blood[blood_verts]
        return merged

    def record(joule):
        series["u_l2"].append(float(np.sqrt(state.u @ u_mass.matvec(state.u))))
        series["theta_l2"].append(
            float(np.sqrt(state.theta @ heat_space_mass.matvec(state.theta)))
        )
        series["joule_total"].append(float((joule * mesh.tri_areas).sum()))
        imax = int(np.argmax(state.theta))
        series["theta_max"].append(float(state.theta[imax]))
        series["theta_argmax_x"].append(float(mesh.vertices[imax, 0]))
        series["theta_argmax_y"].append(float(mesh.vertices[imax, 1]))
        if len(probes):
            tvals = state.theta[mesh.triangles[probe_tri]]
            probe_theta.append(np.einsum("ki,ki->k", tvals, probe_bary))
            pvals = phi_merged()[mesh.triangles[probe_tri]]
            probe_phi.append(np.einsum("ki,ki->k", pvals, probe_bary))
        else:
            probe_theta.append(np.empty(0))
            probe_phi.append(np.empty(0))

    joule0 = joule_field(mesh, model, state.theta, state.phi_blood, state.phi_tissue)
    record(joule0)
    nu0 = np.zeros(mesh.n_triangles)
    snapshots.append(Snapshot(state=state, nu_tilde=nu0, joule=joule0))

    def finish(failed=None):
        result = SimulationResult(
            mesh=mesh, config=config, times=np.asarray(times),
            series={k: np.asarray(v) for k, v in series.items()},
            probe_points=probes,
            probe_theta=np.asarray(probe_theta),
            probe_phi=np.asarray(probe_phi),
            snapshots=snapshots, reports=reports, state=state,
            checkpoint={
                "step": last_step,
                "t": state.t, "u": state.u, "pressure": state.pressure,
                "theta": state.theta, "theta_m1": hist1, "theta_m2": hist2,
                "phi_blood": state.phi_blood, "phi_tissue": state.phi_tissue,
            },
        )
        if config.output_dir is not None:
            _write_outputs(result)
        if failed is not None:
            raise failed
        return result

    last_step = start
    step = start
    try:
        for step in range(start + 1, n_total + 1):
            t_new = step * config.tau
            sink = []
            force = None
            if config.force == "boussinesq":
                force = boussinesq_force(mesh, vs.elements, model, state.theta,
                                         config.boussinesq_k)
            u_new, p_new = flow_step(mesh, model, state, config.tau, bc_vel,
                                     force=force, vspace=vs, report_sink=sink)
            pb, pt = potential_step(mesh, model, state.theta,
                                    config.phi_electrode,
                                    phi_blood0=state.phi_blood,
                                    phi_tissue0=state.phi_tissue,
                                    report_sink=sink)
            joule = joule_field(mesh, model, state.theta, pb, pt)
            nu = entropy_viscosity(mesh, state.theta, hist1, hist2, u_new,
                                   joule, model, config.tau, config.stab,
                                   vspace=vs)
            carrier = FieldState(t=t_new, u=u_new, pressure=p_new,
                                 theta=state.theta)
            theta_new = heat_step(mesh, model, carrier, config.tau, bc_heat,
                                  joule, nu, vspace=vs, report_sink=sink)
            hist2 = hist1
            hist1 = state.theta
            state = FieldState(t=t_new, u=u_new, pressure=p_new,
                               theta=theta_new, phi_blood=pb, phi_tissue=pt)
            if not state.is_finite():
                raise StepError("non-finite state after step")
            last_step = step
            times.append(t_new)
            record(joule)
            for stage, rep in sink:
                reports.append((step, stage, rep.iterations, rep.residual_norm,
                                rep.converged))
            if step % config.output_every == 0 or step == n_total:
                snapshots.append(Snapshot(state=state, nu_tilde=nu, joule=joule))
    except StepError as err:
        return finish(failed=RunError(
            f"step {step} (t={step * config.tau:g}) failed: {err}",
            step=step, t=step * config.tau, report=err.report))
    return finish()


def _write_outputs(result):
    import pathlib

    from .geometry import write_mesh
    from .vtkio import write_csv, write_vtk

    out = pathlib.Path(result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_mesh(result.mesh, out / "mesh.txt")
    for i, snap in enumerate(result.snapshots):
        write_vtk(result.mesh, snap.state, out / f"snapshot_{i:04d}.vtk",
                  nu_tilde=snap.nu_tilde, joule=snap.joule)
    write_csv(result, out / "series.csv")


def probe(result, point, fieldname):
    """Time series of a field at one point, one value per snapshot.

    Fields: theta, phi, phi_blood, phi_tissue, pressure, ux, uy. The
    merged phi picks the potential of the subdomain containing the
    point. Velocity and pressure are only defined in blood; probing them
    in tissue raises.
    """
    mesh = result.mesh
    point = np.asarray(point, dtype=float).reshape(1, 2)
    tri, bary = locate_points(mesh, point)
    k = int(tri[0])
    conn = mesh.triangles[k]
    in_blood = mesh.subdomain[k] == BLOOD
    if fieldname in ("pressure", "ux", "uy") and not in_blood:
        raise MeshError(f"{fieldname} is undefined in tissue")
    vs = VelocitySpace(mesh)
    out = []
    for snap in result.snapshots:
        st = snap.state
        if fieldname == "theta":
            vals = st.theta[conn]
        elif fieldname == "phi":
            vals = (st.phi_blood if in_blood else st.phi_tissue)[conn]
        elif fieldname == "phi_blood":
            vals = st.phi_blood[conn]
        elif fieldname == "phi_tissue":
            vals = st.phi_tissue[conn]
        elif fieldname == "pressure":
            vals = st.pressure[vs.vmap[conn]]
        elif fieldname in ("ux", "uy"):
            comp = 0 if fieldname == "ux" else 1
            vals = vs.vertex_field(st.u)[conn, comp]
        else:
            raise ValueError(f"unknown field {fieldname!r}")
        out.append(float(vals @ bary[0]))
    return np.asarray(out)
