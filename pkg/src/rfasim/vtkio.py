"""Field output: legacy VTK snapshots and CSV time series.

The VTK writer emits ASCII UNSTRUCTURED_GRID files with nine significant
digits, enough to recover fields to 1e-6 when re-parsed. Pressure is
only defined at blood vertices and is written as nan elsewhere; velocity
is written as its vertex part, zero in tissue.
"""

import csv

import numpy as np

from .geometry import BLOOD
from .assembly import VelocitySpace


def _merged_potential(mesh, state):
    out = state.phi_tissue.copy()
    blood_verts = np.unique(mesh.triangles[mesh.blood_tris])
    out[blood_verts] = state.phi_blood[blood_verts]
    return out


def _scalar_lines(fh, name, values):
    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    for v in values:
        fh.write(f"{v:.9e}\n")


def write_vtk(mesh, state, path, nu_tilde=None, joule=None):
    """Write one time level as a legacy VTK unstructured grid."""
    vs = VelocitySpace(mesh)
    nv, nt = mesh.n_vertices, mesh.n_triangles
    phi = _merged_potential(mesh, state)
    pressure = np.full(nv, np.nan)
    pressure[vs.vertex_ids] = state.pressure
    velocity = vs.vertex_field(state.u)
    nu_tilde = np.zeros(nt) if nu_tilde is None else np.asarray(nu_tilde)
    joule = np.zeros(nt) if joule is None else np.asarray(joule)

    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"ablation fields at t={state.t:.9e}\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.9e} {y:.9e} 0.0\n")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write("5\n" * nt)
        fh.write(f"POINT_DATA {nv}\n")
        _scalar_lines(fh, "theta", state.theta)
        _scalar_lines(fh, "phi", phi)
        _scalar_lines(fh, "pressure", pressure)
        fh.write("VECTORS velocity double\n")
        for ux, uy in velocity:
            fh.write(f"{ux:.9e} {uy:.9e} 0.0\n")
        fh.write(f"CELL_DATA {nt}\n")
        fh.write("SCALARS subdomain int 1\nLOOKUP_TABLE default\n")
        for s in mesh.subdomain:
            fh.write(f"{int(s)}\n")
        _scalar_lines(fh, "nu_tilde", nu_tilde)
        _scalar_lines(fh, "joule", joule)


def write_csv(result, path):
    """Write the per-step series of a run as RFC-4180 CSV."""
    header = ["t", "u_l2", "theta_l2", "joule_total", "theta_max",
              "theta_argmax_x", "theta_argmax_y"]
    n_probes = result.probe_points.shape[0]
    for i in range(n_probes):
        header += [f"theta_probe_{i + 1}", f"phi_probe_{i + 1}"]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row_idx, t in enumerate(result.times):
            row = [f"{t:.17g}"]
            for key in ("u_l2", "theta_l2", "joule_total", "theta_max",
                        "theta_argmax_x", "theta_argmax_y"):
                row.append(f"{result.series[key][row_idx]:.17g}")
            for i in range(n_probes):
                row.append(f"{result.probe_theta[row_idx, i]:.17g}")
                row.append(f"{result.probe_phi[row_idx, i]:.17g}")
            writer.writerow(row)
