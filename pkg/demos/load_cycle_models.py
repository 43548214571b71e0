"""Fit three contact models to one load/unload cycle and replay them.

Kelvin-Voigt, Hunt-Crossley and the reduced viscoelastic model are each
fitted by least squares to a 6 mm/s cycle on the stiff specimen.  The
reduced model has two physical parameters and still leaves the smallest
residual; its fit is then replayed on cycles at 4 and 8 mm/s.

    python3 demos/load_cycle_models.py
"""

from drpalp.analysis import format_table
from drpalp.contact import Sphere
from drpalp.offline import FitProblem, Model, fit_load_cycle, reconstruct_force
from drpalp.phantom import preset
from drpalp.sim import LoadCycle, SensorModel, simulate

TIP = Sphere(5e-3)


def main(seed=0):
    p = preset("S1")
    s = simulate(p, TIP, LoadCycle(speed=6e-3, max_depth=5e-3), SensorModel(seed=seed))
    fits = {m: fit_load_cycle(FitProblem(m, s, TIP, z_surf=0.0))
            for m in (Model.KV, Model.HC, Model.DR_VISCOELASTIC)}
    rows = [[m.value, r.residual, ", ".join(f"{k}={v:.4g}" for k, v in r.params.items())] for m, r in fits.items()]
    print(format_table(["model", "residual [N^2]", "parameters"], rows, title=f"6 mm/s cycle, {len(s)} samples"))
    print(f"\ntruth: E_f={p.matrix.E_f:.4g} Pa, eta={p.matrix.eta:.4g} Pa s\n")

    rows = []
    for v in (4e-3, 6e-3, 8e-3):
        other = simulate(p, TIP, LoadCycle(speed=v, max_depth=5e-3), SensorModel(seed=seed + 1))
        row = [f"{v * 1e3:g} mm/s"]
        for m, r in fits.items():
            _, e = reconstruct_force(m, r.params, -other.z_ee, other.v_meas, other.F_meas, TIP)
            row.append(float(e @ e))
        rows.append(row)
    print(format_table(["speed"] + [m.value for m in fits], rows, title="replayed residual [N^2]"))


if __name__ == "__main__":
    main()
