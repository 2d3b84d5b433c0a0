"""Named studies run by the command line tool.

Each study returns a list of :class:`Table`; the first column is always
``frequency_hz`` and the second ``value``. The meaning of both is stated in
the table's units (for landscapes and sweeps the "frequency" axis is the idler
offset Delta in Hz). dB values are power ratios against the unsqueezed curve
of the same configuration.
"""
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .cavity import coupled_cavity_response
from .geo import TWO_PI, GeoModel, LossBudget, sensitivity
from .optimize import optimize_epr, optimize_epr_branches, scan_landscape


@dataclass
class Table:
    name: str
    columns: dict              # column name -> 1-D array
    units: dict                # column name -> unit string
    meta: dict = field(default_factory=dict)


def _objective(run, default):
    obj = run.optimizer["objective"]
    return default if obj == "auto" else obj


def _opt_kwargs(run, objective):
    kw = dict(n_delta=run.optimizer["n_delta"], n_phi=run.optimizer["n_phi"])
    if objective == "band_integrated":
        kw["band"] = (run.optimizer["band_min_hz"], run.optimizer["band_max_hz"])
    return kw


def _optimize(run, config, N, default_objective="noise_at_detuning", **extra):
    objective = _objective(run, default_objective)
    return optimize_epr(config, N, objective, **_opt_kwargs(run, objective), **extra)


def _curve_table(name, curve, extra=None, meta=None):
    cols = {"frequency_hz": curve.frequencies, "value": curve.asd,
            "improvement_db": curve.improvement_db, "noise": curve.noise}
    units = {"frequency_hz": "Hz", "value": "strain/sqrt(Hz)", "improvement_db": "dB",
             "noise": "vacuum units"}
    m = dict(curve.metadata)
    m.update(meta or {})
    if extra:
        cols.update(extra)
    return Table(name, cols, units, m)


def _opt_meta(res):
    return {"delta_hz": res.delta_opt / TWO_PI, "phi_b_rad": res.phi_b_opt, "k": res.k_opt,
            "branch": res.branch, "n_fsr": res.n_fsr,
            "noise_at_detuning_db": 10 * np.log10(res.noise_at_detuning)}


def run_sensitivity(run):
    cfg = run.geo
    f = run.frequencies()
    N = run.optimizer["n_fsr"]
    res = _optimize(run, cfg, N)
    curves = [
        ("no_sqz_tuned", sensitivity(cfg.replace(detuning=0.0), "no_squeezing", f), {}),
        ("no_sqz_detuned", sensitivity(cfg, "no_squeezing", f), {}),
        ("dc_readout", sensitivity(cfg, "dc_readout_fixed_sqz", f,
                                   single_mode_db=run.study["single_mode_db"]), {}),
        ("epr_lower", sensitivity(res.config, "epr", f, optimization=res), _opt_meta(res)),
    ]
    return [_curve_table(name, c, meta=m) for name, c, m in curves]


def run_optimize_landscape(run):
    cfg = run.geo
    N = run.optimizer["n_fsr"]
    objective = _objective(run, "noise_at_detuning")
    kw = _opt_kwargs(run, objective)
    obj, land = scan_landscape(cfg, N, objective=objective, **kw)
    unsq = obj.gm.vacuum_noise(obj.omegas)[0]
    noise = land.noise if objective == "band_integrated" else 10 * np.log10(land.noise / unsq)
    D, P = np.meshgrid(land.deltas / TWO_PI, land.phis, indexing="ij")
    units = {"frequency_hz": "Hz (idler offset Delta)", "value": "dB rel. unsqueezed",
             "phi_b_rad": "rad"}
    grid = Table("landscape", {"frequency_hz": D.ravel(), "value": noise.ravel(),
                               "phi_b_rad": P.ravel()}, units, {"n_fsr": N, "objective": objective})
    best = np.argmin(noise, axis=1)
    profile = Table("profile", {"frequency_hz": land.deltas / TWO_PI,
                                "value": noise[np.arange(len(best)), best],
                                "phi_b_rad": land.phis[best]}, units, {"n_fsr": N})
    tables = [grid, profile]
    results = optimize_epr_branches(cfg, N, objective, **kw)
    for branch, res in results.items():
        profile.meta["optimum_" + branch] = _opt_meta(res)
    return tables


def run_homodyne_sweep(run):
    cfg = run.geo
    f = run.frequencies()
    gm = GeoModel(cfg)
    tables = []
    for deg in run.study["homodyne_angles_deg"]:
        s = gm.signal_response(TWO_PI * f, np.deg2rad(deg))
        tables.append(Table("theta_%03d" % round(deg),
                            {"frequency_hz": f, "value": np.abs(s), "phase_rad": np.angle(s)},
                            {"frequency_hz": "Hz", "value": "sqrt(W) per unit strain (vacuum units)",
                             "phase_rad": "rad"},
                            {"theta_deg": deg}))
    return tables


def run_schnupp_study(run):
    cfg = run.geo
    f = run.frequencies()
    N0 = run.optimizer["n_fsr"]
    tables = []
    for ls in run.study["schnupp_lengths"]:
        for N in run.study["schnupp_n_fsr"]:
            c = cfg.replace(schnupp_ls=ls)
            res = _optimize(run, c, N, "band_integrated")
            curve = sensitivity(res.config, "epr", f, optimization=res)
            m = _opt_meta(res)
            m.update(schnupp_ls=ls)
            tables.append(_curve_table("ls_%03dcm_n%03d" % (round(100 * ls), N), curve, meta=m))
    # PRM transmission at fixed arm power, largest asymmetry
    ls = max(run.study["schnupp_lengths"])
    arm_power = GeoModel(cfg.replace(omc=None)).arm_power
    for tp in run.study["prm_transmissions"]:
        c = cfg.replace(schnupp_ls=ls, T_PRM=tp, fixed_arm_power=arm_power)
        res = _optimize(run, c, N0, "band_integrated")
        curve = sensitivity(res.config, "epr", f, optimization=res)
        m = _opt_meta(res)
        m.update(schnupp_ls=ls, T_PRM=tp, arm_power_w=arm_power)
        tables.append(_curve_table("prm_%gppm" % round(tp * 1e6), curve, meta=m))
    return tables


def _omc_point(run, cfg, N):
    objective = _objective(run, "noise_at_detuning")
    res = optimize_epr_branches(cfg, N, objective, require_improvement=False,
                                **_opt_kwargs(run, objective))
    return res.get("lower") or res["upper"]


def run_omc_sweep(run):
    cfg = run.geo
    if cfg.omc is None:
        from .cavity import OmcSpec
        cfg = cfg.replace(omc=OmcSpec(TWO_PI * 1.4e6, TWO_PI * 435e6))
    s = run.study
    ns = np.arange(s["omc_n_min"], s["omc_n_max"] + 1, s["omc_n_step"])
    ideal = cfg.replace(omc=None)
    real_db, ideal_db, deltas = [], [], []
    for N in ns:
        r = _omc_point(run, cfg, int(N))
        i = _omc_point(run, ideal, int(N))
        real_db.append(-10 * np.log10(r.noise_at_detuning))
        ideal_db.append(-10 * np.log10(i.noise_at_detuning))
        deltas.append(r.delta_opt / TWO_PI)
    real_db, ideal_db = np.array(real_db), np.array(ideal_db)
    cols = {"frequency_hz": np.array(deltas), "value": real_db, "n_fsr": ns.astype(float),
            "ideal_db": ideal_db, "degradation_db": ideal_db - real_db}
    units = {"frequency_hz": "Hz (optimised Delta)", "value": "dB noise reduction at detuning",
             "n_fsr": "Delta / omega_SRC", "ideal_db": "dB", "degradation_db": "dB"}
    meta = {"omc_linewidth_hz": cfg.omc.linewidth / TWO_PI, "omc_fsr_hz": cfg.omc.fsr / TWO_PI}
    return [Table("omc_sweep", cols, units, meta)]


def _loss_tables(run, budgets, tag):
    cfg = run.geo
    f = run.frequencies()
    N = run.optimizer["n_fsr"]
    tables = []
    for value, budget in budgets:
        c = cfg.replace(losses=budget)
        res = _optimize(run, c, N)
        epr = sensitivity(res.config, "epr", f, optimization=res)
        fd = sensitivity(c, "ideal_fd_sqz", f, single_mode_db=run.study["single_mode_db"])
        m = _opt_meta(res)
        m["losses"] = dataclasses.asdict(budget)
        label = "%s_%gpct" % (tag, round(100 * value, 4))
        tables.append(_curve_table(label + "_epr", epr, meta=m))
        tables.append(_curve_table(label + "_fd", fd))
    return tables


def run_loss_io(run):
    base = run.geo.losses
    budgets = [(x, dataclasses.replace(base, input_loss=x, output_loss=x))
               for x in run.study["io_losses"]]
    return _loss_tables(run, budgets, "io")


def run_loss_symmetric(run):
    base = run.geo.losses
    budgets = [(x, dataclasses.replace(base, internal_symmetric=x)) for x in run.study["internal_losses"]]
    return _loss_tables(run, budgets, "sym")


def run_loss_asymmetric(run):
    base = run.geo.losses
    budgets = [(x, dataclasses.replace(base, internal_asymmetric=x))
               for x in run.study["internal_losses"]]
    return _loss_tables(run, budgets, "asym")


def run_coupled_cavity(run):
    cfg = run.geo
    N = run.optimizer["n_fsr"]
    span = run.study["coupled_span_hz"]
    rel = np.linspace(-span, span, run.study["coupled_points"])
    offsets = N * cfg.omega_src + TWO_PI * rel
    m = coupled_cavity_response(cfg, offsets, run.study["coupled_schnupp_lengths"])
    tables = []
    for i, ls in enumerate(m.schnupp):
        tables.append(Table("ls_%03dcm" % round(100 * ls),
                            {"frequency_hz": offsets / TWO_PI, "value": m.src_power[i],
                             "prc_power_w": m.prc_power[i], "src_phase_rad": m.src_phase[i],
                             "offset_from_n_fsr_hz": rel},
                            {"frequency_hz": "Hz (probe offset from carrier)",
                             "value": "W (SRC circulating, 1 W probe)", "prc_power_w": "W",
                             "src_phase_rad": "rad", "offset_from_n_fsr_hz": "Hz"},
                            {"schnupp_ls": float(ls), "n_fsr": N}))
    return tables


SCENARIOS = {
    "sensitivity": run_sensitivity,
    "optimize-landscape": run_optimize_landscape,
    "homodyne-sweep": run_homodyne_sweep,
    "schnupp-study": run_schnupp_study,
    "omc-sweep": run_omc_sweep,
    "loss-io": run_loss_io,
    "loss-symmetric": run_loss_symmetric,
    "loss-asymmetric": run_loss_asymmetric,
    "coupled-cavity": run_coupled_cavity,
}
