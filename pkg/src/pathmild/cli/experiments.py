"""Per-path experiment jobs.

Each job is a pure function of ``(config, path_index)``: it draws its own
driver from ``(master_seed, path_index)`` and returns result rows
``(path_index, t, x_index, quantity, value, method)``. Jobs share no state,
so they can run on any number of workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..evolution_family import EvolutionOracle, PropagatorScheme, derivative_residual, \
    singularity_profile
from ..grids import SpatialGrid, TimeGrid, mode_basis
from ..noise import NoiseOperator, sample_driver, smooth_covariance_root, white_covariance_root
from ..operator_family import CoefficientRecipe, build_family, cis_holder_constant, \
    kato_tanabe_constant, resolvent_bound, sector_probes
from ..oracles import bounded_A_residual, euler_maruyama, forward_mild, scalar_exact, \
    weak_residual
from ..pathwise_core import QuadratureRule, pathwise_solution
from ..regularity import estimate_exponent, holder_seminorm, sobolev_seminorm, spatial_norm
from ..semilinear import make_nonlinearity, picard_solve
from .config import applicable, is_linear, methods_of

AGG = "agg"


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything in a config that is shared by all paths."""

    cfg: dict
    sgrid: SpatialGrid
    tgrid: TimeGrid
    recipe: CoefficientRecipe
    covariance_root: np.ndarray | None
    u0: np.ndarray
    rule: QuadratureRule

    @classmethod
    def from_config(cls, cfg: dict) -> "Problem":
        p = cfg["problem"]
        sp, co, nz = p["space"], p["coefficients"], p["noise"]
        sgrid = SpatialGrid.on_interval(sp["nodes"], sp["length"], sp["boundary"])
        tgrid = TimeGrid(p["time"]["horizon"], p["time"]["steps"])
        recipe = CoefficientRecipe(co["recipe"], co["kappa0"], co["kappa1"], co["lag"], co["a0"],
                                   holder_mu=co["holder_mu"])
        if nz["covariance"] == "smooth":
            Q = smooth_covariance_root(sgrid, nz["decay"], nz["amplitude"], nz["max_modes"])
        elif nz["covariance"] == "white":
            Q = nz["amplitude"] * (np.eye(1) if sgrid.is_scalar else white_covariance_root(sgrid))
        else:
            Q = nz["amplitude"] * np.eye(sgrid.nodes)
        ini = p["initial"]
        if ini["recipe"] == "zero":
            u0 = np.zeros(sgrid.nodes)
        elif ini["recipe"] == "constant":
            u0 = np.full(sgrid.nodes, float(ini["amplitude"]))
        else:
            u0 = ini["amplitude"] * np.cos(np.pi * sgrid.x / sgrid.length)
        q = cfg["quadrature"]
        return cls(cfg, sgrid, tgrid, recipe, Q, u0, QuadratureRule(q["rule"], q["substeps"],
                                                                   q["grading"]))

    @property
    def dim(self) -> int:
        return self.sgrid.nodes

    @property
    def nonlinearity(self):
        nl = self.cfg["problem"]["nonlinearity"]
        return make_nonlinearity(nl["drift"], nl["noise"], self.dim, nl["drift_scale"],
                                 nl["noise_scale"], covariance_root=self.covariance_root)

    @property
    def noise_operator(self) -> NoiseOperator | None:
        """State-independent noise operator of a linear problem (``None`` if no noise)."""
        nl = self.cfg["problem"]["nonlinearity"]
        if nl["noise"] != "additive":
            return None
        return NoiseOperator(nl["noise_scale"] * np.eye(self.dim), self.covariance_root)

    def driver(self, path_index: int):
        return sample_driver(self.tgrid, self.dim, self.cfg["master_seed"], path_index)

    def oracle(self, driver) -> EvolutionOracle:
        family = build_family(driver, self.sgrid, self.recipe,
                              self.cfg["problem"]["coefficients"]["shift"])
        kind = self.cfg["propagator"]["scheme"]
        scheme = None if kind == "auto" else PropagatorScheme(kind)
        return EvolutionOracle(family, scheme)

    def snapshot_indices(self, tgrid: TimeGrid | None = None) -> list[int]:
        tgrid = self.tgrid if tgrid is None else tgrid
        return sorted({tgrid.index_of(t) for t in self.cfg["outputs"]["snapshots"]["times"]})

    def n_reg(self, tgrid: TimeGrid) -> float:
        n = self.cfg["forward"]["n_reg"]
        return n if n is not None else tgrid.steps / (4 * tgrid.horizon)


def solve(problem: Problem, method: str, driver, oracle: EvolutionOracle,
          indices=None) -> tuple[np.ndarray, list]:
    """States of ``method`` at ``indices`` (all nodes by default) plus diagnostic rows.

    Diagnostic rows are ``(quantity, value)`` pairs, e.g. Picard statistics.
    """
    tgrid = driver.grid
    idx = np.arange(tgrid.steps + 1) if indices is None else np.asarray(indices)
    u0, extra = problem.u0, []
    if method == "forward-mild":
        G = problem.noise_operator
        base = oracle.trajectory(u0)
        n_reg = problem.n_reg(tgrid)
        out = np.array([base[k] + (forward_mild(oracle, G, driver, int(k), n_reg)
                                   if G is not None else 0.0) for k in idx])
        return out.reshape(len(idx), problem.dim), extra
    if method == "scalar-exact":
        G = problem.noise_operator
        g = 0.0 if G is None else float(G.at(0)[0, 0])
        states = scalar_exact(oracle.family.matrices[:, 0, 0], g, driver, u0).states
    elif method == "euler-maruyama":
        states = euler_maruyama(oracle.family, u0, problem.nonlinearity, driver,
                                problem.cfg["euler_maruyama"]["scheme"]).states
    elif method == "pathwise-mild":
        if is_linear(problem.cfg):
            states = oracle.trajectory(u0)
            G = problem.noise_operator
            if G is not None:
                states = states + pathwise_solution(oracle, G, driver, problem.rule).states
        else:
            pc = problem.cfg["picard"]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sol, rep = picard_solve(oracle, u0, problem.nonlinearity, driver, pc["tol"],
                                        pc["max_iter"], problem.rule, h=problem.sgrid.spacing)
            states = sol.states
            T = tgrid.horizon
            extra = [("picard_iterations", rep.iterations),
                     ("picard_converged", float(rep.converged)),
                     ("picard_residual", rep.residual)]
            extra += [(f"contraction_factor[kappaT={k * T:g}]", rep.max_factor(k))
                      for k in rep.factors]
    else:
        raise ValueError(f"unknown method {method!r}")
    return states[idx], extra


def _state_rows(problem, path, tgrid, indices, states, method):
    rows = []
    h = problem.sgrid.spacing
    for k, u in zip(indices, states):
        t = float(tgrid.nodes[k])
        if problem.cfg["outputs"]["snapshots"]["nodes"]:
            rows += [(path, t, j, "u", float(v), method) for j, v in enumerate(u)]
        rows.append((path, t, AGG, "l2_norm", float(spatial_norm(u[None], "l2-nodes", h)[0]),
                     method))
    return rows


def _test_vectors(problem: Problem) -> list[np.ndarray]:
    V, _ = mode_basis(problem.sgrid)
    return [V[:, i] for i in range(min(3, problem.dim))]


def simulate_job(problem: Problem, path: int) -> list:
    driver = problem.driver(path)
    oracle = problem.oracle(driver)
    tgrid, T = driver.grid, driver.grid.horizon
    snaps = problem.snapshot_indices()
    residuals = problem.cfg["outputs"]["residuals"]
    rows = []
    for method in methods_of(problem.cfg):
        full = residuals and method != "forward-mild"
        states, extra = solve(problem, method, driver, oracle, None if full else snaps)
        snap_states = states[snaps] if full else states
        rows += _state_rows(problem, path, tgrid, snaps, snap_states, method)
        rows += [(path, T, AGG, q, float(v), method) for q, v in extra]
        if full:
            G = problem.noise_operator or NoiseOperator(np.zeros((problem.dim, problem.dim)))
            if "weak" in residuals:
                r = max(weak_residual(states, oracle.family, G, driver, x, problem.u0)
                        for x in _test_vectors(problem))
                rows.append((path, T, AGG, "weak_residual", r, method))
            if "bounded-A" in residuals:
                r = bounded_A_residual(states, oracle.family, G, driver, problem.u0)
                rows.append((path, T, AGG, "bounded_A_residual", r, method))
    return rows


def _rel_rms(U, R) -> float:
    den = np.sqrt(np.sum(R**2))
    num = np.sqrt(np.sum((U - R) ** 2))
    return float(num / den) if den > 0 else float(num)


def _reference(problem: Problem, method: str, driver, factor: int, indices):
    fine = driver.refined_to(driver.grid.steps * factor)
    states, _ = solve(problem, method, fine, problem.oracle(fine),
                      [k * factor for k in indices])
    return states


def compare_job(problem: Problem, path: int) -> list:
    driver = problem.driver(path)
    oracle = problem.oracle(driver)
    T = driver.grid.horizon
    snaps = problem.snapshot_indices()
    methods = methods_of(problem.cfg)
    sols, rows = {}, []
    for m in methods:
        sols[m], extra = solve(problem, m, driver, oracle, snaps)
        rows += _state_rows(problem, path, driver.grid, snaps, sols[m], m)
        rows += [(path, T, AGG, q, float(v), m) for q, v in extra]
    for i, a in enumerate(methods):
        for b in methods[i + 1:]:
            rows.append((path, T, AGG, f"rel_rms[vs={b}]", _rel_rms(sols[a], sols[b]), a))
    cmp = problem.cfg["outputs"]["compare"]
    if cmp["reference_factor"]:
        R = _reference(problem, cmp["reference_method"], driver, cmp["reference_factor"], snaps)
        for m in methods:
            rows.append((path, T, AGG, "rel_rms_vs_reference", _rel_rms(sols[m], R), m))
    return rows


def regularity_job(problem: Problem, path: int) -> list:
    driver = problem.driver(path)
    oracle = problem.oracle(driver)
    dt, T = driver.grid.dt, driver.grid.horizon
    sm = problem.cfg["outputs"]["seminorms"]
    norm, h = sm["norm"], problem.sgrid.spacing
    rows = []
    for method in methods_of(problem.cfg):
        if method == "forward-mild":
            continue
        states, _ = solve(problem, method, driver, oracle)
        f = states - oracle.trajectory(problem.u0)
        rep = estimate_exponent(f, dt, norm, h, sm["max_lag_fraction"])
        rows.append((path, T, AGG, "exponent", rep.estimated_exponent, method))
        rows.append((path, T, AGG, "exponent_r2", rep.regression_r2, method))
        for lag, m in zip(rep.lags, rep.median_increments):
            rows.append((path, lag * dt, AGG, "median_increment", m, method))
        for a in sm["alpha"]:
            rows.append((path, T, AGG, f"holder[alpha={a:g}]",
                         holder_seminorm(f, a, dt, norm, h), method))
            rows.append((path, T, AGG, f"sobolev[alpha={a:g},p={sm['p']:g}]",
                         sobolev_seminorm(f, a, sm["p"], dt, norm, h), method))
    return rows


def conditions_job(problem: Problem, path: int) -> list:
    driver = problem.driver(path)
    oracle = problem.oracle(driver)
    family, T = oracle.family, driver.grid.horizon
    cond = problem.cfg["outputs"]["conditions"]
    mu = cond["mu"]
    rb = resolvent_bound(family, sector_probes(tuple(cond["probe_radii"])))
    prof = singularity_profile(oracle, stride=max(1, driver.grid.steps // 32))
    vals = [
        ("resolvent_bound", rb.bound),
        (f"cis_holder_constant[mu={mu:g}]", cis_holder_constant(family, mu)),
        (f"kato_tanabe_constant[mu={mu:g}]", kato_tanabe_constant(family, mu)),
        ("ellipticity", float(family.coefficients.ellipticity_holds())),
        ("S_bound", prof["S_bound"]),
        ("SA_bound", prof["SA_bound"]),
    ]
    if driver.grid.steps >= 3:
        vals.append(("derivative_residual", derivative_residual(oracle)))
    return [(path, T, AGG, q, float(v), "operator-family") for q, v in vals]


def convergence_levels(problem: Problem) -> list[int]:
    k = problem.cfg["outputs"]["convergence"]["levels"]
    return [problem.tgrid.steps * 2**i for i in range(k)]


def reference_method(problem: Problem) -> str:
    ref = problem.cfg["outputs"]["convergence"]["reference_method"]
    if ref == "auto":
        return "scalar-exact" if applicable(problem.cfg, "scalar-exact") else "pathwise-mild"
    return ref


def convergence_job(problem: Problem, path: int) -> list:
    conv = problem.cfg["outputs"]["convergence"]
    levels = convergence_levels(problem)
    ref_steps = levels[-1] * conv["reference_factor"]
    fine = problem.driver(path).refined_to(ref_steps)
    ref_method = reference_method(problem)
    R, _ = solve(problem, ref_method, fine, problem.oracle(fine))
    h, T = problem.sgrid.spacing, problem.tgrid.horizon
    rows = []
    for method in methods_of(problem.cfg):
        if method == "forward-mild":
            continue
        for N in levels:
            d = fine.coarsen(ref_steps // N)
            U, _ = solve(problem, method, d, problem.oracle(d))
            err = spatial_norm(U - R[:: ref_steps // N], "l2-nodes", h).max()
            rows.append((path, T, AGG, f"sup_error[steps={N}]", float(err), method))
    return rows


JOBS = {
    "simulate": simulate_job,
    "compare": compare_job,
    "regularity": regularity_job,
    "conditions": conditions_job,
    "convergence": convergence_job,
}
