"""Exact simulation of the count process and its compensated martingale.

Two samplers are provided.  ``simulate_ssa`` is the direct method:
exponential holding times at the total rate, the jump drawn in proportion
to its rate.  ``simulate_time_change`` drives each jump direction by its
own unit-rate Poisson stream through the random time change, with the
stream seeded from a pseudorandom function of the master seed and a
canonical serialization of the direction.  Both sample the same law; the
distributional agreement is part of the test suite.

Models beyond the built-in metapopulation family plug in through a small
protocol: ``scaled_rates(counts, scale)`` returning (jump, rate) pairs in
a deterministic order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import hashlib

import numpy as np

from . import _kernels as _k
from .model import ModelSpec, drift_total_batch
from .state import JumpVector, RateEntry, RateTable, SparseCounts, Trajectory

__all__ = [
    "EventBudgetError",
    "enumerate_rates",
    "simulate_ssa",
    "simulate_time_change",
    "martingale_path",
    "replica_seeds",
    "run_replicas",
    "DEFAULT_EVENT_CAP",
]

DEFAULT_EVENT_CAP = 10 ** 8
_U64 = (1 << 64) - 1


class EventBudgetError(RuntimeError):
    """A trajectory exceeded its event budget before reaching the horizon."""


def enumerate_rates(model, X: SparseCounts, scale: int) -> RateTable:
    """Active transitions out of state X with their total (count-level) rates.

    For the metapopulation model the migration family is enumerated over
    source/destination size pairs (i, k).  The same-size pair (i, i) is
    split exactly: a migrant choosing one of the other X^i - 1 patches of
    its own size (which drains size i twice), and the self-move where the
    destination is the migrant's own patch (listed, but a null jump).
    Null entries are part of the table; they carry zero jump vectors and
    do not affect the state.
    """
    if not isinstance(model, ModelSpec):
        entries = [
            RateEntry(jump=J, rate=float(r), family="generic", source=n)
            for n, (J, r) in enumerate(model.scaled_rates(X, scale))
            if r > 0.0
        ]
        return RateTable(entries)

    N = float(scale)
    support = sorted(X.entries)
    w = (support[-1] + 2) if support else 2
    bi = model.birth_rates(w)
    di = model.death_rates(w)
    gmig = model.migration_rate
    entries: list[RateEntry] = []
    for i in support:
        xi = X.entries[i]
        if i >= 1:
            if i == 1:
                rate = xi * (di[1] + model.migration_loss + model.kappa)
            else:
                rate = i * xi * (di[i] + model.migration_loss)
            if rate > 0.0:
                entries.append(RateEntry(
                    JumpVector.from_dict({i - 1: 1, i: -1}), rate, "down", i))
            if bi[i] > 0.0:
                entries.append(RateEntry(
                    JumpVector.from_dict({i + 1: 1, i: -1}), i * xi * bi[i], "up", i))
            if i >= 2 and model.kappa > 0.0:
                entries.append(RateEntry(
                    JumpVector.from_dict({0: 1, i: -1}), model.kappa * xi,
                    "catastrophe", i))
    if gmig > 0.0:
        for i in support:
            if i < 1:
                continue
            xi = X.entries[i]
            for k in support:
                xk = X.entries[k]
                if k == i:
                    if xi >= 2:
                        entries.append(RateEntry(
                            JumpVector.from_dict({i - 1: 1, i: -2, i + 1: 1}),
                            gmig * i * xi * (xi - 1) / N, "migration", i, k))
                    entries.append(RateEntry(
                        JumpVector.from_dict({}), gmig * i * xi / N,
                        "migration", i, k, self_move=True))
                else:
                    deltas: dict[int, int] = {}
                    for j, dd in ((k + 1, 1), (k, -1), (i - 1, 1), (i, -1)):
                        deltas[j] = deltas.get(j, 0) + dd
                    entries.append(RateEntry(
                        JumpVector.from_dict(deltas), gmig * i * xi * xk / N,
                        "migration", i, k))
    return RateTable(entries)


def _active_jumps(model, X: SparseCounts, scale: int) -> list[tuple[JumpVector, float]]:
    """State-changing transitions only, in deterministic order."""
    table = enumerate_rates(model, X, scale)
    return [(e.jump, e.rate) for e in table if not e.jump.is_null]


def _normalize_grid(grid, horizon: float) -> np.ndarray:
    if grid is None:
        grid = np.linspace(0.0, horizon, 201)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > horizon:
        raise ValueError("grid must be ascending within [0, horizon]")
    return grid


def _kernel_seed(seed: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(int(seed) & _U64)
    s0, s1 = ss.generate_state(2, np.uint32)
    return int(s0), int(s1 & 0x3FF)


def simulate_ssa(model, x0: SparseCounts, scale: int, horizon: float, seed: int,
                 record: str = "grid", grid=None,
                 event_cap: int = DEFAULT_EVENT_CAP) -> Trajectory:
    """Exact direct-method sample path of the count process.

    ``record="jumps"`` keeps every state-changing event; ``record="grid"``
    keeps snapshots at the given times (defaults to 201 points spanning
    the horizon).  Given identical (model, x0, scale, horizon, seed) the
    trajectory is bit-identical.
    """
    _check_args(model, x0, scale, horizon, record)
    if isinstance(model, ModelSpec):
        return _simulate_kernel(model, x0, scale, horizon, seed, record, grid,
                                event_cap)
    return _simulate_generic(model, x0, scale, horizon, seed, record, grid,
                             event_cap)


def _check_args(model, x0: SparseCounts, scale: int, horizon: float, record: str):
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if record not in ("jumps", "grid"):
        raise ValueError(f"unknown recording mode {record!r}")
    if scale < 1:
        raise ValueError("scale must be a positive patch count")
    if isinstance(model, ModelSpec) and x0.total != scale:
        raise ValueError(f"initial counts total {x0.total}, expected {scale}")


def _simulate_kernel(model: ModelSpec, x0: SparseCounts, scale: int,
                     horizon: float, seed: int, record: str, grid,
                     event_cap: int) -> Trajectory:
    W = max(64, 2 * (x0.width + 4))
    X = x0.to_dense(W)
    mode = 0 if record == "jumps" else 1
    if mode == 1:
        grid_arr = _normalize_grid(grid, horizon)
        grid_out = np.zeros((grid_arr.size, W), dtype=np.int64)
    else:
        grid_arr = np.zeros(0)
        grid_out = np.zeros((0, W), dtype=np.int64)
    rec_cap = 1 << 16 if mode == 0 else 0
    rec_t = np.zeros(rec_cap)
    rec_fam = np.zeros(rec_cap, dtype=np.int8)
    rec_a = np.zeros(rec_cap, dtype=np.int32)
    rec_b = np.zeros(rec_cap, dtype=np.int32)

    s0, burn = _kernel_seed(seed)
    t = 0.0
    events = 0
    grid_pos = 0
    rec_pos = 0
    first = True
    while True:
        bi = model.birth_rates(W)
        di = model.death_rates(W)
        status, t, events, grid_pos, rec_pos = _k.ssa_kernel(
            X, bi, di, model.migration_loss, model.migration_rate, model.kappa,
            scale, t, float(horizon), s0 if first else -1, burn,
            events, event_cap, mode, grid_arr, grid_pos, grid_out,
            rec_t, rec_fam, rec_a, rec_b, rec_pos)
        first = False
        if status == _k.STATUS_GROW_STATE:
            X = np.concatenate([X, np.zeros(W, dtype=np.int64)])
            if mode == 1:
                grid_out = np.hstack(
                    [grid_out, np.zeros((grid_out.shape[0], W), dtype=np.int64)])
            W *= 2
        elif status == _k.STATUS_GROW_RECORD:
            ext = rec_t.size
            rec_t = np.concatenate([rec_t, np.zeros(ext)])
            rec_fam = np.concatenate([rec_fam, np.zeros(ext, dtype=np.int8)])
            rec_a = np.concatenate([rec_a, np.zeros(ext, dtype=np.int32)])
            rec_b = np.concatenate([rec_b, np.zeros(ext, dtype=np.int32)])
        elif status == _k.STATUS_BUDGET:
            raise EventBudgetError(
                f"event budget {event_cap} exhausted at t = {t:.6g}")
        else:
            absorbed = status == _k.STATUS_ABSORBED
            break

    if mode == 1:
        return Trajectory(times=grid_arr.copy(), counts=grid_out, scale=scale,
                          mode="grid", events=events, absorbed=absorbed,
                          t_end=float(horizon))
    counts = _reconstruct(x0.to_dense(W), rec_fam[:rec_pos], rec_a[:rec_pos],
                          rec_b[:rec_pos])
    times = np.concatenate([[0.0], rec_t[:rec_pos]])
    return Trajectory(times=times, counts=counts, scale=scale, mode="jumps",
                      events=events, absorbed=absorbed,
                      t_end=float(horizon) if not absorbed else float(times[-1]))


def _reconstruct(x0_dense: np.ndarray, fam: np.ndarray, a: np.ndarray,
                 b: np.ndarray) -> np.ndarray:
    """Rebuild dense states from the initial state and the event records."""
    n = fam.size
    W = x0_dense.size
    D = np.zeros((n, W), dtype=np.int64)
    r = np.arange(n)
    down = fam == _k.FAM_DOWN
    up = fam == _k.FAM_UP
    cat = fam == _k.FAM_CAT
    mig = fam == _k.FAM_MIG
    np.add.at(D, (r[down], a[down] - 1), 1)
    np.add.at(D, (r[down], a[down]), -1)
    np.add.at(D, (r[up], a[up] + 1), 1)
    np.add.at(D, (r[up], a[up]), -1)
    np.add.at(D, (r[cat], np.zeros(np.sum(cat), dtype=np.int64)), 1)
    np.add.at(D, (r[cat], a[cat]), -1)
    np.add.at(D, (r[mig], a[mig] - 1), 1)
    np.add.at(D, (r[mig], a[mig]), -1)
    np.add.at(D, (r[mig], b[mig] + 1), 1)
    np.add.at(D, (r[mig], b[mig]), -1)
    return np.vstack([x0_dense[None, :], x0_dense[None, :] + np.cumsum(D, axis=0)])


def _simulate_generic(model, x0: SparseCounts, scale: int, horizon: float,
                      seed: int, record: str, grid, event_cap: int) -> Trajectory:
    """Direct method over the model's enumerated rate list (any model)."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & _U64))

    def draw(entries, total):
        u = rng.random() * total
        acc = 0.0
        for J, r in entries:
            acc += r
            if acc > u:
                return J
        return entries[-1][0]

    return _event_loop(model, x0, scale, horizon, record, grid, event_cap,
                       lambda entries, total: rng.exponential() / total, draw,
                       None)


def _direction_rng(seed: int, key: bytes) -> np.random.Generator:
    """Pseudorandom function from (seed, direction) to an independent stream."""
    mac = hashlib.blake2b(key, digest_size=16,
                          key=int(seed & _U64).to_bytes(8, "little"))
    return np.random.default_rng(int.from_bytes(mac.digest(), "little"))


def simulate_time_change(model, x0: SparseCounts, scale: int, horizon: float,
                         seed: int, record: str = "grid", grid=None,
                         event_cap: int = DEFAULT_EVENT_CAP) -> Trajectory:
    """Sample path through the random time-change representation.

    Every jump direction J owns a unit-rate Poisson stream, seeded from a
    keyed hash of the canonical serialization of J; the stream is created
    lazily the first time its direction becomes active and keeps its
    internal clock for the rest of the path.  Directions fire when their
    integrated rate (the compensator, advanced piecewise linearly between
    events) reaches the stream's next arrival.
    """
    _check_args(model, x0, scale, horizon, record)
    streams: dict[bytes, list] = {}
    pending: list[JumpVector] = []

    def holding(entries, total):
        best_dt = np.inf
        best: JumpVector | None = None
        waits = []
        for J, r in entries:
            key = J.canonical_key()
            st = streams.get(key)
            if st is None:
                srng = _direction_rng(seed, key)
                st = [srng, srng.exponential(), 0.0]
                streams[key] = st
            wJ = (st[1] - st[2]) / r
            waits.append(wJ)
            if wJ < best_dt or (wJ == best_dt and best is not None
                                and key < best.canonical_key()):
                best_dt = wJ
                best = J
        for (J, r), wJ in zip(entries, waits):
            streams[J.canonical_key()][2] += r * best_dt
        pending.clear()
        pending.append(best)
        return best_dt

    def draw(entries, total):
        best = pending.pop()
        st = streams[best.canonical_key()]
        st[1] += st[0].exponential()
        return best

    return _event_loop(model, x0, scale, horizon, record, grid, event_cap,
                       holding, draw, streams)


def _event_loop(model, x0: SparseCounts, scale: int, horizon: float,
                record: str, grid, event_cap: int, holding, draw, streams):
    X = x0.copy()
    t = 0.0
    mode_grid = record == "grid"
    if mode_grid:
        grid_arr = _normalize_grid(grid, horizon)
        snaps: list[dict[int, int]] = []
        gpos = 0
        while gpos < grid_arr.size and grid_arr[gpos] <= t:
            snaps.append(dict(X.entries))
            gpos += 1
    else:
        times = [0.0]
        states = [dict(X.entries)]
    events = 0
    absorbed = False
    while True:
        entries = _active_jumps(model, X, scale)
        total = sum(r for _, r in entries)
        if total <= 0.0:
            absorbed = True
            t_stop = t
            break
        if events >= event_cap:
            raise EventBudgetError(
                f"event budget {event_cap} exhausted at t = {t:.6g}")
        dt = holding(entries, total)
        if t + dt >= horizon:
            t_stop = horizon
            break
        t += dt
        if mode_grid:
            while gpos < grid_arr.size and grid_arr[gpos] < t:
                snaps.append(dict(X.entries))
                gpos += 1
        J = draw(entries, total)
        X = X.apply_jump(J)
        events += 1
        if not mode_grid:
            times.append(t)
            states.append(dict(X.entries))

    if mode_grid:
        while gpos < grid_arr.size:
            snaps.append(dict(X.entries))
            gpos += 1
        W = max(max(s) + 1 if s else 1 for s in snaps)
        counts = np.zeros((len(snaps), W), dtype=np.int64)
        for n, s in enumerate(snaps):
            for j, c in s.items():
                counts[n, j] = c
        return Trajectory(times=grid_arr.copy(), counts=counts, scale=scale,
                          mode="grid", events=events, absorbed=absorbed,
                          t_end=float(horizon))
    W = max(max(s) + 1 if s else 1 for s in states)
    counts = np.zeros((len(states), W), dtype=np.int64)
    for n, s in enumerate(states):
        for j, c in s.items():
            counts[n, j] = c
    return Trajectory(times=np.asarray(times), counts=counts, scale=scale,
                      mode="jumps", events=events, absorbed=absorbed,
                      t_end=float(t_stop))


def martingale_path(traj: Trajectory, model) -> np.ndarray:
    """Compensated density path m_t = x_t - x_0 - integral of the drift.

    Needs a jump-recorded trajectory: between its points the state is
    exactly constant, so the compensator integral is a finite sum with no
    quadrature error.  The drift is that of the simulated finite-N system
    (same-size migration counted exactly), making m an exact martingale.
    Columns are padded by two so boundary flows are kept.  Rows follow
    traj.times, plus one final row at traj.t_end when the horizon extends
    past the last event, so m[-1] is always the value at the horizon.
    """
    if traj.mode != "jumps":
        raise ValueError("martingale_path needs a jump-recorded trajectory")
    dens = np.hstack([traj.densities(),
                      np.zeros((len(traj.times), 2))])
    if isinstance(model, ModelSpec):
        drift = drift_total_batch(model, dens, scale=traj.scale)
    else:
        drift = np.zeros_like(dens)
        for n in range(dens.shape[0]):
            table = enumerate_rates(
                model, SparseCounts.from_dense(traj.counts[n]), traj.scale)
            drift[n] = table.drift(dens.shape[1]) / traj.scale
    holds = np.diff(np.concatenate([traj.times, [traj.t_end]]))
    integral = np.vstack([np.zeros(dens.shape[1]),
                          np.cumsum(drift * holds[:, None], axis=0)])
    m = dens - dens[0] - integral[:-1]
    if traj.t_end > traj.times[-1]:
        m = np.vstack([m, dens[-1] - dens[0] - integral[-1]])
    return m


def replica_seeds(master_seed: int, n: int) -> list[int]:
    """Per-replica seeds: master xor replica index."""
    return [(int(master_seed) ^ i) & _U64 for i in range(n)]


def run_replicas(worker, master_seed: int, n: int, workers: int = 1) -> list:
    """Run worker(replica_index, seed) for each replica, results in order.

    With workers > 1 replicas are farmed to a process pool; the reduction
    keeps replica order, so results do not depend on scheduling.
    """
    seeds = replica_seeds(master_seed, n)
    if workers <= 1:
        return [worker(i, s) for i, s in enumerate(seeds)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(worker, i, s) for i, s in enumerate(seeds)]
        return [f.result() for f in futs]
