"""Training orchestration: the Deep Ritz solver as an sklearn-style estimator.

``DeepRitzVI.fit`` runs the full loop: Adam steps on the weighted three-term
loss, a Gaussian-process weight proposal every ``bo_period`` epochs (adopted
only when a short cloned-parameter probe beats the incumbent's current
merit), residual-adaptive collocation refreshes on their own cadence, and
the flat-loss stopping rule.  Everything is deterministic per
``random_state``.

The weight-search target is the probe result scored under one fixed
reference weighting, energy + 1e4 * (constraint + boundary).  Neither the
proposal's own weighted total nor an unweighted sum can serve: the energy
term is sign-indefinite, so trading boundary fidelity for energy drives
those scores down while the solution gets worse.  Under the fixed heavy
violation penalty, a probe only scores well by approaching the genuine
constrained minimiser, and scores stay comparable across cycles.

Searched weightings are also clamped so the hinge coefficient dominates
the source scale: where -f exceeds w2/w1, pushing u below the obstacle
lowers the weighted loss pointwise, so any training under such weights
drifts into infeasibility (the exact-penalty condition: the L1 penalty
coefficient must exceed the active multiplier, here bounded by sup(-f)).
"""

import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from threadpoolctl import threadpool_limits

from . import losses as lo
from . import network as nw
from . import optim as op
from . import problems as pb
from . import sampling as sp
from .autodiff import val
from .exceptions import (
    InvalidConfigError,
    NoReferenceError,
    NonFiniteGradientError,
    NonFiniteLossError,
)
from .fd import interpolate, optimal_omega, solve_obstacle_fd
from .metrics import compute_metrics
from .validation import check_points

DEFAULT_ORACLE_NODES = {1: 1025, 2: 257, 3: 65}

# fixed scoring weights for weight-search probes: energy at unit scale,
# violations penalised hard enough that no energy gain can pay for them
MERIT_PENALTY = 1e4

# Adam makes the per-epoch loss change oscillate over orders of magnitude,
# so a single sub-threshold dip says nothing; flat-loss triggers require the
# condition to hold this many consecutive epochs
FLAT_WINDOW = 10

# a stalled loss first gets one rescue (weight-search cycle plus refresh);
# repeat rescues wait this many epochs, and a rescue that changes nothing
# lets the stop fire
STALL_COOLDOWN = 100

LOSS_HISTORY_COLUMNS = ("epoch", "energy", "constraint", "boundary",
                        "total", "w1", "w2", "w3")
BO_HISTORY_COLUMNS = ("cycle", "w1", "w2", "w3", "observed_loss", "best_so_far")


class DeepRitzVI(BaseEstimator):
    """Obstacle-problem solver: fit trains the network, predict evaluates it.

    Parameters mirror the training loop: network shape and activation,
    Adam step size with exponential decay, collocation counts, the weight
    search (``bayes_opt``) and the adaptive refresh (``adaptive_sampling``)
    with their cadences, and the flat-loss stopping thresholds.
    """

    def __init__(self, problem="ex1", hidden_layers=3, units=20,
                 activation="tanh", learning_rate=1e-3, lr_decay=0.9,
                 epochs=20000, loss_threshold=1e-4,
                 n_interior=2000, n_boundary=400,
                 initial_weights=(1e4, 1e4, 1e4),
                 bayes_opt=True, bo_period=1000, bo_candidates=256,
                 probe_epochs=200,
                 adaptive_sampling=True, update_period=10000,
                 update_loss_delta=1e-3,
                 parent_count=None, children_per_parent=1, base_radius=None,
                 resample_epsilon=1e-6, init_sampling="lhs", random_state=42):
        self.problem = problem
        self.hidden_layers = hidden_layers
        self.units = units
        self.activation = activation
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.epochs = epochs
        self.loss_threshold = loss_threshold
        self.n_interior = n_interior
        self.n_boundary = n_boundary
        self.initial_weights = initial_weights
        self.bayes_opt = bayes_opt
        self.bo_period = bo_period
        self.bo_candidates = bo_candidates
        self.probe_epochs = probe_epochs
        self.adaptive_sampling = adaptive_sampling
        self.update_period = update_period
        self.update_loss_delta = update_loss_delta
        self.parent_count = parent_count
        self.children_per_parent = children_per_parent
        self.base_radius = base_radius
        self.resample_epsilon = resample_epsilon
        self.init_sampling = init_sampling
        self.random_state = random_state

    # -- config -------------------------------------------------------------

    def _validate_config(self):
        if not (1e-4 <= self.learning_rate <= 1e-2):
            raise InvalidConfigError(
                f"learning_rate {self.learning_rate} outside [1e-4, 1e-2]"
            )
        if self.epochs < 0:
            raise InvalidConfigError("epochs cannot be negative")
        for name in ("bo_period", "update_period", "probe_epochs"):
            if getattr(self, name) < 1:
                raise InvalidConfigError(f"{name} must be positive")
        if self.n_interior < 1 or self.n_boundary < 1:
            raise InvalidConfigError("need at least one interior and boundary point")
        if self.init_sampling not in ("lhs", "normal"):
            raise InvalidConfigError("init_sampling must be 'lhs' or 'normal'")
        if self.hidden_layers < 0 or (self.hidden_layers > 0 and self.units < 1):
            raise InvalidConfigError("bad network shape")

    def _seeds(self):
        ss = np.random.SeedSequence(int(self.random_state) % 2**63)
        vals = ss.generate_state(5, np.uint64)
        keys = ("net", "interior", "boundary", "bo", "resample")
        return {k: int(v) for k, v in zip(keys, vals)}

    # -- training -----------------------------------------------------------

    def fit(self, X=None, y=None):
        """Train on the problem; X may supply initial interior points."""
        # threaded BLAS loses on this loop's small matrices
        with threadpool_limits(limits=1):
            return self._fit(X)

    def _fit(self, X):
        t_start = time.perf_counter()
        self._validate_config()
        problem = pb.resolve_problem(self.problem)
        seeds = self._seeds()

        sizes = [problem.dim] + [self.units] * self.hidden_layers + [1]
        params = nw.init_params(sizes, self.activation, seeds["net"])

        if X is not None:
            interior, _ = check_points(X, problem.dim)
        elif self.init_sampling == "normal":
            interior = sp.normal_cloud(self.n_interior, problem.box, seeds["interior"])
        else:
            interior = sp.latin_hypercube(self.n_interior, problem.box, seeds["interior"])
        boundary = sp.sample_boundary(self.n_boundary, problem.box, seeds["boundary"])
        cset = sp.CollocationSet(interior, boundary, problem.box, 0)

        weights = lo.LossWeights(*self.initial_weights)
        widths = problem.box[:, 1] - problem.box[:, 0]
        radius = self.base_radius if self.base_radius is not None else 0.1 * float(widths.max())
        state = op.AdamState.for_params(params, alpha=self.learning_rate)
        bo_state = op.BoState()

        data = self._problem_arrays(problem, cset)
        # exact-penalty bound: hinge weight must beat sup(-f) per unit of
        # energy weight or the weighted loss rewards obstacle violation
        hinge_floor = 1.5 * max(0.0, float(-np.min(data["f"])))
        history = []
        bo_rows = []
        snapshots = [cset]
        cycle = 0
        stopped_early = False
        flat_stop = 0
        flat_update = 0
        last_rescue = -STALL_COOLDOWN

        for epoch in range(1, self.epochs + 1):
            state.alpha = self.learning_rate * self.lr_decay ** ((epoch - 1) / 10000.0)
            try:
                grads, breakdown = self._loss_and_grads(params, weights, data)
            except (NonFiniteLossError, NonFiniteGradientError):
                self._finalise(params, weights, history, bo_rows, cset,
                               snapshots, problem, epoch - 1, False, t_start)
                raise
            history.append((epoch, breakdown.energy, breakdown.constraint,
                            breakdown.boundary, breakdown.total,
                            weights.w1, weights.w2, weights.w3))
            op.adam_step(state, params, grads)

            delta = (abs(history[-1][4] - history[-2][4])
                     if len(history) >= 2 else None)
            flat_stop = flat_stop + 1 if (
                delta is not None and delta < self.loss_threshold) else 0
            flat_update = flat_update + 1 if (
                delta is not None and delta < self.update_loss_delta) else 0

            stalled = (flat_update >= FLAT_WINDOW
                       and epoch - last_rescue >= STALL_COOLDOWN
                       and epoch < self.epochs)
            jolted = False

            if self.bayes_opt and epoch < self.epochs and (
                    epoch % self.bo_period == 0 or stalled):
                cycle += 1
                merit_now = (breakdown.energy
                             + MERIT_PENALTY * (breakdown.constraint
                                                + breakdown.boundary))
                if not bo_state.observations:
                    op.bo_update(bo_state, weights, merit_now)
                proposal = op.propose_weights(
                    bo_state, self.bo_candidates, seeds["bo"] + cycle
                )
                # the proposal contributes its direction; the magnitude stays
                # at the incumbent's scale so the loss keeps one common scale
                direction = np.array(proposal.direction())
                if hinge_floor > 0 and direction[1] < hinge_floor * direction[0]:
                    direction[0] = direction[1] / hinge_floor
                    direction /= direction.sum()
                candidate = lo.LossWeights(*(direction * weights.magnitude()))
                merit = self._probe_merit(params, state.alpha, candidate, data)
                op.bo_update(bo_state, candidate, merit)
                bo_rows.append((cycle, candidate.w1, candidate.w2, candidate.w3,
                                merit, bo_state.best_loss()))
                # the incumbent is the best observation so far; a noisy
                # merit_now spike cannot hand the run to a mediocre proposal
                best_w, best_m = min(bo_state.observations, key=lambda o: o[1])
                if best_m < merit_now and not np.array_equal(
                        best_w, weights.as_array()):
                    weights = lo.LossWeights(*best_w)
                    jolted = True

            if self.adaptive_sampling and epoch < self.epochs and (
                    epoch % self.update_period == 0 or stalled):
                residuals = lo.pointwise_residuals(
                    params, data["xf"], data["f"], data["psi"], problem.alpha, weights
                )
                cfg = sp.ResampleConfig(
                    parent_count=self._parents_for(len(cset.interior)),
                    children_per_parent=self.children_per_parent,
                    base_radius=radius,
                    epsilon=self.resample_epsilon,
                )
                cset = sp.resample(cset, residuals, cfg,
                                   seeds["resample"] + cset.round)
                snapshots.append(cset)
                data = self._problem_arrays(problem, cset)
                jolted = True

            if stalled:
                last_rescue = epoch
            if jolted:
                flat_stop = 0
                flat_update = 0
            elif flat_stop >= FLAT_WINDOW:
                stopped_early = True
                break

        self._finalise(params, weights, history, bo_rows, cset, snapshots,
                       problem, len(history), stopped_early, t_start)
        return self

    def _parents_for(self, n_interior):
        # refreshes bias the Monte Carlo quadrature of the energy, so the
        # default turnover stays small
        if self.parent_count is not None:
            return min(int(self.parent_count), n_interior)
        return max(1, n_interior // 20)

    @staticmethod
    def _problem_arrays(problem, cset):
        return {
            "xf": cset.interior,
            "f": problem.f(cset.interior),
            "psi": problem.psi(cset.interior),
            "xb": cset.boundary,
            "g": problem.g(cset.boundary),
            "alpha": problem.alpha,
        }

    def _loss_and_grads(self, params, weights, data):
        captured = {}

        def evaluator(tp):
            e, c, _, _ = lo.interior_terms(
                tp.weights, tp.biases, tp.activation,
                data["xf"], data["f"], data["psi"], data["alpha"],
            )
            b = lo.boundary_mismatch(
                tp.weights, tp.biases, tp.activation, data["xb"], data["g"]
            )
            captured["terms"] = (float(e.value), float(c.value), float(b.value))
            return e * weights.w1 + c * weights.w2 + b * weights.w3

        grads = nw.grad_params(params, evaluator)
        breakdown = lo.total_loss(*captured["terms"], weights)
        return grads, breakdown

    def _probe_merit(self, params, alpha, proposal, data):
        """Reference-weighted merit of a short cloned-parameter probe."""
        probe = params.copy()
        pstate = op.AdamState.for_params(probe, alpha=alpha)
        for _ in range(self.probe_epochs):
            grads, _ = self._loss_and_grads(probe, proposal, data)
            op.adam_step(pstate, probe, grads)
        e, c, _, _ = lo.interior_terms(
            probe.weights, probe.biases, probe.activation,
            data["xf"], data["f"], data["psi"], data["alpha"],
        )
        b = lo.boundary_mismatch(
            probe.weights, probe.biases, probe.activation, data["xb"], data["g"]
        )
        return float(val(e) + MERIT_PENALTY * (val(c) + val(b)))

    def _finalise(self, params, weights, history, bo_rows, cset, snapshots,
                  problem, n_epochs, stopped_early, t_start):
        self.params_ = params
        self.weights_ = weights
        self.loss_history_ = np.array(history, dtype=float).reshape(-1, 8)
        self.bo_history_ = np.array(bo_rows, dtype=float).reshape(-1, 6)
        self.collocation_ = cset
        self.snapshots_ = snapshots
        self.problem_ = problem
        self.n_epochs_ = n_epochs
        self.stopped_early_ = stopped_early
        self.fit_seconds_ = time.perf_counter() - t_start

    # -- inference ----------------------------------------------------------

    def predict(self, X):
        """Network values u(X); X is (n, dim) or a single point."""
        if not hasattr(self, "params_"):
            raise NotFittedError("estimator is not fitted; call fit() first")
        pts, single = check_points(X, self.problem_.dim)
        u = nw.forward(self.params_, pts)
        return float(u) if single else u

    def constraint_violation(self, points=None):
        """Mean hinge violation at the given or final interior points."""
        pts = points if points is not None else self.collocation_.interior
        return lo.constraint_term(self.params_, pts, self.problem_)


# ---------------------------------------------------------------------------
# references and evaluation

_oracle_cache = {}


def oracle_solution(problem, nodes=None):
    """PSOR reference solve, cached per catalog problem and node count.

    Uses the near-optimal relaxation factor for the grid rather than the
    coarse per-dimension defaults, since reference grids are fine.
    """
    nodes = nodes or DEFAULT_ORACLE_NODES[problem.dim]
    key = (problem.name, problem.dim, nodes) if problem.name in pb.PROBLEMS else (id(problem), nodes)
    if key not in _oracle_cache:
        _oracle_cache[key] = solve_obstacle_fd(
            problem, nodes, omega=optimal_omega(nodes)
        )
    return _oracle_cache[key]


def reference_values(problem, points=None, oracle_nodes=None):
    """(points, values, kind): exact where shipped, else the PSOR oracle."""
    if problem.has_exact():
        if points is None:
            sol = oracle_solution(problem, oracle_nodes)
            points = sol.nodes()
        return points, pb.evaluate_exact(problem, points), "exact"
    sol = oracle_solution(problem, oracle_nodes)
    if points is None:
        return sol.nodes(), sol.values, "oracle"
    return points, interpolate(sol, points), "oracle"


def evaluate_network(params, problem, points=None, oracle_nodes=None):
    """MetricReport of the network against the best available reference."""
    try:
        pts, ref, kind = reference_values(problem, points, oracle_nodes)
    except Exception as exc:
        raise NoReferenceError(f"no reference for {problem.name}: {exc}") from exc
    pred = nw.forward(params, pts)
    return compute_metrics(ref, pred), kind


@dataclass
class RunResult:
    """Everything a finished training run produced."""

    estimator: DeepRitzVI
    metrics: dict
    reference_kind: str
    exact_metrics: dict = None
    constraint_violation: float = None
    wall_seconds: float = 0.0
    files: dict = field(default_factory=dict)
