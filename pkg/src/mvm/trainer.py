"""Alternating optimization of the distribution generator and the metric network.

Each step does one generator update on the manifold-matching objective under
the current pullback metric, then one metric update on the direction-guided
triplet loss with fresh real anchors/positives and freshly generated
negatives. Diagnostics are measured once per epoch on probe batches fixed
before training starts.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import losses, metric
from .config import TrainConfig
from .losses import LossValue
from .synthdata import (ManifoldSpec, PriorSpec, degradation_matrix, degrade,
                        sample_manifold, sample_prior)
from .tinynet import AdamState, DenseNetwork, NonFiniteError, adam_step, init_network, mlp_spec

log = logging.getLogger(__name__)

TRACE_FIELDS = ("epoch", "d_c", "d_g", "d_p", "d_H", "loss_mm", "loss_apn", "loss_gen")
N_EIGEN = 10


@dataclass
class TraceRecord:
    epoch: int
    d_c: float
    d_g: float
    d_H: float
    d_p: float | None = None
    loss_mm: float | None = None
    loss_apn: float | None = None
    loss_gen: float | None = None
    eigenvalues: np.ndarray | None = None
    eigen_sum: float | None = None  # sum of the full spectrum; equals the (zero) trace


class TrainingAborted(RuntimeError):
    """A loss or gradient went non-finite; carries the last good networks."""

    def __init__(self, message, generator, metric_net, trace, initial=None):
        super().__init__(message)
        self.initial = initial
        self.generator = generator
        self.metric_net = metric_net
        self.trace = trace


@dataclass
class TrainResult:
    generator: DenseNetwork
    metric_net: DenseNetwork
    trace: list
    initial: TraceRecord
    snapshots: dict = field(default_factory=dict)
    config: TrainConfig | None = None
    degradation: np.ndarray | None = None
    probe_real: np.ndarray | None = None
    probe_input: np.ndarray | None = None


def compute_trace(S_R, S_F, embedding, paired=False, epoch=0) -> TraceRecord:
    """Distances between a real and a generated probe batch under the pullback metric."""
    S_R = metric.as_samples(S_R, "S_R")
    S_F = metric.as_samples(S_F, "S_F", dim=S_R.shape[1])
    m = metric.Metric(embedding)
    d_c = metric.centroid_distance(S_R, S_F, embedding)
    d_g = abs(metric.p_diameter(S_R, m, 2.0) - metric.p_diameter(S_F, m, 2.0))
    d_H = metric.hausdorff_distance(S_R, S_F, m)
    d_p = losses.pair_loss(S_R, S_F, embedding).value if paired else None
    return TraceRecord(epoch=epoch, d_c=d_c, d_g=d_g, d_H=d_H, d_p=d_p)


def spectrum(S, embedding, count=N_EIGEN) -> tuple[np.ndarray, float]:
    """Top eigenvalues of the max-normalized distance matrix, plus the sum of all of them."""
    D = metric.distance_matrix(S, metric.Metric(embedding), normalize=True)
    ev = metric.eigenvalues(D)
    return ev[:count].copy(), float(ev.sum())


def build_networks(cfg: TrainConfig, seeds) -> tuple[DenseNetwork, DenseNetwork]:
    gen_in = cfg.latent_dim if cfg.mode == "unconditional" else cfg.degrade_dim
    gen = init_network(mlp_spec(gen_in, cfg.gen_hidden, cfg.ambient_dim), seeds["gen_init"])
    met = init_network(mlp_spec(cfg.ambient_dim, cfg.metric_hidden, cfg.embed_dim), seeds["metric_init"])
    return gen, met


def derive_seeds(seed: int) -> dict:
    names = ("gen_init", "metric_init", "data", "prior", "triplet", "probe", "degrade", "manifold")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


def _check(value, what):
    if not np.isfinite(value):
        raise NonFiniteError(f"{what} became non-finite ({value})")


class _Trainer:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.seeds = derive_seeds(cfg.seed)
        self.manifold = ManifoldSpec(cfg.manifold, cfg.ambient_dim, cfg.noise_sigma, cfg.radius,
                                     cfg.pitch, cfg.turns, cfg.scale, seed=self.seeds["manifold"])
        self.prior = PriorSpec(cfg.latent_dim)
        self.gen, self.met = build_networks(cfg, self.seeds)
        self.gen_opt = AdamState(self.gen.n_params, cfg.gen_lr, cfg.gen_beta1, cfg.gen_beta2)
        self.met_opt = AdamState(self.met.n_params, cfg.metric_lr, cfg.metric_beta1, cfg.metric_beta2)
        self.data_rng = np.random.default_rng(self.seeds["data"])
        self.prior_rng = np.random.default_rng(self.seeds["prior"])
        self.trip_rng = np.random.default_rng(self.seeds["triplet"])
        self.supervised = cfg.mode == "supervised"
        self.P = None
        if self.supervised:
            self.P = degradation_matrix(cfg.ambient_dim, cfg.degrade_dim, self.seeds["degrade"])
        probe_rng = np.random.default_rng(self.seeds["probe"])
        self.probe_real = sample_manifold(self.manifold, cfg.probe_size, probe_rng)
        if self.supervised:
            self.probe_input = degrade(self.probe_real, self.P, cfg.degrade_noise, probe_rng)
        else:
            self.probe_input = sample_prior(self.prior, cfg.probe_size, probe_rng)

    # -- one step of each player ---------------------------------------------

    def _backprop_embedding(self, grads_R, grads_F):
        """Input gradients of the metric net for the last (real ++ fake) forward batch."""
        _, dX = self.met.backward(np.vstack([grads_R, grads_F]))
        return dX[grads_R.shape[0]:]

    def generator_step(self):
        cfg, k = self.cfg, self.cfg.batch_size
        S_R = sample_manifold(self.manifold, k, self.data_rng)
        if self.supervised:
            x_in = degrade(S_R, self.P, cfg.degrade_noise, self.data_rng)
        else:
            x_in = sample_prior(self.prior, k, self.prior_rng)
        S_F = self.gen.forward(x_in)
        E = self.met.forward(np.vstack([S_R, S_F]))
        E_R, E_F = E[:k], E[k:]
        mm = losses.mm_loss_embedded(E_R, E_F, cfg.lam, cfg.match_mode)
        _check(mm.value, "manifold matching loss")
        dX_mm = self._backprop_embedding(*mm.grads)
        total = None
        if self.supervised:
            img = losses.img_loss(S_R, S_F)
            pair = losses.pair_loss_embedded(E_R, E_F)
            dX_pair = self._backprop_embedding(*pair.grads)
            total = losses.gen_total_loss(img, LossValue(pair.value, (dX_pair,)),
                                          LossValue(mm.value, (dX_mm,)), cfg.lambda2, cfg.lambda3)
            _check(total.value, "generator loss")
            grad_out = total.grads[0]
        else:
            grad_out = dX_mm
        grad_theta, _ = self.gen.backward(grad_out)
        theta, _ = adam_step(self.gen_opt, self.gen.get_params(), grad_theta)
        self.gen.set_params(theta)
        return mm.value, (total.value if total is not None else None), S_R

    def metric_step(self, S_R_last):
        cfg, k, l = self.cfg, self.cfg.batch_size, self.cfg.triplets
        if self.supervised:
            # negatives are reconstructions of the current paired batch
            S_R = S_R_last
            negatives = self.gen(degrade(S_R, self.P, cfg.degrade_noise, self.data_rng))
            neg = negatives[self.trip_rng.integers(0, k, size=l)]
        else:
            S_R = sample_manifold(self.manifold, k, self.data_rng)
            neg = self.gen(sample_prior(self.prior, l, self.prior_rng))
        ia = self.trip_rng.integers(0, k, size=l)
        ip = (ia + self.trip_rng.integers(1, k, size=l)) % k
        E = self.met.forward(np.vstack([S_R[ia], S_R[ip], neg]))
        apn = losses.apn_loss_embedded(E[:l], E[l:2 * l], E[2 * l:], cfg.alpha, cfg.gamma)
        _check(apn.value, "triplet loss")
        grad_w, _ = self.met.backward(np.vstack(apn.grads))
        w, _ = adam_step(self.met_opt, self.met.get_params(), grad_w)
        self.met.set_params(w)
        return apn.value

    # -- diagnostics ---------------------------------------------------------

    def probe_fake(self):
        return self.gen(self.probe_input)

    def trace(self, epoch, with_spectrum):
        rec = compute_trace(self.probe_real, self.probe_fake(), self.met, self.supervised, epoch)
        if with_spectrum:
            rec.eigenvalues, rec.eigen_sum = spectrum(self.probe_real[:self.cfg.spectrum_size], self.met)
        return rec

    def run(self) -> TrainResult:
        cfg = self.cfg
        initial = self.trace(0, True)
        trace, snapshots = [], {}
        good = (self.gen.copy(), self.met.copy())
        for epoch in range(1, cfg.epochs + 1):
            mm_sum = apn_sum = gen_sum = 0.0
            try:
                for _ in range(cfg.steps_per_epoch):
                    mm_v, gen_v, S_R = self.generator_step()
                    apn_v = self.metric_step(S_R)
                    mm_sum += mm_v
                    apn_sum += apn_v
                    if gen_v is not None:
                        gen_sum += gen_v
                rec = self.trace(epoch, epoch % cfg.diagnostics_interval == 0)
                for v in (rec.d_c, rec.d_g, rec.d_H):
                    _check(v, "trace distance")
            except (NonFiniteError, FloatingPointError) as exc:
                msg = f"training aborted in epoch {epoch}: {exc}"
                log.error(msg)
                raise TrainingAborted(msg, good[0], good[1], trace, initial) from exc
            n = cfg.steps_per_epoch
            rec.loss_mm = mm_sum / n
            rec.loss_apn = apn_sum / n
            if self.supervised:
                rec.loss_gen = gen_sum / n
            trace.append(rec)
            good = (self.gen.copy(), self.met.copy())
            if cfg.snapshot_interval and epoch % cfg.snapshot_interval == 0:
                snapshots[epoch] = self.probe_fake()
            log.debug("epoch %d d_c=%.4g d_g=%.4g d_H=%.4g mm=%.4g apn=%.4g",
                      epoch, rec.d_c, rec.d_g, rec.d_H, rec.loss_mm, rec.loss_apn)
            if cfg.early_stop and _plateaued(trace):
                log.info("early stop at epoch %d: d_H moved < 1%% over 20 epochs", epoch)
                break
        return TrainResult(self.gen, self.met, trace, initial, snapshots, cfg, self.P,
                           self.probe_real, self.probe_input)


def _plateaued(trace, window=20, rel=0.01):
    if len(trace) <= window:
        return False
    old, new = trace[-window - 1].d_H, trace[-1].d_H
    return abs(new - old) < rel * max(abs(old), 1e-12)


def train_unconditional(cfg: TrainConfig) -> TrainResult:
    if cfg.mode != "unconditional":
        raise ValueError("train_unconditional needs mode = unconditional")
    return _Trainer(cfg).run()


def train_supervised(cfg: TrainConfig) -> TrainResult:
    if cfg.mode != "supervised":
        raise ValueError("train_supervised needs mode = supervised")
    return _Trainer(cfg).run()


def train(cfg: TrainConfig) -> TrainResult:
    return _Trainer(cfg).run()
