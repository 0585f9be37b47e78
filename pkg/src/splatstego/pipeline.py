"""End-to-end embedding and extraction built from the codec pieces."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .autoencoder import TrainConfig, TrainingDiverged
from .keyfile import StegoKey
from .opacity import IndexSet, ae_train, map_opacity_partial, match_coordinates, significant_indices
from .scene import GaussianScene, HiddenAttributes, activate, logit
from .sh_stego import StegoParams, embed_scene, extract_sh, filter_orders

log = logging.getLogger(__name__)

DEFAULT_TAU = 0.25
OPACITY_EPS = 1e-6


class PositionMismatch(ValueError):
    pass


class NoMatch(ValueError):
    pass


@dataclass
class EmbedResult:
    stego: GaussianScene
    key: StegoKey
    index_set: IndexSet
    max_coeff_error: float
    ae_mse: float
    ae_epochs: int


def check_shared_positions(cover: GaussianScene, other: GaussianScene) -> None:
    if cover.count != other.count:
        raise PositionMismatch(f"hidden asset has {other.count} primitives, cover has {cover.count}")
    if cover.positions.tobytes() != other.positions.tobytes():
        bad = int(np.flatnonzero(np.any(cover.positions.view(np.uint32) != other.positions.view(np.uint32), axis=1))[0])
        raise PositionMismatch(f"hidden and cover positions differ, first at primitive {bad}")


def embed(
    cover: GaussianScene,
    hidden: HiddenAttributes,
    params: StegoParams = StegoParams(),
    tau: float = DEFAULT_TAU,
    train: TrainConfig = TrainConfig(),
) -> EmbedResult:
    if hidden.count != cover.count:
        raise ValueError(f"hidden attributes have {hidden.count} entries, cover has {cover.count}")
    index_set = significant_indices(hidden.opacity, tau, cover.positions)
    # The key must identify its primitives unambiguously.
    match_coordinates(index_set.coords, cover)

    stego = embed_scene(cover, hidden.sh, params)
    cover_op, _ = activate(stego)
    fit = ae_train(cover_op[index_set.indices], hidden.opacity[index_set.indices], train)
    if not np.isfinite(fit.mse):
        raise TrainingDiverged("autoencoder produced a non-finite loss")

    recovered = extract_sh(stego.sh, params)
    max_err = float(np.max(np.abs(recovered.astype(np.float64) - hidden.sh))) if cover.count else 0.0
    key = StegoKey(
        gamma=params.gamma,
        k=params.k,
        n=params.n,
        c_max=params.quant.c_max,
        tau=tau,
        coords=index_set.coords,
        model=fit.model,
    )
    log.info("embedded %d primitives, |I|=%d, ae mse %.3g", cover.count, len(index_set), fit.mse)
    return EmbedResult(stego, key, index_set, max_err, fit.mse, fit.epochs)


def extract(
    stego: GaussianScene,
    key: StegoKey,
    max_order: int | None = None,
    params: StegoParams | None = None,
) -> GaussianScene:
    """Hidden scene made of the key's primitives that survive in ``stego``.

    ``params`` overrides the key's SH parameters (used by budget ablations).
    """
    params = params or key.stego_params
    idx = match_coordinates(key.coords, stego)
    present = idx >= 0
    if not present.any():
        raise NoMatch("no coordinates matched: the key does not belong to this asset")
    survivors = idx[present]

    cover_op, _ = activate(stego)
    aligned = np.zeros(len(idx))
    aligned[present] = cover_op[survivors]
    hidden_op = map_opacity_partial(key.model, aligned, present)[present]

    sh = extract_sh(stego.sh[survivors], params)
    if max_order is not None:
        sh = filter_orders(sh, range(max_order + 1))
    hidden_op = np.clip(hidden_op, OPACITY_EPS, 1.0 - OPACITY_EPS)
    return stego.subset(survivors).with_sh(sh).with_opacities(logit(hidden_op, OPACITY_EPS))
