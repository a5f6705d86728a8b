"""Render entry points, the integrator capability matrix, and budgeting.

Every integrator renders in whole-pass batches (one sample per pixel, or one
mutation block for the Metropolis integrator).  A time budget stops at the
first batch boundary at or past the budget, so partial passes never bias the
estimate; a sample budget runs the requested passes exactly.  Batch counts
are part of the result so a run can be replayed bit-identically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bsdf import MAT_NULL
from .emitters import EMIT_DIRECTIONAL, EMIT_SPOT
from .errors import CapabilityError, MediumNestingError, RenderConfigError
from .media import MEDIUM_STACK_LIMIT
from .pathkernel import ERR_MEDIUM_NESTING, nee_target_indices, render_frame
from .scene import Film, SceneDescription
from .scenedata import SceneData, compile_scene

INTEGRATOR_NAMES = ("pt", "volpath", "volpath-simple", "bdpt", "pm", "pssmlt")


@dataclass
class RenderResult:
    """A finished render plus the diagnostics the bench harness records."""

    image: np.ndarray  # float32 (h, w, 3) per-pixel mean
    spp: int  # completed whole passes (mutation blocks for pssmlt)
    seconds: float
    rejected: int  # samples dropped for non-finite contributions
    film: Film  # raw accumulator, mergeable across runs


def as_scene_data(scene: SceneDescription | SceneData) -> SceneData:
    if isinstance(scene, SceneData):
        return scene
    return compile_scene(scene)


def check_capability(kind: str, data: SceneData) -> None:
    """Refuse integrator/scene pairs outside the supported matrix.

    The plain path tracer has no medium transport; the bidirectional tracer
    connects subpaths only across surfaces and cannot weight in-medium
    scattering; neither it nor the Metropolis integrator handles the diffusion
    approximation used for subsurface materials.
    """
    if kind == "pt" and data.has_real_media:
        raise CapabilityError("pt", "participating media")
    if kind == "bdpt":
        if data.has_sss:
            raise CapabilityError("bdpt", "subsurface scattering")
        if data.has_scatter_media:
            raise CapabilityError("bdpt", "scattering media")
        arrays = data.arrays
        for k in arrays.emit_kind:
            if k == EMIT_SPOT or k == EMIT_DIRECTIONAL:
                raise CapabilityError("bdpt", "delta emitters")
        for i in range(len(arrays.prim_emitter)):
            if (arrays.prim_emitter[i] >= 0
                    and arrays.mat_kind[arrays.prim_material[i]] == MAT_NULL):
                raise CapabilityError("bdpt", "emitters on null materials")
    if kind == "pssmlt" and data.has_sss:
        raise CapabilityError("pssmlt", "subsurface scattering")


def integrator_supports(kind: str, data: SceneData) -> bool:
    try:
        check_capability(kind, data)
    except CapabilityError:
        return False
    return True


def _resolve_budget(data: SceneData, spp, budget_seconds, max_batches):
    if budget_seconds is not None and budget_seconds <= 0.0:
        raise RenderConfigError("time budget must be positive")
    if spp is not None and spp < 1:
        raise RenderConfigError("sample budget must be at least 1")
    if spp is None and budget_seconds is None and max_batches is None:
        spp = data.desc.spp
    return spp, budget_seconds


def _run_batches(run_batch, spp, budget_seconds, max_batches):
    """Drive whole-pass batches under one of the three budget styles.

    run_batch(s0, s1) renders passes [s0, s1); returns the batch count used.
    """
    t0 = time.perf_counter()
    if max_batches is not None:
        run_batch(0, max_batches)
        return max_batches
    if spp is not None:
        run_batch(0, spp)
        return spp
    done = 0
    while True:
        run_batch(done, done + 1)
        done += 1
        if time.perf_counter() - t0 >= budget_seconds:
            return done


def _render_path_family(scene, mis_full, spp, budget_seconds, seed, max_batches):
    data = as_scene_data(scene)
    desc = data.desc
    cfg = desc.integrator
    use_seed = desc.seed if seed is None else seed
    spp, budget_seconds = _resolve_budget(data, spp, budget_seconds, max_batches)

    film = Film(data.width, data.height)
    nee_idx = nee_target_indices(data.arrays.emit_kind, mis_full)
    state = {"rejected": 0, "err": 0}

    def run_batch(s0, s1):
        rej, err = render_frame(
            data.arrays, data.cam_params, data.width, data.height,
            use_seed, s0, s1, cfg.max_depth, cfg.rr_start_depth,
            mis_full, nee_idx, film.sum, film.weight,
        )
        state["rejected"] += rej
        if err == ERR_MEDIUM_NESTING:
            raise MediumNestingError(MEDIUM_STACK_LIMIT)

    t0 = time.perf_counter()
    done = _run_batches(run_batch, spp, budget_seconds, max_batches)
    seconds = time.perf_counter() - t0
    return RenderResult(film.mean_image(), done, seconds, state["rejected"], film)


def render_pt(scene, spp=None, budget_seconds=None, seed=None, max_batches=None):
    """Unidirectional path tracing with next event estimation and MIS."""
    data = as_scene_data(scene)
    check_capability("pt", data)
    return _render_path_family(data, True, spp, budget_seconds, seed, max_batches)


def render_volpath(scene, spp=None, budget_seconds=None, seed=None,
                   max_batches=None, simple=False):
    """Volumetric path tracing; simple=True drops MIS in favour of pure NEE."""
    data = as_scene_data(scene)
    check_capability("volpath-simple" if simple else "volpath", data)
    return _render_path_family(
        data, not simple, spp, budget_seconds, seed, max_batches
    )


def render_image(scene, kind=None, spp=None, budget_seconds=None, seed=None,
                 max_batches=None):
    """Render with the named integrator (default: the scene's own choice)."""
    data = as_scene_data(scene)
    if kind is None:
        kind = data.desc.integrator.kind
    if kind == "pt":
        return render_pt(data, spp, budget_seconds, seed, max_batches)
    if kind == "volpath":
        return render_volpath(data, spp, budget_seconds, seed, max_batches)
    if kind == "volpath-simple":
        return render_volpath(data, spp, budget_seconds, seed, max_batches, simple=True)
    if kind == "bdpt":
        from .bdpt import render_bdpt

        return render_bdpt(data, spp, budget_seconds, seed, max_batches)
    if kind == "pm":
        from .photonmap import render_pm

        return render_pm(data, spp, budget_seconds, seed, max_batches)
    if kind == "pssmlt":
        from .pssmlt import render_pssmlt

        return render_pssmlt(data, spp, budget_seconds, seed, max_batches)
    raise RenderConfigError(f"unknown integrator {kind!r}")
