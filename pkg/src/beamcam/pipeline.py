"""Camera-to-beam prediction loop and frame-synchronized truth assembly.

Each frame is built from a single immutable snapshot: UE positions are
interpolated once, the same meshes feed both the camera (bounding boxes)
and the ray tracer (paths, per-beam SNR, optimal index), so visual and
wireless truth are synchronized by construction. The prediction side
gates on activity, detects with a pluggable noise-parameterized oracle
detector, maps the bbox center pixel to an azimuth and quantizes it to a
codebook bin.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import BoundingBox, CameraModel, pixel_to_azimuth, project_bbox
from .channel import (Codebook, build_channel, generate_codebook, optimal_beam,
                      world_to_array_deg)
from .geometry import Mesh, Trajectory, box_mesh, interpolate_position
from .raytrace import Face, PathComponent, SceneGeometry, box_faces, trace_paths
from .scenario import Scenario, UeConfig
from . import stl


@dataclass(frozen=True)
class DetectorNoiseModel:
    """Stand-in for a trained detector: Gaussian center jitter plus misses."""

    pixel_sigma: float = 0.0
    miss_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.pixel_sigma < 0:
            raise ValueError("pixel_sigma must be >= 0")
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ValueError("miss_prob must be in [0, 1]")


@dataclass(frozen=True)
class Detection:
    ue_name: str
    bbox: BoundingBox
    confidence: float = 1.0


@dataclass(frozen=True)
class UeFrameRecord:
    """Per-UE slice of a frame: truth plus pipeline outputs."""

    ue_name: str
    position: tuple[float, float, float]
    active: int
    bbox: BoundingBox | None
    paths: tuple[PathComponent, ...]
    beam_snrs_db: tuple[float, ...] | None
    optimal_index: int | None
    optimal_snr_db: float | None
    outage: bool
    detection: Detection | None = None
    predicted_index: int | None = None
    predicted_azimuth_deg: float | None = None


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    bs_name: str
    ues: tuple[UeFrameRecord, ...]


def activity_state(ue: UeConfig, frame: int) -> int:
    """1 iff the frame lies in any declared active range (default: all)."""
    if not ue.active_ranges:
        return 1
    return int(any(lo <= frame <= hi for lo, hi in ue.active_ranges))


def detect(truth: list[tuple[int, BoundingBox]], model: DetectorNoiseModel,
           frame: int, width_px: int, height_px: int) -> list[Detection]:
    """Noise-parameterized oracle detector over truth bounding boxes.

    ``truth`` pairs each box with its UE index in the scenario; the RNG
    stream is split per (seed, frame, ue index), so outputs are
    deterministic and independent of evaluation order, and noise draws are
    coupled across sigma values for a fixed seed.
    """
    detections = []
    for ue_index, bbox in truth:
        rng = np.random.default_rng([model.seed, frame, ue_index])
        miss_draw = rng.random()
        du, dv = rng.standard_normal(2) * model.pixel_sigma
        if miss_draw < model.miss_prob:
            continue
        jittered = BoundingBox(
            u_min=float(np.clip(bbox.u_min + du, 0.0, width_px)),
            v_min=float(np.clip(bbox.v_min + dv, 0.0, height_px)),
            u_max=float(np.clip(bbox.u_max + du, 0.0, width_px)),
            v_max=float(np.clip(bbox.v_max + dv, 0.0, height_px)),
            ue_name=bbox.ue_name,
            visibility=bbox.visibility,
        )
        detections.append(Detection(ue_name=bbox.ue_name, bbox=jittered))
    return detections


def select_beam(detection: Detection, cam: CameraModel, codebook: Codebook,
                boresight_deg: float) -> tuple[int | None, float]:
    """Map a detection to (codebook index, predicted world azimuth).

    Index is None when the azimuth falls outside the array half-space.
    """
    az_world = pixel_to_azimuth(cam, detection.bbox.center_u)
    az_array = world_to_array_deg(az_world, boresight_deg)
    return codebook.bin_index(az_array), az_world


class Simulator:
    """Per-BS simulation state: static geometry, codebook, camera."""

    def __init__(self, scenario: Scenario, bs_name: str | None = None,
                 base_dir: str | Path | None = None):
        self.scenario = scenario
        self.bs = scenario.bs(bs_name) if bs_name else scenario.bss[0]
        array = scenario.array(self.bs.array_ref)
        self.array = array
        sysp = scenario.system
        self.codebook = generate_codebook(
            array.elements_n, array.spacing_wavelengths, sysp.codebook_size_q
        )
        self.camera = CameraModel.from_bs(self.bs)
        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

        self._static: list[tuple[str, Mesh]] = []
        self._faces: list[Face] = []
        for refl in scenario.reflectors:
            if refl.mesh_path is not None:
                mesh = stl.parse_stl(
                    (base_dir / refl.mesh_path).read_bytes(), refl.material
                )
            else:
                mesh = box_mesh(refl.center, refl.size, refl.yaw_deg,
                                refl.material)
            self._static.append((refl.name, mesh))
            # Specular bounces always come from the box parameters.
            self._faces.extend(
                box_faces(refl.center, refl.size, refl.yaw_deg, refl.material)
            )

        self._ue_base = {
            ue.name: box_mesh((0.0, 0.0, 0.0), ue.size, material=ue.material)
            for ue in scenario.ues
        }
        self._trajectories = {
            ue.name: Trajectory(ue.keyframes) for ue in scenario.ues
        }

    def ue_position(self, ue_name: str, frame: int) -> np.ndarray:
        return interpolate_position(self._trajectories[ue_name], frame)

    def frame_scene(self, frame: int
                    ) -> tuple[SceneGeometry, dict[str, np.ndarray]]:
        """Immutable snapshot of all geometry at one frame."""
        positions = {
            ue.name: self.ue_position(ue.name, frame)
            for ue in self.scenario.ues
        }
        meshes = list(self._static)
        meshes += [
            (name, self._ue_base[name].translated(pos))
            for name, pos in positions.items()
        ]
        scene = SceneGeometry(meshes, self._faces,
                              self.scenario.material_table)
        return scene, positions

    def frame_truth(self, frame: int) -> FrameRecord:
        """Truth-only record (no detection / prediction fields)."""
        sysp = self.scenario.system
        scene, positions = self.frame_scene(frame)
        bs_pos = np.asarray(self.bs.position, float)
        ues = []
        for ue in self.scenario.ues:
            pos = positions[ue.name]
            mesh = self._ue_base[ue.name].translated(pos)
            bbox = project_bbox(self.camera, mesh, ue.name, scene,
                                exclude=(ue.name,))
            paths = trace_paths(scene, bs_pos, pos, sysp.max_reflections,
                                sysp.carrier_ghz, exclude=(ue.name,))
            h = build_channel(paths, self.array.elements_n,
                              self.array.spacing_wavelengths,
                              self.bs.boresight_deg)
            index, snr, snrs = optimal_beam(h, self.codebook,
                                            sysp.tx_power_dbm,
                                            sysp.noise_power_dbm)
            outage = not paths
            ues.append(UeFrameRecord(
                ue_name=ue.name,
                position=tuple(float(c) for c in pos),
                active=activity_state(ue, frame),
                bbox=bbox,
                paths=tuple(paths),
                beam_snrs_db=None if outage else tuple(snrs),
                optimal_index=index,
                optimal_snr_db=snr,
                outage=outage,
            ))
        return FrameRecord(frame=frame, bs_name=self.bs.name, ues=tuple(ues))

    def run_truth(self) -> list[FrameRecord]:
        return [self.frame_truth(f) for f in range(self.scenario.system.frames)]

    def apply_detector(self, truth: list[FrameRecord],
                       model: DetectorNoiseModel) -> list[FrameRecord]:
        """Attach detections and beam predictions to truth records.

        Cheap relative to run_truth, so noise sweeps recompute only this
        stage over a shared truth pass.
        """
        ue_index = {ue.name: i for i, ue in enumerate(self.scenario.ues)}
        out = []
        for rec in truth:
            new_ues = []
            detectable = [
                (ue_index[u.ue_name], u.bbox)
                for u in rec.ues if u.active and u.bbox is not None
            ]
            detections = {
                d.ue_name: d
                for d in detect(detectable, model, rec.frame,
                                self.camera.width_px, self.camera.height_px)
            }
            for u in rec.ues:
                det = detections.get(u.ue_name)
                if det is not None:
                    pred_index, pred_az = select_beam(
                        det, self.camera, self.codebook,
                        self.bs.boresight_deg)
                else:
                    pred_index, pred_az = None, None
                new_ues.append(UeFrameRecord(
                    ue_name=u.ue_name,
                    position=u.position,
                    active=u.active,
                    bbox=u.bbox,
                    paths=u.paths,
                    beam_snrs_db=u.beam_snrs_db,
                    optimal_index=u.optimal_index,
                    optimal_snr_db=u.optimal_snr_db,
                    outage=u.outage,
                    detection=det,
                    predicted_index=pred_index,
                    predicted_azimuth_deg=pred_az,
                ))
            out.append(FrameRecord(frame=rec.frame, bs_name=rec.bs_name,
                                   ues=tuple(new_ues)))
        return out


def simulate_frame(scenario: Scenario, frame: int,
                   model: DetectorNoiseModel | None = None,
                   bs_name: str | None = None,
                   base_dir: str | Path | None = None) -> FrameRecord:
    sim = Simulator(scenario, bs_name, base_dir)
    truth = sim.frame_truth(frame)
    return sim.apply_detector([truth], model or DetectorNoiseModel())[0]


def run_simulation(scenario: Scenario,
                   model: DetectorNoiseModel | None = None,
                   bs_name: str | None = None,
                   base_dir: str | Path | None = None) -> list[FrameRecord]:
    """Full co-simulation: one FrameRecord per frame, ordered by frame."""
    sim = Simulator(scenario, bs_name, base_dir)
    return sim.apply_detector(sim.run_truth(), model or DetectorNoiseModel())
