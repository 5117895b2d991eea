"""Synthetic data and brute-force reference implementations for the tests.

The oracles here deliberately avoid the package's vectorized code paths:
plain Python loops over rows, explicit matrix chains, and so on.
"""
from __future__ import annotations

import math

import numpy as np

from lamof.motion import MotionSequence, Representation, Skeleton, matrix_to_rot6d


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rot_z(deg: float) -> np.ndarray:
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def integrate(start: np.ndarray, step_rows: np.ndarray) -> np.ndarray:
    """Frames with ``frame[t+1] = frame[t] + step_rows[t]``; len(step_rows) frames."""
    frames = np.empty((step_rows.shape[0], start.shape[0]))
    frames[0] = start
    for t in range(1, step_rows.shape[0]):
        frames[t] = frames[t - 1] + step_rows[t - 1]
    return frames


def phase_motion(start, velocities, lengths, joint_count, jitter=0.0, rng=None) -> MotionSequence:
    """Cartesian motion made of constant-velocity phases.

    Phase ``p`` covers ``lengths[p]`` frames and every step leaving one of its
    frames uses ``velocities[p]`` (plus optional Gaussian jitter).
    """
    steps = np.concatenate([np.repeat(np.asarray(v, float)[None, :], n, axis=0)
                            for v, n in zip(velocities, lengths)])
    if jitter:
        steps = steps + rng.normal(scale=jitter, size=steps.shape)
    return MotionSequence(integrate(np.asarray(start, float), steps), Representation.CARTESIAN, joint_count)


def two_phase_motion() -> MotionSequence:
    return phase_motion(np.zeros(6), [[0.1, 0.0, 0.0, 0.0, 0.05, 0.0], [0.0, -0.2, 0.1, 0.3, 0.0, 0.0]],
                        [10, 10], joint_count=2)


def random_chain(rng, joints: int, feet=()) -> Skeleton:
    offsets = rng.normal(size=(joints, 3))
    offsets[0] = 0.0
    return Skeleton.chain(offsets, feet)


def random_tree(rng, joints: int, feet=()) -> Skeleton:
    parents = [-1] + [int(rng.integers(0, j)) for j in range(1, joints)]
    offsets = rng.normal(size=(joints, 3))
    offsets[0] = 0.0
    return Skeleton(tuple(parents), offsets, feet)


def random_pose(rng, joints: int, translation_scale=1.0) -> np.ndarray:
    rot = [matrix_to_rot6d(random_rotation(rng)) for _ in range(joints)]
    return np.concatenate(rot + [rng.normal(scale=translation_scale, size=3)])


def smooth_rot6d_clip(rng, joints: int, length: int, fps=20.0) -> MotionSequence:
    """Rot6D clip whose joints rotate at constant random angular rates."""
    base = [random_rotation(rng) for _ in range(joints)]
    axes = [rng.normal(size=3) for _ in range(joints)]
    rates = rng.uniform(-0.05, 0.05, size=joints)
    trans_steps = rng.normal(scale=0.02, size=(length, 3))
    trans = integrate(rng.normal(size=3), trans_steps)
    frames = np.empty((length, 6 * joints + 3))
    for t in range(length):
        for j in range(joints):
            frames[t, 6 * j : 6 * j + 6] = matrix_to_rot6d(base[j] @ axis_angle(axes[j], rates[j] * t))
        frames[t, 6 * joints :] = trans[t]
    return MotionSequence(frames, Representation.ROT6D, joints, fps)


# -- oracles --------------------------------------------------------------------------


def oracle_rot6d_to_matrix(r) -> np.ndarray:
    a1 = [float(v) for v in r[:3]]
    a2 = [float(v) for v in r[3:]]
    n1 = math.sqrt(sum(v * v for v in a1))
    b1 = [v / n1 for v in a1]
    dot = sum(x * y for x, y in zip(b1, a2))
    u2 = [y - dot * x for x, y in zip(b1, a2)]
    n2 = math.sqrt(sum(v * v for v in u2))
    b2 = [v / n2 for v in u2]
    b3 = [b1[1] * b2[2] - b1[2] * b2[1], b1[2] * b2[0] - b1[0] * b2[2], b1[0] * b2[1] - b1[1] * b2[0]]
    return np.array([b1, b2, b3]).T


def oracle_fk(skeleton: Skeleton, pose) -> np.ndarray:
    """Walk each joint's ancestor chain and multiply the matrices explicitly."""
    J = skeleton.joint_count
    local = [oracle_rot6d_to_matrix(pose[6 * j : 6 * j + 6]) for j in range(J)]
    out = np.zeros((J, 3))
    for j in range(J):
        chain = []
        k = j
        while k != -1:
            chain.append(k)
            k = skeleton.parents[k]
        chain.reverse()  # root ... j
        pos = np.array(pose[6 * J :], dtype=float)
        rot = np.eye(3)
        for a, b in zip(chain[:-1], chain[1:]):
            rot = rot @ local[a]
            pos = pos + rot @ skeleton.offsets[b]
        out[j] = pos
    return out


def oracle_nearest(x, centroids) -> list[int]:
    labels = []
    for row in x:
        best, best_d = 0, None
        for c, cen in enumerate(centroids):
            d = sum((float(a) - float(b)) ** 2 for a, b in zip(row, cen))
            if best_d is None or d < best_d:
                best, best_d = c, d
        labels.append(best)
    return labels


def oracle_majority(labels, window: int) -> list[int]:
    n = len(labels)
    half = window // 2
    out: list[int] = []
    for t in range(n):
        win = [labels[min(max(t + o, 0), n - 1)] for o in range(-half, half + 1)]
        counts: dict[int, int] = {}
        for v in win:
            counts[v] = counts.get(v, 0) + 1
        top = max(counts.values())
        leaders = sorted(v for v, c in counts.items() if c == top)
        if len(leaders) > 1 and out and out[-1] in leaders:
            out.append(out[-1])
        else:
            out.append(leaders[0])
    return out


def oracle_rle(labels) -> list[tuple[int, int, int]]:
    runs: list[tuple[int, int, int]] = []
    start = 0
    for t in range(1, len(labels) + 1):
        if t == len(labels) or labels[t] != labels[start]:
            runs.append((int(labels[start]), start, t - start))
            start = t
    return runs


def oracle_lloyd(x, init, max_iters=500) -> list[int]:
    """Textbook Lloyd iterations with the same empty-cluster rule as the package."""
    x = [list(map(float, row)) for row in x]
    cents = [list(map(float, c)) for c in init]
    k = len(cents)

    def sqd(a, b):
        return sum((p - q) ** 2 for p, q in zip(a, b))

    def assign():
        labs, dists = [], []
        for row in x:
            ds = [sqd(row, c) for c in cents]
            best = min(range(k), key=lambda i: (ds[i], i))
            labs.append(best)
            dists.append(ds[best])
        return labs, dists

    labels, dists = assign()
    for _ in range(max_iters):
        for c in range(k):
            counts = [labels.count(i) for i in range(k)]
            if counts[c] > 0:
                continue
            donor = max(range(k), key=lambda i: (counts[i], -i))
            if counts[donor] < 2:
                break
            members = [i for i, lab in enumerate(labels) if lab == donor]
            far = max(members, key=lambda i: (dists[i], -i))
            cents[c] = list(x[far])
            labels[far] = c
            dists[far] = 0.0
        for c in range(k):
            members = [x[i] for i, lab in enumerate(labels) if lab == c]
            if members:
                cents[c] = [sum(col) / len(members) for col in zip(*members)]
        new_labels, dists = assign()
        if new_labels == labels:
            break
        labels = new_labels
    return labels


def oracle_linear_resample(frames: np.ndarray, target: int) -> np.ndarray:
    n = frames.shape[0]
    out = []
    for i in range(target):
        pos = i * (n - 1) / (target - 1)
        lo = int(math.floor(pos))
        hi = min(lo + 1, n - 1)
        w = pos - lo
        out.append([(1 - w) * a + w * b for a, b in zip(frames[lo], frames[hi])])
    return np.array(out)


# -- metric oracles ------------------------------------------------------------------


def oracle_recon(a, b):
    total = 0.0
    for s in range(a.segment_count):
        va = list(a.start_poses[s]) + list(a.velocities[s]) + [float(a.durations[s])]
        vb = list(b.start_poses[s]) + list(b.velocities[s]) + [float(b.durations[s])]
        total += sum((p - q) ** 2 for p, q in zip(va, vb))
    return total / a.segment_count


def oracle_vel(a, b):
    return sum(sum((p - q) ** 2 for p, q in zip(a.velocities[s], b.velocities[s]))
               for s in range(a.segment_count)) / a.segment_count


def oracle_coherent(sm):
    vals = []
    for s in range(sm.segment_count - 1):
        reach = [x + v * sm.durations[s] for x, v in zip(sm.start_poses[s], sm.velocities[s])]
        vals.append(sum((p - q) ** 2 for p, q in zip(sm.start_poses[s + 1], reach)))
    return sum(vals) / len(vals)


def oracle_contact(foot_velocities, contacts):
    total = 0.0
    for seg_v, seg_c in zip(foot_velocities, contacts):
        total += sum(c * c * sum(float(u) ** 2 for u in v) for v, c in zip(seg_v, seg_c))
    return total / len(foot_velocities)


def oracle_total(components: dict, weights: dict) -> float:
    return sum(weights["w_" + name] * components[name] for name in ("recon", "joint", "vel", "contact", "coherent"))


# -- file fixtures ----------------------------------------------------------------------


def f32(a) -> np.ndarray:
    """Round to float32-representable doubles so binary round trips can be bit-exact."""
    return np.asarray(a, dtype=np.float32).astype(np.float64)


def random_motion_f32(rng) -> MotionSequence:
    rep = Representation.CARTESIAN if rng.random() < 0.5 else Representation.ROT6D
    joints = int(rng.integers(1, 6))
    dim = 3 * joints if rep is Representation.CARTESIAN else 6 * joints + 3
    frames = f32(rng.normal(scale=10.0, size=(int(rng.integers(1, 40)), dim)))
    return MotionSequence(frames, rep, joints, float(f32(rng.uniform(1, 120))))


def random_supermotions_f32(rng):
    from lamof.codec import SuperMotionSequence

    joints = int(rng.integers(1, 5))
    m = int(rng.integers(1, 12))
    tag = None if rng.random() < 0.5 else bytes(rng.integers(0, 256, size=int(rng.integers(0, 20))).tolist())
    return SuperMotionSequence(
        f32(rng.normal(size=(m, 3 * joints))),
        f32(rng.normal(size=(m, 3 * joints))),
        rng.integers(1, 100, size=m),
        rng.integers(0, 2000, size=m),
        Representation.CARTESIAN,
        joints,
        float(f32(rng.uniform(1, 120))),
        tag,
    )


def random_model_f32(rng):
    from lamof.kmeans import ClusterModel

    k, d = int(rng.integers(1, 20)), int(rng.integers(1, 30))
    return ClusterModel(f32(rng.normal(size=(k, d))), seed=int(rng.integers(0, 2**31)),
                        inertia=float(f32(rng.uniform(0, 100))), iterations_run=int(rng.integers(0, 500)))


def corrupt(data: bytes, kind: str, rng, payload: tuple[int, int]):
    """Return a damaged copy of ``data`` and the error class name it must raise.

    ``payload`` is the byte range holding float data, so flips there leave
    every length field intact.
    """
    buf = bytearray(data)
    if kind == "magic":
        buf[int(rng.integers(0, 4))] ^= 0xFF
        return bytes(buf), "BadMagic"
    if kind == "truncate":
        return bytes(buf[: int(rng.integers(0, len(buf)))]), "TruncatedFile"
    if kind == "version":
        buf[4:8] = int(rng.integers(2, 1000)).to_bytes(4, "little")
        return bytes(buf), "VersionUnsupported"
    if kind == "flip":
        lo, hi = payload
        buf[int(rng.integers(lo, hi))] ^= 1 << int(rng.integers(0, 8))
        return bytes(buf), "ChecksumMismatch"
    if kind == "crc":
        buf[-int(rng.integers(1, 5))] ^= 0x55
        return bytes(buf), "ChecksumMismatch"
    raise ValueError(kind)


CORRUPTIONS = ("magic", "truncate", "version", "flip", "crc")
