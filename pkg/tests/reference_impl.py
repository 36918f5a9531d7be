"""Straight-line scalar-loop reference implementations.

Everything here is deliberately naive: nested Python loops over lists of
floats, no numpy vectorization, no shared code with the package under test.
These serve as the independent oracles the derived test values come from.
"""

import math


def to_lists(arr):
    return arr.tolist()


# ---------------------------------------------------------------------------
# tensor utilities
# ---------------------------------------------------------------------------


def ref_minmax(values):
    """Min-max normalize a flat list; constant input maps to zeros."""
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [0.0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


def ref_resize_bilinear(chw, out_h, out_w):
    """Per-pixel bilinear resize with half-pixel centers, clamped at edges."""
    channels = len(chw)
    in_h = len(chw[0])
    in_w = len(chw[0][0])
    out = []
    for c in range(channels):
        plane = []
        for oy in range(out_h):
            sy = (oy + 0.5) * in_h / out_h - 0.5
            sy = min(max(sy, 0.0), in_h - 1.0)
            y0 = int(math.floor(sy))
            y1 = min(y0 + 1, in_h - 1)
            fy = sy - y0
            row = []
            for ox in range(out_w):
                sx = (ox + 0.5) * in_w / out_w - 0.5
                sx = min(max(sx, 0.0), in_w - 1.0)
                x0 = int(math.floor(sx))
                x1 = min(x0 + 1, in_w - 1)
                fx = sx - x0
                top = chw[c][y0][x0] * (1.0 - fx) + chw[c][y0][x1] * fx
                bot = chw[c][y1][x0] * (1.0 - fx) + chw[c][y1][x1] * fx
                row.append(top * (1.0 - fy) + bot * fy)
            plane.append(row)
        out.append(plane)
    return out


# ---------------------------------------------------------------------------
# affinity extraction
# ---------------------------------------------------------------------------


def ref_l2_normalize(chw):
    """Flatten to channels x positions with unit-norm (or zero) columns."""
    channels = len(chw)
    h = len(chw[0])
    w = len(chw[0][0])
    flat = [[chw[c][i][j] for i in range(h) for j in range(w)] for c in range(channels)]
    n_pos = h * w
    for p in range(n_pos):
        norm_sq = 0.0
        for c in range(channels):
            norm_sq += flat[c][p] * flat[c][p]
        if norm_sq > 0.0:
            norm = math.sqrt(norm_sq)
            for c in range(channels):
                flat[c][p] /= norm
    return flat


def ref_self_affinity(g):
    """Dot product of every column pair; self-affinity suppressed to zero."""
    channels = len(g)
    n_pos = len(g[0])
    out = [[0.0] * n_pos for _ in range(n_pos)]
    for a in range(n_pos):
        for b in range(n_pos):
            if a == b:
                continue
            acc = 0.0
            for c in range(channels):
                acc += g[c][a] * g[c][b]
            out[a][b] = acc
    return out


def ref_smooth_gate(s):
    return [[math.tanh(v) * v for v in row] for row in s]


def ref_row_normalize(s):
    out = []
    for row in s:
        total = 0.0
        for v in row:
            total += v
        if total == 0.0:
            out.append(list(row))
        else:
            out.append([v / total for v in row])
    return out


def ref_second_block(s):
    """ReLU(s^T s - I) followed by row normalization."""
    n = len(s)
    prod = [[0.0] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            acc = 0.0
            for r in range(n):
                acc += s[r][a] * s[r][b]
            if a == b:
                acc -= 1.0
            prod[a][b] = acc if acc > 0.0 else 0.0
    return ref_row_normalize(prod)


def ref_ssm_forward(chw, n_sa=2):
    g = ref_l2_normalize(chw)
    s = ref_row_normalize(ref_smooth_gate(ref_self_affinity(g)))
    for _ in range(n_sa - 1):
        s = ref_second_block(s)
    return s


# ---------------------------------------------------------------------------
# CAM pipeline
# ---------------------------------------------------------------------------


def ref_seed_cam(f5, weights):
    channels = len(f5)
    h = len(f5[0])
    w = len(f5[0][0])
    classes = len(weights)
    cam = [[[0.0] * w for _ in range(h)] for _ in range(classes)]
    for m in range(classes):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for k in range(channels):
                    acc += weights[m][k] * f5[k][i][j]
                cam[m][i][j] = acc
    return cam


def ref_expand(cam, s):
    """Each output pixel is the affinity-row-weighted sum of input pixels."""
    classes = len(cam)
    h = len(cam[0])
    w = len(cam[0][0])
    n_pos = h * w
    flat = [[cam[m][p // w][p % w] for p in range(n_pos)] for m in range(classes)]
    out = [[[0.0] * w for _ in range(h)] for _ in range(classes)]
    for m in range(classes):
        for q in range(n_pos):
            acc = 0.0
            for p in range(n_pos):
                acc += s[q][p] * flat[m][p]
            out[m][q // w][q % w] = acc
    return out


def ref_clamp01(cam):
    return [[[min(1.0, max(0.0, v)) for v in row] for row in plane] for plane in cam]


def ref_run_ssa(features, weights, stages, n_sa=2, cross_guidance=False):
    """features: dict stage -> channels x H x W nested lists."""
    seed = ref_seed_cam(features[5], weights)
    expanded = []
    for stage in sorted(stages):
        s = ref_ssm_forward(features[stage], n_sa)
        expanded.append(ref_expand(seed, s))
    if cross_guidance:
        a, b = expanded
        sm_a = ref_clamp01(a)
        sm_b = ref_clamp01(b)
        guided_a = [
            [[a[m][i][j] * sm_b[m][i][j] for j in range(len(a[0][0]))] for i in range(len(a[0]))]
            for m in range(len(a))
        ]
        guided_b = [
            [[b[m][i][j] * sm_a[m][i][j] for j in range(len(b[0][0]))] for i in range(len(b[0]))]
            for m in range(len(b))
        ]
        expanded = [guided_a, guided_b]
    classes = len(seed)
    h = len(seed[0])
    w = len(seed[0][0])
    out = [[[0.0] * w for _ in range(h)] for _ in range(classes)]
    for cp in expanded:
        for m in range(classes):
            for i in range(h):
                for j in range(w):
                    out[m][i][j] += cp[m][i][j]
    return out


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def ref_components(mask, connectivity=4):
    """BFS connected-component labeling; returns list of pixel sets in
    first-encounter (row-major scan) order."""
    h = len(mask)
    w = len(mask[0])
    if connectivity == 4:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        steps = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    seen = [[False] * w for _ in range(h)]
    components = []
    for y in range(h):
        for x in range(w):
            if not mask[y][x] or seen[y][x]:
                continue
            queue = [(y, x)]
            seen[y][x] = True
            pixels = set()
            while queue:
                cy, cx = queue.pop()
                pixels.add((cy, cx))
                for dy, dx in steps:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny][nx] and not seen[ny][nx]:
                        seen[ny][nx] = True
                        queue.append((ny, nx))
            components.append(pixels)
    return components


def ref_largest_component_box(mask, connectivity=4):
    """(x0, y0, x1, y1) of the largest component, scan-order tie-break."""
    components = ref_components(mask, connectivity)
    if not components:
        raise ValueError("empty mask")
    best = None
    for pixels in components:  # scan order; first max wins
        if best is None or len(pixels) > len(best):
            best = pixels
    ys = [p[0] for p in best]
    xs = [p[1] for p in best]
    return (min(xs), min(ys), max(xs) + 1, max(ys) + 1)


def ref_miou(preds, gts, n_classes, ignore=255):
    """Pixel-by-pixel per-class intersection/union counting."""
    inter = [0] * n_classes
    union_gt = [0] * n_classes
    union_pred = [0] * n_classes
    for pred, gt in zip(preds, gts):
        h = len(gt)
        w = len(gt[0])
        for y in range(h):
            for x in range(w):
                g = gt[y][x]
                if g == ignore:
                    continue
                p = pred[y][x]
                union_gt[g] += 1
                union_pred[p] += 1
                if p == g:
                    inter[g] += 1
    ious = []
    for c in range(n_classes):
        union = union_gt[c] + union_pred[c] - inter[c]
        if union > 0:
            ious.append(inter[c] / union)
    if not ious:
        return float("nan"), ious
    return sum(ious) / len(ious), ious


def ref_pgm_bytes(grid):
    """PGM P5 encoding of a 2-D list: minmax -> round-half-even to 0..255."""
    h = len(grid)
    w = len(grid[0])
    flat = [float(v) for row in grid for v in row]
    normalized = ref_minmax(flat)
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    # Python's round() is round-half-even, matching the implementation.
    body = bytes(min(255, max(0, round(v * 255.0))) for v in normalized)
    return header + body
