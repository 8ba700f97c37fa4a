"""Brute-force reference for the Heisenberg distance from 0 to (0, 0, 1).

Bracket convention [e1, e2] = e3, so a horizontal path gains
z = 1/2 * integral(x dy - y dx), the signed area swept by its planar shadow.

Candidates are closed planar curves made of two circular arcs (two
constant-curvature control pieces) over a common chord, traversed at unit
speed. Each curve is integrated numerically with fine midpoint steps; the
homogeneity of the distance turns a curve of length L and area A into a path
to (0, 0, 1) of length L / sqrt(|A|). The oracle value is the minimum over a
dense grid of the two arc half-angles.

Run: python3 heisenberg_vertical_oracle.py > heisenberg_vertical_oracle.json
"""

import json

import numpy as np

GRID = 301
STEPS = 4000


def arc_points(alpha, start, heading):
    """Unit-speed arc turning left with total turn 2*alpha over a unit chord.

    The control is the constant curvature 1/r with r = 1 / (2 sin alpha),
    so the chord from start has direction heading + alpha.
    """
    r = 1.0 / (2.0 * np.sin(alpha))
    s = np.linspace(0.0, 2.0 * alpha * r, STEPS + 1)
    theta = heading + s / r
    x = start[0] + r * (np.sin(theta) - np.sin(heading))
    y = start[1] - r * (np.cos(theta) - np.cos(heading))
    return np.stack([x, y], axis=1)


def lift(points):
    """Length and Heisenberg height of a polygonal horizontal path."""
    d = np.diff(points, axis=0)
    length = np.sum(np.linalg.norm(d, axis=1))
    x, y = points[:-1, 0], points[:-1, 1]
    z = 0.5 * np.sum(x * d[:, 1] - y * d[:, 0])
    return length, z


def main():
    p0 = np.array([0.0, 0.0])
    p1 = np.array([1.0, 0.0])
    alphas = np.linspace(0.05, np.pi - 0.05, GRID)
    best = (np.inf, None)
    for a1 in alphas:
        first = arc_points(a1, p0, -a1)
        assert np.allclose(first[-1], p1)
        for a2 in alphas:
            second = arc_points(a2, p1, np.pi - a2)
            assert np.allclose(second[-1], p0)
            pts = np.concatenate([first, second[1:]])
            length, z = lift(pts)
            if abs(z) < 1e-12:
                continue
            v = length / np.sqrt(abs(z))
            if v < best[0]:
                best = (v, (a1, a2))
    print(json.dumps({
        "target": [0.0, 0.0, 1.0],
        "v_star": best[0],
        "argmin_half_angles": list(best[1]),
        "grid": GRID,
        "steps_per_arc": STEPS,
    }, indent=2))


if __name__ == "__main__":
    main()
