"""Regenerate the two CSVs shipped under src/selreg/data/.

Both are synthetic (no licensing strings attached) and small enough that the
test suite never needs the network.  Rerunning produces byte-identical
files.
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "selreg" / "data"


def hetero_demand(n: int = 800, seed: int = 11) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """3 features; noise variance ramps with the third feature."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, size=(n, 3))
    mean = 2.0 + 1.5 * x[:, 0] - 0.8 * x[:, 1] + 0.6 * x[:, 0] * x[:, 1]
    sd = 0.2 + 0.9 * (x[:, 2] > 0.5)
    y = mean + rng.standard_normal(n) * sd
    return x, y, ["x0", "x1", "x2", "target"]


def linear_plant(n: int = 400, seed: int = 12) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """2 features, homoscedastic linear response."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 3.0, size=(n, 2))
    y = 1.0 + 0.8 * x[:, 0] - 1.2 * x[:, 1] + rng.standard_normal(n) * 0.3
    return x, y, ["x0", "x1", "target"]


def write_csv(path: Path, x: np.ndarray, y: np.ndarray, header: list[str]) -> None:
    lines = [",".join(header)]
    for row, target in zip(x, y):
        lines.append(",".join(f"{v:.6f}" for v in row) + f",{target:.6f}")
    path.write_text("\n".join(lines) + "\n")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, maker in (("hetero_demand.csv", hetero_demand), ("linear_plant.csv", linear_plant)):
        x, y, header = maker()
        write_csv(OUT / name, x, y, header)
        print(f"wrote {OUT / name} ({x.shape[0]} rows)")


if __name__ == "__main__":
    main()
