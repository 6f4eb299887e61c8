#!/usr/bin/env python3
"""Free heave decay of the FDS: measured frequency and log decrement."""
import numpy as np

from hybridsea.vessel import assemble_vessel, decay_test


def main():
    model = assemble_vessel()
    traj = decay_test(model, offset=1.0, duration=30.0, dt=0.01)
    z, t = traj.pos[:, 2], traj.t
    up = np.flatnonzero((z[:-1] < 0) & (z[1:] >= 0))
    tc = t[up] - z[up] * (t[up + 1] - t[up]) / (z[up + 1] - z[up])
    peaks = [i for i in range(1, len(z) - 1) if z[i] > 0 and z[i - 1] < z[i] >= z[i + 1]][:5]
    wn = model.heave_natural_frequency
    print(f"undamped natural frequency   {wn:.4f} rad/s")
    print(f"measured (damped) frequency  {2 * np.pi / np.diff(tc).mean():.4f} rad/s")
    print(f"log decrements               {np.round(np.log(z[peaks[:-1]] / z[peaks[1:]]), 4)}")
    print(f"theory for zeta=0.1          {2 * np.pi * 0.1 / np.sqrt(1 - 0.01):.4f}")


if __name__ == "__main__":
    main()
