"""Split one stream's action sequence into episodes.

Three segmenters are available.  The threshold rule cuts wherever the gap
between consecutive alerts exceeds tau.  The Gaussian rule histograms a
window of activity, smooths it, and cuts at valleys between bursts.  The
control-chart rule watches the log-gap mean and closes an episode when a
gap is a statistical outlier confirmed by a distribution shift.
"""

import numpy as np

from alertsynth import RunConfig, make_segmenter
from alertsynth.action_space import Action


def segmenter(kind, **overrides):
    c = RunConfig()
    params = dict(tau=c.tau, bin_width=c.bin_width, sigma_bins=c.sigma_bins,
                  valley_frac=c.valley_frac, window_n=c.window_n,
                  ks_alpha=c.ks_alpha, window=c.window)
    params.update(overrides)
    return make_segmenter(kind, **params)


def actions_at(times_s):
    return [Action(ais=1, service=2, maneuver=7, timebin=4,
                   ts=int(t * 1e6), stream_id="demo", raw_seq=i)
            for i, t in enumerate(times_s)]


def drive(segmenter, times_s):
    """Feed a timeline through a segmenter; returns episode sizes."""
    last = None
    episodes = []
    for action in actions_at(times_s):
        gap = None if last is None else (action.ts - last) / 1e6
        episodes.extend(segmenter.feed(action, gap))
        last = action.ts
    episodes.extend(segmenter.flush())
    return [len(ep) for ep in episodes]


def main():
    rng = np.random.default_rng(7)

    # two tight bursts twenty minutes apart
    burst = lambda start: sorted(start + rng.uniform(0, 30, 25))
    timeline = list(burst(0.0)) + list(burst(1200.0))
    print("timeline: two 25-alert bursts separated by 20 minutes\n")
    for kind in ("threshold", "gaussian"):
        sizes = drive(segmenter(kind, tau=180.0), timeline)
        print(f"  {kind:>12}: episode sizes {sizes}")

    # a regime shift in the gap distribution: chatty then slow
    gaps = np.concatenate([rng.lognormal(0.0, 0.3, 120),
                           rng.lognormal(7.0, 0.3, 40)])
    times = np.cumsum(gaps)
    sizes = drive(segmenter("controlchart"), times)
    print(f"  {'controlchart':>12}: episode sizes {sizes}")
    print("\nThe control chart needs enough post-shift gaps to confirm the")
    print("new regime, so its boundary trails the true change slightly.")


if __name__ == "__main__":
    main()
