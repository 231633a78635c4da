"""Reproduce the four worked examples: squeezed thermal, coherent squeeze-phase, truncated series, two-mode squeezing."""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from gaussfisher import qfim as Q
from gaussfisher import sld as L
from gaussfisher.family import InitialState, catalog_family, evaluate_bundle
from gaussfisher.gaussian_catalog import ChannelStep


@dataclass
class Config:
    lam: float = 2.0
    r: float = 1.0
    alpha_re: float = 0.3
    alpha_im: float = -0.7
    theta: float = 0.9
    series_target: float = 1e-2
    tmsv_points: tuple = (0.0, 0.1, 1.0)


def squeezed_thermal(cfg):
    fam = catalog_family(InitialState("thermal", 1, {"betas": ["beta"]}), [ChannelStep("squeeze", (0,), {"r": "r"})], ["beta", "r"])
    b = evaluate_bundle(fam, [2 * np.arctanh(1 / cfg.lam), cfg.r])
    closed = np.diag([(cfg.lam**2 - 1) / 4, 4 * cfg.lam**2 / (cfg.lam**2 + 1)])
    out = {m: Q.qfim(b, m).H.tolist() for m in ("mixed", "williamson", "compact")}
    out["closed_form"] = closed.tolist()
    out["max_abs_C"] = float(np.max(np.abs(L.saturability(b).C)))
    lim = Q.qfim_limit(b, cfg.series_target)
    out["series"] = {"M": lim.series_terms_used, "threshold": lim.extras["terms_threshold"], "H": lim.H.tolist()}
    return out


def coherent_squeeze_phase(cfg):
    alpha = complex(cfg.alpha_re, cfg.alpha_im)
    steps = [ChannelStep("squeeze", (0,), {"r": "r"}), ChannelStep("rotation", (0,), {"theta": "theta"})]
    fam = catalog_family(InitialState("coherent", 1, {"alphas": [[alpha.real, alpha.imag]]}), steps, ["r", "theta"])
    b = evaluate_bundle(fam, [cfg.r, cfg.theta])
    out = {}
    for m in ("williamson", "pure", "regularized"):
        c = L.saturability(b, m).C[0, 1]
        out[m] = {"H": Q.qfim(b, m).H.tolist(), "C_r_theta": [c.real, c.imag]}
    return out


def tmsv(cfg):
    full = catalog_family(InitialState("two_mode_squeezed_vacuum", 2, {"r": "r", "modes": [0, 1]}), [], ["r"])
    reduced = catalog_family(InitialState("two_mode_squeezed_vacuum", 2, {"r": "r", "modes": [0, 1]}), [], ["r"], keep=[0])
    rows = []
    for r in cfg.tmsv_points:
        bf = evaluate_bundle(full, [r], hessians=True, second_derivatives=True)
        br = evaluate_bundle(reduced, [r], hessians=True)
        rows.append({
            "r": r,
            "full_H": float(Q.qfim(bf).H[0, 0]),
            "full_Hc": float(Q.cqfim(bf).H[0, 0]),
            "reduced_H": float(Q.qfim(br).H[0, 0]),
            "reduced_Hc": float(Q.cqfim(br).H[0, 0]),
        })
    return rows


def main():
    cfg = Config()
    ap = argparse.ArgumentParser(description=__doc__)
    for k, v in asdict(cfg).items():
        if not isinstance(v, tuple):
            ap.add_argument(f"--{k.replace('_', '-')}", type=type(v), default=v)
    args = ap.parse_args()
    cfg = Config(**{**asdict(cfg), **{k: v for k, v in vars(args).items()}})
    report = {"squeezed_thermal": squeezed_thermal(cfg), "coherent_squeeze_phase": coherent_squeeze_phase(cfg), "tmsv": tmsv(cfg)}
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
