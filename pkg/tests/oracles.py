"""Independent reference implementations used by the unit and acceptance tests.

Each one is written from the model definitions directly and shares no code with the package.
"""

import json
import math

import numpy as np


def calc_fly(v):
    # written out term by term with the default constants
    lam, rho, s, A, omega, r, d0, U = 0.012, 1.225, 0.05, 0.503, 300.0, 0.4, 0.6, 120.0
    blade = lam / 8 * rho * s * A * omega ** 3 * r ** 3
    return blade * (1 + 3 * v ** 2 / U ** 2) + 0.5 * d0 * rho * s * A * v ** 3


def calc_hover(corr=0.1):
    return (1 + corr) * 20.0 ** 1.5 / math.sqrt(2 * 1.225 * 0.503)


W = (8.0, 0.4, 0.4, 0.4, 0.6, 0.4, 0.6, 1.0, 0.01)


def oracle_reward(td, d_ou, d_bz, d_nfz, in_rz, v, d_area, exited, d_la, E, E_min,
                  v_limit=5.0, v_max=10.0, d_min=5.0, d_safe=15.0, d_tar=100.0):
    """Straight-line rewrite of the nine reward terms, one branch per line."""
    out = []
    out.append(W[0] if td > 0 else 0.0)
    for d, w in ((d_ou, W[1]), (d_bz, W[2]), (d_nfz, W[3])):
        if d >= d_safe:
            out.append(0.0)
        elif d <= d_min:
            out.append(-w)
        else:
            out.append(-w * (d_safe - d) / (d_safe - d_min))
    if in_rz and v > v_limit:
        out.append(-W[4] * (v - v_limit) / (v_max - v_limit))
    else:
        out.append(0.0)
    if exited:
        out.append(-W[5])
    elif d_area >= d_safe:
        out.append(0.0)
    elif d_area <= d_min:
        out.append(-W[5])
    else:
        out.append(-W[5] * (d_safe - d_area) / (d_safe - d_min))
    if d_la > 0 and d_la < d_tar:
        out.append(W[6] * (1 - d_la / d_tar))
    else:
        out.append(0.0)
    if E >= E_min:
        out.append(0.0)
    else:
        out.append(-W[7] * (E_min - E) / E_min)
    out.append(-W[8])
    return out


def draw_reward_state(rng):
    pick = lambda cont, special: special[rng.integers(len(special))] if rng.random() < 0.3 else cont
    d = lambda: pick(float(rng.uniform(0, 30)), [5.0, 15.0, 0.0, 5.0 + 1e-12, 15.0 - 1e-12])
    E_min = float(rng.uniform(1.0, 1e4))
    E = pick(float(rng.uniform(0, 2e4)), [E_min, E_min * (1 - 1e-12)])
    return dict(
        td=pick(float(rng.uniform(0, 3)), [0.0]),
        d_ou=d(), d_bz=d(), d_nfz=d(),
        in_rz=bool(rng.random() < 0.5),
        v=pick(float(rng.uniform(0, 10)), [5.0, 10.0, 0.0]),
        d_area=d(), exited=bool(rng.random() < 0.1),
        d_la=pick(float(rng.uniform(0, 150)), [0.0, 100.0]),
        E=E, E_min=E_min,
    )




# -- finite differences -----------------------------------------------------------------
def central_diff(f, params, h=1e-5):
    """Central-difference gradient of scalar ``f()`` with respect to each array in ``params``."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + h
            fp = f()
            p[i] = old - h
            fm = f()
            p[i] = old
            g[i] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def max_rel_err(analytic, numeric):
    return max(float(np.max(np.abs(a - n) / (np.abs(a) + 1e-8))) for a, n in zip(analytic, numeric))


# -- metrics from raw episode logs ------------------------------------------------------
def scan_metrics(texts):
    """DCR, CR, SLR, RVR, ECR straight from JSONL episode logs."""
    got = tgt = used = budget = 0.0
    n = crashed = landed = violated = 0
    for text in texts:
        lines = [json.loads(x) for x in text.splitlines() if x.strip()]
        head, recs = lines[0], lines[1:]
        n += 1
        td = 0.0
        hit = viol = False
        for r in recs:
            e = r["events"]
            td += e["td"]
            if e["collided_ou"] or e["collided_bz"] or e["entered_nfz"]:
                hit = True
            if e["rz_speed_violation"]:
                viol = True
        got += min(td, head["initial_data"])
        tgt += head["initial_data"]
        e_used = recs[-1]["energy"] if recs else 0.0
        used += e_used
        budget += head["energy_total"]
        crashed += hit
        violated += viol
        if recs and recs[-1]["events"]["landed"] and not head["advisor_terminated"] \
                and e_used <= head["energy_limit"]:
            landed += 1
    return {"DCR": got / tgt, "CR": crashed / n, "SLR": landed / n, "RVR": violated / n, "ECR": used / budget}


def synthetic_log(rng, scenario_doc):
    """A random but well-formed episode log as JSONL text."""
    initial = float(rng.uniform(1, 40))
    steps = int(rng.integers(1, 30))
    recs = []
    energy = 0.0
    left = initial
    for t in range(steps):
        td = float(min(left, rng.uniform(0, 3))) if rng.random() < 0.5 else 0.0
        left -= td
        energy += float(rng.uniform(150, 200))
        last = t == steps - 1
        end = rng.choice(["landed", "collided_ou", "collided_bz", "entered_nfz", "timeout"]) if last else ""
        ev = {"collided_ou": end == "collided_ou", "collided_bz": end == "collided_bz",
              "entered_nfz": end == "entered_nfz", "rz_speed_violation": bool(rng.random() < 0.05),
              "exited_area_attempt": False, "landed": end == "landed", "energy_exhausted": False,
              "timeout": end == "timeout", "td": td}
        recs.append({"t": t, "pos": [0.0, 0.0], "vel": [0.0, 0.0], "action": [0.0, 0.0],
                     "source": "policy", "reward": {"total": float(rng.normal())}, "events": ev,
                     "energy": energy})
    head = {"header": True, "seed": 0, "advisor_terminated": bool(rng.random() < 0.05),
            "initial_data": initial, "energy_total": 1e6,
            "energy_limit": float(rng.choice([8e5, energy - 1.0])), "scenario": scenario_doc}
    return "\n".join(json.dumps(x) for x in [head, *recs]) + "\n"
