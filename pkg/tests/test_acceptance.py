"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import json
import math
import random
import shutil
import time
from pathlib import Path

from ferryline import geocell, harness, scenarios, simulator
from ferryline.ensemble import replay_window_averages
from ferryline.policies import AboveMean, AboveMedian, FixedThreshold
from ferryline.traces import TraceRecord, load_csv, normalize, synthesize
from ferryline.world import TrafficClass, WorldConfig, build_world, classify_blocks, extract_offers

from . import oracles
from .test_geocell import PUBLISHED_VECTORS

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs"


def test_criterion_1_interval_replay(criterion):
    with criterion(1, "four-interval two-policy switching replay") as c:
        t0 = time.perf_counter()
        sel, cum = replay_window_averages({"A": [8, 4, 6, 12], "B": [10, 12, 4, 2]}, "B")
        elapsed = time.perf_counter() - t0
        assert sel == ["B", "A", "A", "B", "B"], sel
        assert cum == [10, 14, 20, 22], cum
        assert all(isinstance(x, int) for x in cum)
        assert elapsed < 1.0
        c.detail = f"selections {''.join(sel)}, cumulative {cum}, {elapsed * 1000:.2f} ms"


def test_criterion_2_geohash_vectors(criterion):
    with criterion(2, "geohash vectors and prefix monotonicity") as c:
        t0 = time.perf_counter()
        assert len(PUBLISHED_VECTORS) >= 20
        assert (57.64911, 10.40744, "u4pruyd") in PUBLISHED_VECTORS
        for lat, lon, code in PUBLISHED_VECTORS:
            assert geocell.encode(lat, lon, len(code)) == code, (lat, lon, code)
        rng = random.Random(20)
        for _ in range(10_000):
            lat, lon = rng.uniform(-90, 90), rng.uniform(-180, 180)
            full = geocell.encode(lat, lon, 12)
            for k in range(1, 12):
                assert geocell.encode(lat, lon, k) == full[:k]
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0
        c.detail = f"{len(PUBLISHED_VECTORS)} vectors, 10000 points, {elapsed:.2f} s"


def test_criterion_3_policy_oracle(criterion):
    with criterion(3, "policy oracle equivalence over 3^10 streams") as c:
        t0 = time.perf_counter()
        n = 0
        for stream in itertools.product((1, 2, 3), repeat=10):
            for tau in (1, 2):
                p = FixedThreshold(tau)
                assert [p.decide(d) for d in stream] == oracles.threshold_decisions(stream, tau)
            p = AboveMean()
            assert [p.decide(d) for d in stream] == oracles.mean_decisions(stream)
            p = AboveMedian()
            assert [p.decide(d) for d in stream] == oracles.median_decisions(stream)
            n += 1
        elapsed = time.perf_counter() - t0
        assert n == 3**10
        assert elapsed < 30.0
        c.detail = f"{n} streams x 4 policies, {elapsed:.2f} s"


CELLS = [(31.2304, 121.4737), (31.2304, 121.4767), (31.2304, 121.4797), (31.2334, 121.4737)]


def test_criterion_4_offer_oracle(criterion):
    with criterion(4, "offer extraction vs quadratic oracle") as c:
        t0 = time.perf_counter()
        rng = random.Random(4)
        total = 0
        for _ in range(100):
            vids = [f"v{i}" for i in range(rng.randint(1, 8))]
            n = rng.randint(1, 50)
            raw = [TraceRecord(rng.randrange(0, 60) * 30, rng.choice(vids), *rng.choice(CELLS)) for _ in range(n)]
            t = normalize(raw)
            assert len(t) <= 50
            scmc = geocell.encode(*CELLS[0])
            got = {(o.block, o.time, o.delivery_delay) for s in extract_offers(t, scmc).values() for o in s}
            recs = [(r.vehicle_id, r.timestamp, r.latitude, r.longitude) for r in t.records]
            want = oracles.offers_quadratic(recs, scmc, lambda la, lo: geocell.encode(la, lo, 7))
            assert got == {(b, tm, d) for (b, tm), (d, _) in want.items()}
            total += len(got)
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0
        c.detail = f"100 traces, {total} offers, {elapsed:.2f} s"


def test_criterion_5_ensemble_dominance(criterion):
    with criterion(5, "ensemble dominance on 3-regime synthetic trace") as c:
        t0 = time.perf_counter()
        spec = scenarios.piecewise_dominance(scenarios.DOMINANCE_SEED)
        trace, summary = synthesize(spec)
        world = build_world(trace)
        (block,) = world.blocks
        offers, prof = world.offers[block], world.profiles[block]
        winners = scenarios.segment_winners(
            scenarios.segment_averages(offers, prof, summary.segment_boundaries, world.start))
        assert winners == ["low", "mean", "high"], winners
        avg = {}
        for sel in simulator.SELECTORS:
            rep = simulator.run_experiment(world, simulator.RunConfig(selector=sel, seed=0))
            avg[sel] = rep.blocks[block].avg_overall
        again = simulator.run_experiment(world, simulator.RunConfig(selector="ensemble", seed=0))
        assert again.blocks[block].avg_overall == avg["ensemble"]
        best_key = min(simulator.POLICY_KEYS, key=avg.get)
        for k in simulator.POLICY_KEYS:
            assert avg["ensemble"] < avg[k], (k, avg)
        gain = avg[best_key] / avg["ensemble"] - 1
        assert gain >= 0.05, avg
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0
        c.detail = (f"ensemble {avg['ensemble'] / 60:.2f} min vs best baseline {best_key} "
                    f"{avg[best_key] / 60:.2f} min, {100 * gain:.1f}% lower, {elapsed:.2f} s")


def ci_worlds():
    yield "toy", load_csv(FIXTURES / "toy.csv")
    spec = scenarios.piecewise_dominance()
    yield "dominance", synthesize(spec)[0]
    yield "class_contrast", synthesize(scenarios.class_contrast())[0]


def test_criterion_6_decomposition(criterion):
    with criterion(6, "decomposition invariant and accept-all bound") as c:
        runs = 0
        for name, trace in ci_worlds():
            for p_high in (95, 100):
                world = build_world(trace, WorldConfig(p_high=p_high))
                for sel in simulator.SELECTORS:
                    for mode in ("per_algorithm", "shared"):
                        cfg = simulator.RunConfig(selector=sel, p_high=p_high, waiting_mode=mode)
                        rep = simulator.run_experiment(world, cfg)  # checks every block
                        for m in rep.blocks.values():
                            simulator.check_decomposition(m)
                            if m.accepted_count:
                                gap = abs(m.avg_overall - (m.avg_waiting + m.avg_delivery))
                                assert gap <= math.ulp(m.avg_overall)
                        runs += 1
                        if sel == "high" and p_high == 100:
                            for b, m in rep.blocks.items():
                                delays = [o.delivery_delay for o in world.offers[b]]
                                assert m.accepted_count == len(delays), (name, b)
                                assert m.avg_delivery == sum(delays) / len(delays)
        c.detail = f"{runs} runs over 3 fixtures"


def test_criterion_7_determinism(criterion, tmp_path):
    with criterion(7, "thread-count and rerun determinism") as c:
        t0 = time.perf_counter()
        shutil.copy(FIXTURES / "toy.csv", tmp_path / "toy.csv")
        cfgs = {
            "toy": {"input": {"csv": "toy.csv"}, "days": [1, 5]},
            "dominance": json.loads((CONFIGS / "dominance.json").read_text()),
        }
        files = 0
        for name, cfg in cfgs.items():
            cfg_path = tmp_path / f"{name}.json"
            cfg_path.write_text(json.dumps(cfg))
            outs = []
            for i, threads in enumerate((1, 4, 4)):
                out = tmp_path / f"{name}_{i}"
                assert harness.main(["run", "--config", str(cfg_path), "--out", str(out),
                                     "--threads", str(threads)]) == 0
                outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            assert outs[0] == outs[1] == outs[2]
            files += len(outs[0])
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0
        c.detail = f"{files} files byte-identical across --threads 1/4 and reruns, {elapsed:.2f} s"


def test_criterion_8_classification_partition(criterion):
    with criterion(8, "traffic classification partition") as c:
        t0 = time.perf_counter()
        rng = random.Random(8)
        seen = set()
        for _ in range(2000):
            n = rng.randint(1, 40)
            shape = rng.choice(("uniform", "heavy"))
            if shape == "uniform":
                counts = [rng.randint(1, 100) for _ in range(n)]
            else:
                counts = [max(1, int(rng.paretovariate(0.8))) for _ in range(n)]
            blocks = {f"b{i}": k for i, k in enumerate(counts)}
            classes, mu, sigma = classify_blocks(blocks)
            assert set(classes) == set(blocks)
            groups = {cls: {b for b, v in classes.items() if v is cls} for cls in TrafficClass}
            assert sum(len(g) for g in groups.values()) == len(blocks)
            for a, b in itertools.combinations(groups.values(), 2):
                assert not a & b
            for b, k in blocks.items():
                expect = (TrafficClass.LIGHT if k < mu else
                          TrafficClass.MEDIUM if k <= sigma else TrafficClass.HIGH)
                assert classes[b] is expect
            seen.update(v for v in classes.values())
        elapsed = time.perf_counter() - t0
        assert seen == set(TrafficClass)
        assert elapsed < 5.0
        c.detail = f"2000 vectors, all three classes exercised, {elapsed:.2f} s"
