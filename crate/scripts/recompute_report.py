#!/usr/bin/env python3
"""Recompute the latency section of report.json from latencies.csv.

Usage: recompute_report.py LATENCIES_CSV [REPORT_JSON]

Without REPORT_JSON the recomputed section is printed with the default
settings (window 1000, disjoint windows, 10 % warm-up). With it, the window
and warm-up settings are taken from the report and every statistic is
compared for exact equality. Exit status is 0 on a match, 1 otherwise.
Uses only the standard library.
"""

import csv
import json
import sys

HEADER = ["event_id", "enqueue_ns", "done_ns", "latency_ns", "compliant"]


def read_rows(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        if next(reader, None) != HEADER:
            raise SystemExit(f"{path}: missing header")
        rows = []
        for rec in reader:
            if not rec:
                continue
            rows.append((rec[0], int(rec[1]), int(rec[2]), int(rec[3]), rec[4] == "1"))
    # Completion order, first result per event.
    rows.sort(key=lambda r: (r[2], r[0]))
    seen, out = set(), []
    for r in rows:
        if r[0] not in seen:
            seen.add(r[0])
            out.append(r)
    return out


def nearest_rank(sorted_vals, p):
    n = len(sorted_vals)
    rank = min(max((p * n + 99) // 100, 1), n)
    return sorted_vals[rank - 1]


def ms(ns):
    return ns / 1e6


def windows(lat, window, cumulative):
    out, start = [], 0
    while start < len(lat):
        end = min(start + window, len(lat))
        w = sorted(lat[0 if cumulative else start:end])
        out.append({
            "window_end": end,
            "p50_ms": ms(nearest_rank(w, 50)),
            "p75_ms": ms(nearest_rank(w, 75)),
            "p95_ms": ms(nearest_rank(w, 95)),
        })
        start = end
    return out


def stats(rows, window=1000, cumulative=False, warmup_pct=10):
    n = len(rows)
    lat = [r[3] for r in rows]
    s = sorted(lat)
    warm = n * warmup_pct // 100
    post = sorted(lat[warm:])

    def pct(vals, p):
        return ms(nearest_rank(vals, p)) if vals else None

    span = max(r[2] for r in rows) - min(r[1] for r in rows) if rows else 0
    if span < 0:
        span = 0
    series = []
    for r in rows:
        sec = r[2] // 1_000_000_000
        if series and series[-1]["second"] == sec:
            series[-1]["events"] += 1
        else:
            series.append({"second": sec, "events": 1})
    return {
        "count": n,
        "compliant": sum(1 for r in rows if r[4]),
        "window": window,
        "cumulative": cumulative,
        "warmup_pct": warmup_pct,
        "warmup_events": warm,
        "median_ms": pct(s, 50),
        "mean_ms": ms(sum(lat) // n) if n else None,
        "p75_ms": pct(s, 75),
        "p95_ms": pct(s, 95),
        "p99_ms": pct(s, 99),
        "max_ms": pct(s, 100),
        "post_warmup_median_ms": pct(post, 50),
        "post_warmup_p95_ms": pct(post, 95),
        "span_ns": span,
        "throughput_total_eps": n / (span / 1e9) if span > 0 else None,
        "percentile_series": windows(lat, window, cumulative),
        "throughput_series": series,
    }


def main(argv):
    if len(argv) not in (2, 3):
        print(__doc__, file=sys.stderr)
        return 2
    rows = read_rows(argv[1])
    if len(argv) == 2:
        print(json.dumps(stats(rows), indent=2))
        return 0
    with open(argv[2]) as f:
        expected = json.load(f)["latency"]
    got = stats(rows, expected["window"], expected["cumulative"], expected["warmup_pct"])
    bad = [k for k in expected if got.get(k) != expected[k]]
    bad += [k for k in got if k not in expected]
    if bad:
        for k in bad:
            print(f"mismatch {k}: report {expected.get(k)!r} recomputed {got.get(k)!r}")
        return 1
    print(f"ok: {len(got)} statistics over {got['count']} events match")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
