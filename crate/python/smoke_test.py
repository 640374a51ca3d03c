"""Smoke test for the yzero extension module.

Build with `cargo build --release -p yzero-py`, copy
target/release/libyzero.so next to this file as yzero.so (or put it on
PYTHONPATH), then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import yzero  # noqa: E402


def main():
    c = yzero.Constellation(16, 4.0)
    assert (c.bases, c.states, c.energy) == (16, 32, 4.0)
    assert len(c.amplitudes()) == 32

    ks = yzero.Keystream.for_key(8, 91, c)
    spec = ks.spec()
    assert set(spec) == {"poly_bitmask_hex", "seed_hex", "bits_per_symbol"}
    symbols = yzero.encode([0, 1, 1, 0], ks, c)
    assert [s["bit"] for s in symbols] == [0, 1, 1, 0]

    a = complex(2.0, 0.0)
    pe = yzero.helstrom_pure(a, -a)
    assert abs(pe - 0.5 * (1 - math.sqrt(1 - math.exp(-16)))) < 1e-15

    osk = yzero.helstrom_bits(yzero.Constellation(4, 1.0, osk=True))
    assert abs(osk["p_error"] - 0.5) < 1e-12
    assert yzero.srm_mary_error(yzero.Constellation(128, 4.0)) >= 0.9

    rows = yzero.keygen_advantage([2.0, 3.0, 4.0, 5.0, 6.0])
    slope, _, _ = yzero.exponent_fit([(r["energy"], r["pe_bob"]) for r in rows])
    assert -4.5 <= slope <= -3.5

    rec = yzero.nishioka_attack(c, 8, 32, seed=1)
    assert rec["true_r_in_candidates"] and rec["true_seed_distance"] == 0
    assert len(rec["per_seed_match_fraction"]) == 256

    rep = yzero.entropy_report(c, 8, 16, 200, seed=2, dsr_f=0.5)
    assert rep["ciphertext_only"]["h_k_given_y"] == 8.0

    with tempfile.TemporaryDirectory() as d:
        cfg = os.path.join(d, "b.toml")
        with open(cfg, "w") as f:
            f.write("[constellation]\nM = []\nS = 1.0\n")
        try:
            yzero.run_config("bounds", cfg, d)
        except yzero.ConfigError as e:
            assert "line 2" in str(e)
        else:
            raise AssertionError("empty grid accepted")
        with open(cfg, "w") as f:
            f.write("[constellation]\nM = [4, 8]\nS = 1.0\n")
        files = yzero.run_config("bounds", cfg, d, timestamp=0)
        assert sorted(os.path.basename(p) for p in files) == ["bounds.csv", "manifest.json"]

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
