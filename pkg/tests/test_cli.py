import json

import numpy as np
import pytest

from returnlab.cli import (
    ConfigError,
    SequenceParseError,
    config_from_dict,
    content_digest,
    load_config,
    load_sequence,
    main,
    save_sequence,
)
from returnlab.generators import Bernoulli, Periodic, SymbolSequence, generate


def write_config(tmp_path, **fields):
    cfg = {
        "process": {"kind": "bernoulli", "probabilities": [0.5, 0.5]},
        "sample_length": 200_000,
        "seed": 7,
        "n_range": [3, 6],
        "epsilon": 0.05,
        "experiments": ["theorem1_decay"],
        "output_dir": str(tmp_path / "out"),
    }
    cfg.update(fields)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg, indent=1))
    return path


# -- sequence files -----------------------------------------------------------


def test_round_trip_small(tmp_path):
    seq = generate(Periodic((0, 1, 2)), 7, 0)
    save_sequence(tmp_path / "s.txt", seq)
    back = load_sequence(tmp_path / "s.txt")
    assert back == seq
    text = (tmp_path / "s.txt").read_text().splitlines()
    assert text[0] == "alphabet 3 length 7"
    assert text[2] == "0 1 2 0 1 2 0"
    assert text[-1].startswith("digest ")


def test_round_trip_large_alphabet(tmp_path):
    seq = SymbolSequence(300, np.arange(1000) % 300)
    save_sequence(tmp_path / "s.txt", seq)
    assert load_sequence(tmp_path / "s.txt") == seq


def test_round_trip_long_preserves_digest(tmp_path):
    seq = generate(Bernoulli((0.5, 0.5)), 10_000_000, 3)
    digest = save_sequence(tmp_path / "s.txt", seq)
    back = load_sequence(tmp_path / "s.txt")
    assert content_digest(back) == digest
    assert back == seq


def test_symbol_out_of_range(tmp_path):
    p = tmp_path / "s.txt"
    p.write_bytes(b"alphabet 2 length 3\nprovenance none\n0 1 2\ndigest 0000000000000000\n")
    with pytest.raises(SequenceParseError) as err:
        load_sequence(p)
    # offset of the bad token
    assert err.value.offset == len(b"alphabet 2 length 3\nprovenance none\n0 1 ")


def test_non_numeric_symbol(tmp_path):
    p = tmp_path / "s.txt"
    p.write_bytes(b"alphabet 2 length 2\nprovenance none\n0 x\ndigest 0000000000000000\n")
    with pytest.raises(SequenceParseError, match="'x'"):
        load_sequence(p)


def test_malformed_header(tmp_path):
    p = tmp_path / "s.txt"
    p.write_bytes(b"alphabet two\n0 1\n")
    with pytest.raises(SequenceParseError) as err:
        load_sequence(p)
    assert err.value.offset == 0


def test_length_and_digest_mismatch(tmp_path):
    seq = SymbolSequence(2, np.array([0, 1, 1]))
    p = tmp_path / "s.txt"
    save_sequence(p, seq)
    raw = p.read_bytes()
    p.write_bytes(raw.replace(b"length 3", b"length 4"))
    with pytest.raises(SequenceParseError, match="declares 4"):
        load_sequence(p)
    p.write_bytes(raw.replace(b"0 1 1", b"1 1 1"))
    with pytest.raises(SequenceParseError, match="digest mismatch"):
        load_sequence(p)
    p.write_bytes(raw.split(b"digest")[0])
    with pytest.raises(SequenceParseError, match="digest"):
        load_sequence(p)


# -- configuration ------------------------------------------------------------


def test_config_errors(tmp_path):
    base = {"process": {"kind": "periodic", "word": [0, 1]}, "sample_length": 1000, "seed": 1}
    assert config_from_dict(base).n_range == (4, 10)
    with pytest.raises(ConfigError, match="'seed': missing"):
        config_from_dict({k: v for k, v in base.items() if k != "seed"})
    with pytest.raises(ConfigError, match="'colour': unknown"):
        config_from_dict({**base, "colour": 1})
    with pytest.raises(ConfigError, match="n_range"):
        config_from_dict({**base, "n_range": [4, 200]})
    with pytest.raises(ConfigError, match="experiments"):
        config_from_dict({**base, "n_range": [2, 4], "experiments": ["magic"]})
    with pytest.raises(ConfigError, match="process"):
        config_from_dict({**base, "process": {"kind": "bernoulli", "probabilities": [0.5, 0.6]}})
    with pytest.raises(ConfigError, match="epsilon"):
        config_from_dict({**base, "n_range": [2, 4], "epsilon": 0})
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict({**base, "seed": 2**64})


def test_config_json_syntax_error_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "seed": 1,\n  "sample_length": ,\n}')
    with pytest.raises(ConfigError, match=r"bad.json:3:"):
        load_config(p)


def test_guard_violation_exits_before_generation(tmp_path):
    path = write_config(tmp_path, sample_length=100, n_range=[4, 20])
    assert main(["decay", "--config", str(path), "--quiet"]) == 2
    assert not (tmp_path / "out").exists()


def test_usage_error():
    assert main(["bogus"]) == 2


# -- runs ---------------------------------------------------------------------


def test_kac_periodic(tmp_path):
    path = write_config(tmp_path, process={"kind": "periodic", "word": [0, 1]}, sample_length=10_000, n_range=[2, 4])
    assert main(["kac", "--config", str(path), "--quiet"]) == 0
    rows = (tmp_path / "out" / "kac.csv").read_text().splitlines()
    assert rows[0] == "n,mean_normalized_return,analyzed_mass,verdict"
    for line in rows[1:]:
        n, mean, mass, verdict = line.split(",")
        assert float(mean) == pytest.approx(1.0, abs=1e-3) and verdict == "pass"
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["verdicts"] == {"kac_suite": "pass"}


def test_decay_verdict_failure_exit_code(tmp_path):
    path = write_config(tmp_path, process={"kind": "periodic", "word": [0, 1, 2]}, sample_length=10_000, n_range=[2, 3], epsilon=0.3)
    assert main(["decay", "--config", str(path), "--quiet"]) == 1


def strip_timings(path):
    data = json.loads(path.read_text())
    data.pop("timings")
    data["config"].pop("output_dir")
    return data


def test_outputs_identical_across_threads(tmp_path):
    path = write_config(
        tmp_path, experiments=["theorem1_decay", "limit_law_probe", "kac_suite", "analyze", "ornstein_weiss_scale"]
    )
    assert main(["all", "--config", str(path), "--output", str(tmp_path / "a"), "--threads", "1", "--quiet"]) in (0, 1)
    assert main(["all", "--config", str(path), "--output", str(tmp_path / "b"), "--threads", "0", "--quiet"]) in (0, 1)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        if name.endswith(".csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert strip_timings(tmp_path / "a" / "summary.json") == strip_timings(tmp_path / "b" / "summary.json")


def test_decay_csv_schema(tmp_path):
    path = write_config(tmp_path)
    main(["decay", "--config", str(path), "--quiet"])
    lines = (tmp_path / "out" / "decay.csv").read_text().splitlines()
    assert lines[0] == "n,epsilon,repelling_mass,attracting_mass,analyzed_mass,block_count"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [3, 4, 5, 6]


def test_seed_override_and_generate(tmp_path):
    path = write_config(tmp_path, sample_length=5000)
    assert main(["generate", "--config", str(path), "--seed", "99", "--quiet"]) == 0
    seq = load_sequence(tmp_path / "out" / "sequence.txt")
    assert seq == generate(Bernoulli((0.5, 0.5)), 5000, 99)


def test_analyze_from_file(tmp_path):
    path = write_config(tmp_path, sample_length=5000)
    main(["generate", "--config", str(path), "--quiet"])
    seq_path = tmp_path / "out" / "sequence.txt"
    assert main(["analyze", "--config", str(path), "--input", str(seq_path), "--n", "3", "--output", str(tmp_path / "an"), "--quiet"]) == 0
    blocks = (tmp_path / "an" / "blocks_n3.csv").read_text().splitlines()
    assert blocks[0].startswith("block,count,measure")
    assert len(blocks) == 9
    curve = (tmp_path / "an" / "g_curve_n3.csv").read_text().splitlines()
    assert curve[0] == "t,G,baseline"


def test_runtime_error_recorded(tmp_path):
    # n = 8 on 1000 symbols passes the guard but no block reaches min_count
    path = write_config(tmp_path, sample_length=1000, n_range=[8, 8], experiments=["kac_suite"])
    assert main(["all", "--config", str(path), "--quiet"]) == 3
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["verdicts"]["kac_suite"] == "error"
    assert "undersampled" in summary["results"]["kac_suite"]["error"]


def test_examples_command_runs(tmp_path):
    code = main(["examples", "--length", "1000000", "--output", str(tmp_path / "ex"), "--quiet"])
    assert code in (0, 1, 3)
    summary = json.loads((tmp_path / "ex" / "summary.json").read_text())
    assert set(summary["verdicts"]) == {"example1_check", "example2_attracting_check", "remark4_check", "mirrored_check"}
    assert summary["verdicts"]["example1_check"] == "pass"
