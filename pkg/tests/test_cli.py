import json

import numpy as np
import pytest

from flashvid import SynthSpec, generate, load_result, write_npy
from flashvid.cli import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main


@pytest.fixture()
def clip(tmp_path):
    feats, attn = generate(SynthSpec(frames=10, tokens_per_frame=12, dim=8, seed=21))
    fpath = tmp_path / "feats.npy"
    apath = tmp_path / "attn.npy"
    write_npy(fpath, feats.data)
    write_npy(apath, attn.data)
    return fpath, apath


def test_compress_writes_tokens_and_report(clip, tmp_path, capsys):
    fpath, apath = clip
    out = tmp_path / "out.npy"
    code = main(
        [
            "compress",
            "--features", str(fpath),
            "--attention", str(apath),
            "--output", str(out),
            "--min-segments", "2",
            "--retention", "0.15",
        ]
    )
    assert code == EXIT_OK
    result = load_result(out)
    assert result.stats["output_tokens"] == result.tokens.shape[0]
    assert "timings" not in result.stats  # reports stay byte-stable
    summary = capsys.readouterr().out
    assert "compressed 120 ->" in summary


def test_compress_report_path_flag(clip, tmp_path):
    fpath, _ = clip
    out = tmp_path / "out.npy"
    report = tmp_path / "custom.json"
    code = main(
        [
            "compress",
            "--features", str(fpath),
            "--output", str(out),
            "--report", str(report),
            "--budget", "9",
            "--min-segments", "2",
        ]
    )
    assert code == EXIT_OK
    blob = json.loads(report.read_text())
    assert blob["schema"] == "flashvid-report-v1"
    assert blob["stats"]["budget"] == 9
    assert blob["stats"]["output_tokens"] == 9


def test_compress_strategy_flag(clip, tmp_path):
    fpath, apath = clip
    out = tmp_path / "out.npy"
    code = main(
        [
            "compress",
            "--features", str(fpath),
            "--attention", str(apath),
            "--output", str(out),
            "--strategy", "ttm_only",
            "--min-segments", "2",
            "--retention", "0.15",
        ]
    )
    assert code == EXIT_OK
    assert load_result(out).stats["strategy"] == "ttm_only"


def test_config_file_and_flag_precedence(clip, tmp_path):
    fpath, _ = clip
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"budget": 10, "min_segments": 2}))
    out = tmp_path / "out.npy"
    code = main(
        [
            "compress",
            "--features", str(fpath),
            "--output", str(out),
            "--config", str(cfg_path),
            "--budget", "14",  # flag wins over the file
        ]
    )
    assert code == EXIT_OK
    assert load_result(out).stats["budget"] == 14


def test_unknown_config_key_is_usage_error(clip, tmp_path, capsys):
    fpath, _ = clip
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"no_such_option": 1}))
    code = main(
        [
            "compress",
            "--features", str(fpath),
            "--output", str(tmp_path / "out.npy"),
            "--config", str(cfg_path),
        ]
    )
    assert code == EXIT_USAGE
    assert "no_such_option" in capsys.readouterr().err


def test_invalid_flag_value_is_usage_error(clip, tmp_path, capsys):
    fpath, _ = clip
    code = main(
        [
            "compress",
            "--features", str(fpath),
            "--output", str(tmp_path / "out.npy"),
            "--merge-threshold", "2.0",
        ]
    )
    assert code == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_missing_input_is_usage_error(tmp_path, capsys):
    code = main(
        [
            "compress",
            "--features", str(tmp_path / "missing.npy"),
            "--output", str(tmp_path / "out.npy"),
        ]
    )
    assert code == EXIT_USAGE


def test_malformed_tensor_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.npy"
    bad.write_bytes(b"garbage")
    code = main(
        ["compress", "--features", str(bad), "--output", str(tmp_path / "out.npy")]
    )
    assert code == EXIT_USAGE


def test_plan_budget_json(capsys):
    code = main(["plan-budget", "--layers", "28", "--prune-layer", "20"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    blob = json.loads(out)
    assert blob["inner_keep_exact"] == "3/10"
    assert blob["before_llm_tokens"] == 784
    assert blob["kept_after_prune"] == 235
    assert out.endswith("\n")


def test_plan_budget_infeasible(capsys):
    code = main(
        ["plan-budget", "--layers", "28", "--prune-layer", "20", "--expansion", "1.5"]
    )
    assert code == EXIT_USAGE


def test_segment_json(clip, capsys):
    fpath, _ = clip
    code = main(
        ["segment", "--features", str(fpath), "--min-segments", "3"]
    )
    assert code == EXIT_OK
    blob = json.loads(capsys.readouterr().out)
    assert blob["frames"] == 10
    segs = blob["segments"]
    assert segs[0][0] == 0 and segs[-1][1] == 9
    assert len(segs) >= 3
    for cut in blob["cuts"]:
        assert cut["reason"] in ("threshold", "floor")


def test_gen_synth_roundtrip(tmp_path, capsys):
    fpath = tmp_path / "synth.npy"
    apath = tmp_path / "synth_attn.npy"
    code = main(
        [
            "gen-synth",
            "--out-features", str(fpath),
            "--out-attention", str(apath),
            "--frames", "6",
            "--tokens", "10",
            "--dim", "8",
            "--seed", "9",
        ]
    )
    assert code == EXIT_OK
    feats, attn = generate(
        SynthSpec(frames=6, tokens_per_frame=10, dim=8, seed=9)
    )
    assert np.load(fpath).tobytes() == feats.data.tobytes()
    assert np.load(apath).tobytes() == attn.data.tobytes()


def test_eval_writes_csv_and_json(clip, tmp_path):
    fpath, apath = clip
    csv_path = tmp_path / "eval.csv"
    json_path = tmp_path / "eval.json"
    code = main(
        [
            "eval",
            "--features", str(fpath),
            "--attention", str(apath),
            "--strategies", "flashvid,ttm_only",
            "--thresholds", "0.7,0.9",
            "--out", str(csv_path),
            "--json-out", str(json_path),
            "--min-segments", "2",
            "--retention", "0.15",
        ]
    )
    assert code == EXIT_OK
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0].startswith("strategy,merge_threshold,frame,")
    assert len(lines) == 1 + 2 * 2 * 10  # strategies x thresholds x frames
    blob = json.loads(json_path.read_text())
    assert len(blob["rows"]) == 4
    assert {r["merge_threshold"] for r in blob["rows"]} == {0.7, 0.9}


def test_compress_deterministic_reports(clip, tmp_path):
    fpath, apath = clip
    args_for = lambda out: [
        "compress",
        "--features", str(fpath),
        "--attention", str(apath),
        "--output", str(out),
        "--min-segments", "2",
        "--retention", "0.15",
    ]
    out1, out2 = tmp_path / "a.npy", tmp_path / "b.npy"
    assert main(args_for(out1)) == EXIT_OK
    assert main(args_for(out2)) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    assert (
        (tmp_path / "a.npy.report.json").read_bytes()
        == (tmp_path / "b.npy.report.json").read_bytes()
    )
