"""End-to-end command-line behavior and exit codes."""
from __future__ import annotations

import json

import numpy as np
import pytest

from insnvec import model as model_mod
from insnvec.cli import run
from insnvec.corpus import build_vocab, load_pairs
from insnvec.model import init

from conftest import make_pairs
from test_model import parse_text_export


@pytest.fixture()
def corpus_path(tmp_path):
    from insnvec.corpus import save_pairs
    path = tmp_path / "corpus.jsonl"
    save_pairs(make_pairs(), path)
    return path


def train_args(corpus, model, **kw):
    args = ["train", "--corpus", str(corpus), "--model", str(model),
            "--dim", "8", "--window", "2", "--epochs", "2", "--negatives", "3",
            "--subsample", "1", "--min-count", "1", "--seed", "3"]
    for flag, value in kw.items():
        args += [f"--{flag.replace('_', '-')}", str(value)]
    return args


@pytest.fixture()
def model_path(tmp_path, corpus_path):
    path = tmp_path / "model.xaem"
    assert run(train_args(corpus_path, path)) == 0
    return path


# --- exit codes ---

def test_no_subcommand_is_usage_error(capsys):
    assert run([]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert run(["train", "--corpus", "x", "--model", "y", "--frobnicate"]) == 1


def test_invalid_hyperparameter_is_usage_error(corpus_path, tmp_path, capsys):
    code = run(train_args(corpus_path, tmp_path / "m.xaem", dim=0))
    assert code == 1
    assert "dim" in capsys.readouterr().err


def test_missing_file_is_data_error(tmp_path, capsys):
    assert run(["nn", "--model", str(tmp_path / "absent.xaem"),
                "--token", "x86:ret"]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_corpus_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n")
    assert run(["train", "--corpus", str(bad),
                "--model", str(tmp_path / "m.xaem")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "COMMAND" in capsys.readouterr().out


# --- train ---

def test_train_prints_loss_table_and_saves(corpus_path, tmp_path, capsys):
    path = tmp_path / "model.xaem"
    assert run(train_args(corpus_path, path)) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# epoch")
    data_rows = [l for l in out if l and not l.startswith("#")]
    assert len(data_rows) == 2  # one row per epoch
    epoch, mono_steps, mono_mean, multi_steps, multi_mean = data_rows[0].split("\t")
    assert int(mono_steps) > 0 and int(multi_steps) > 0
    assert float(mono_mean) > 0 and float(multi_mean) > 0
    assert path.exists()
    loaded = model_mod.load(path)
    assert loaded.dim == 8


def test_train_is_reproducible_at_file_level(corpus_path, tmp_path):
    p1, p2 = tmp_path / "a.xaem", tmp_path / "b.xaem"
    assert run(train_args(corpus_path, p1)) == 0
    assert run(train_args(corpus_path, p2)) == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_train_zero_epochs_saves_the_fresh_init(corpus_path, tmp_path):
    path = tmp_path / "m.xaem"
    assert run(train_args(corpus_path, path, epochs=0)) == 0
    loaded = model_mod.load(path)
    fresh = init(build_vocab(load_pairs(corpus_path), 1), dim=8, seed=3)
    assert np.array_equal(loaded.input, fresh.input)
    assert not np.any(loaded.output)


# --- preprocess ---

def test_preprocess_normalizes_in_place_and_keeps_extras(tmp_path, capsys):
    path = tmp_path / "raw.jsonl"
    record = {
        "id": "r1",
        "a": {"arch": "x86", "ins": ["MOV EBP, ESP"]},
        "b": {"arch": "arm", "ins": ["MOV R11, SP"]},
        "label": 1,
    }
    path.write_text(json.dumps(record) + "\n")
    assert run(["preprocess", "--corpus", str(path)]) == 0
    assert "normalized 1 records" in capsys.readouterr().out
    rewritten = json.loads(path.read_text())
    assert rewritten["normalized"] is True
    assert rewritten["a"]["ins"] == ["mov ebp,esp"]
    assert rewritten["label"] == 1  # extra keys survive
    before = path.read_text()
    assert run(["preprocess", "--corpus", str(path)]) == 0
    assert path.read_text() == before  # idempotent


# --- sim / nn ---

def test_sim_of_token_with_itself(model_path, capsys):
    assert run(["sim", "--model", str(model_path),
                "--a", "x86:ret", "--b", "x86:ret"]) == 0
    assert capsys.readouterr().out.strip() == "1.000000"


def test_sim_accepts_raw_instruction_text(model_path, capsys):
    assert run(["sim", "--model", str(model_path),
                "--a", "x86:MOV EAX, 42", "--b", "x86:mov eax,0"]) == 0
    assert capsys.readouterr().out.strip() == "1.000000"


def test_sim_unknown_token_is_data_error(model_path, capsys):
    assert run(["sim", "--model", str(model_path),
                "--a", "x86:nope", "--b", "x86:ret"]) == 2


def test_nn_output_format_and_arch_filter(model_path, capsys):
    assert run(["nn", "--model", str(model_path), "--token", "x86:ret",
                "--k", "3", "--arch", "arm"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    for line in lines:
        token, score = line.split("\t")
        assert token.startswith("arm:")
        float(score)


def test_nn_rejects_bad_k(model_path):
    assert run(["nn", "--model", str(model_path), "--token", "x86:ret",
                "--k", "0"]) == 1


# --- evaluation commands ---

def write_labeled_tsv(path):
    path.write_text(
        "x86\tret\tarm\tbx lr\t1\n"
        "x86\tret\tarm\tcmp r0, #0\t-1\n"
        "x86\tmov eax, 7\tarm\tmov r0, #7\t1\n"
        "x86\tmov eax, 7\tarm\tbeq .L2\t-1\n"
    )


def test_eval_instr_writes_report(model_path, tmp_path, capsys):
    pairs = tmp_path / "pairs.tsv"
    write_labeled_tsv(pairs)
    report_path = tmp_path / "report.json"
    assert run(["eval-instr", "--model", str(model_path),
                "--pairs", str(pairs), "--report", str(report_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1].startswith("AUC\t")
    report = json.loads(report_path.read_text())
    assert report["pairs"] == 4 and report["scored"] == 4
    assert report["auc"] == pytest.approx(float(out[-1].split("\t")[1]), abs=1e-6)


def test_eval_instr_reports_exclusions_on_stderr(model_path, tmp_path, capsys):
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text(
        "x86\tret\tarm\tbx lr\t1\n"
        "x86\tret\tarm\tcmp r0, #0\t-1\n"
        "x86\tfnord\tarm\tbx lr\t1\n"
    )
    assert run(["eval-instr", "--model", str(model_path),
                "--pairs", str(pairs)]) == 0
    err = capsys.readouterr().err
    assert "excluded 1 of 3" in err


def test_eval_blocks_model_and_baseline(model_path, corpus_path, tmp_path, capsys):
    labeled = tmp_path / "blocks.jsonl"
    records = [json.loads(l) for l in corpus_path.read_text().splitlines()[:4]]
    rows = []
    for i, record in enumerate(records):
        record["label"] = 1 if i % 2 == 0 else -1
        if record["label"] == -1:  # mispair: borrow another record's partner
            record["b"] = records[(i + 1) % len(records)]["b"]
        rows.append(json.dumps(record))
    labeled.write_text("\n".join(rows) + "\n")

    assert run(["eval-blocks", "--model", str(model_path),
                "--pairs", str(labeled)]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("AUC\t")

    report_path = tmp_path / "base.json"
    assert run(["eval-blocks", "--baseline", "--pairs", str(labeled),
                "--report", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert 0.0 <= report["auc"] <= 1.0


def test_eval_blocks_requires_model_or_baseline(tmp_path, corpus_path):
    labeled = tmp_path / "blocks.jsonl"
    record = json.loads(corpus_path.read_text().splitlines()[0])
    record["label"] = 1
    labeled.write_text(json.dumps(record) + "\n")
    assert run(["eval-blocks", "--pairs", str(labeled)]) == 1


# --- export ---

def test_export_matches_model(model_path, tmp_path, capsys):
    out = tmp_path / "vectors.txt"
    assert run(["export", "--model", str(model_path), "--out", str(out)]) == 0
    model = model_mod.load(model_path)
    v, d, table = parse_text_export(out)
    assert (v, d) == (len(model.vocab), 8)
    for i, entry in enumerate(model.vocab.entries):
        assert np.array_equal(table[entry.token], model.input[i])


# --- gen-synthetic ---

def test_gen_synthetic_writes_all_artifacts(tmp_path, capsys):
    corpus = tmp_path / "syn.jsonl"
    pairs = tmp_path / "syn_pairs.tsv"
    mapping = tmp_path / "syn_map.json"
    assert run(["gen-synthetic", "--out", str(corpus),
                "--pairs-out", str(pairs), "--mapping-out", str(mapping),
                "--vocab-size", "10", "--blocks", "40", "--seed", "5"]) == 0
    loaded = load_pairs(corpus)
    assert len(loaded) == 40
    mapping_doc = json.loads(mapping.read_text())
    assert len(mapping_doc["a_to_b"]) == 10
    assert mapping_doc["arch_a"] == "alpha"
    label_lines = pairs.read_text().splitlines()
    assert len(label_lines) == 20  # one positive and one negative per opcode
    assert all(len(l.split("\t")) == 5 for l in label_lines)


def test_gen_synthetic_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(["gen-synthetic", "--out", str(a), "--vocab-size", "10",
                "--blocks", "30", "--seed", "9"]) == 0
    assert run(["gen-synthetic", "--out", str(b), "--vocab-size", "10",
                "--blocks", "30", "--seed", "9"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_synthetic_validates_parameters(tmp_path):
    assert run(["gen-synthetic", "--out", str(tmp_path / "x"),
                "--vocab-size", "1"]) == 1
    assert run(["gen-synthetic", "--out", str(tmp_path / "x"),
                "--noise", "1.5"]) == 1
