#!/usr/bin/env python3
"""Generate the bundled x86/ARM mini corpus and its evaluation files.

Block pairs are built from hand-written template fragments, each giving
an x86 and an ARM rendering of the same source-level statement(s), with
registers, constants, offsets, symbols and callee names drawn per
instantiation. A block concatenates one to three mid-block fragments and
usually ends with a control-transfer fragment, so lengths and alignment
behave like compiler output rather than fixed-size snippets.

Outputs (all deterministic given --seed):
  mini_corpus.jsonl          training block pairs (raw text, normalized on load)
  mini_blocks_heldout.jsonl  labeled block pairs for similarity evaluation
  instr_pairs.tsv            labeled instruction pairs (mono and cross arch)
  instr_pairs_exceptions.tsv curated opcode correspondences backing the labels
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from string import Template

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from insnvec.normalize import normalize_text, split_token, token_opcode

X86_SLOTS = [
    ("rax", "eax"), ("rbx", "ebx"), ("rcx", "ecx"), ("rdx", "edx"),
    ("rsi", "esi"), ("rdi", "edi"), ("r8", "r8d"), ("r9", "r9d"),
    ("r10", "r10d"), ("r11", "r11d"), ("r12", "r12d"), ("r13", "r13d"),
    ("r14", "r14d"), ("r15", "r15d"),
]
ARM_SLOTS = ["r0", "r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8", "r9", "r10"]

CONSTS = [1, 2, 3, 4, 8, 10, 16, 24, 32, 40, 48, 64, 80, 100, 128, 256]
OFFSETS = [0, 4, 8, 12, 16, 20, 24, 32, 40, 48, 56, 64]
SYMBOLS = [
    ".L0", ".L1", ".L3", ".L7", ".LBB0_2", ".LBB0_5", ".LBB1_4", ".LBB2_8",
    ".LC0", ".LC1", ".LC4", "g_count", "g_state", "buf", "table", "errno_box",
]
FUNCTIONS = [
    "printf", "puts", "memcpy", "memset", "strlen", "strcmp", "malloc",
    "free", "atoi", "exit", "abort", "open", "close", "read", "write",
]
STRINGS = ["done", "error: %s", "usage: %s file", "ok", "%d\\n", "out of memory"]

# Each template: (x86 lines, arm lines, terminal). ${x0}/${e0} are the
# 64/32-bit names of x86 register slot 0, ${a0} the ARM slot 0.
MID_TEMPLATES = [
    (["pushq rbp", "movq rbp,rsp", "subq rsp,${c}"],
     ["push {r11,lr}", "mov r11,sp", "sub sp,sp,#${c}"]),
    (["movq ${x0},[rip+${sym}]", "addq ${x0},${c}", "movq [rip+${sym}],${x0}"],
     ["ldr ${a1},${sym}", "ldr ${a0},[${a1}]", "add ${a0},${a0},#${c}",
      "str ${a0},[${a1}]"]),
    (["movq ${x0},${x1}", "imulq ${x0},${x2}", "addq ${x0},${c}"],
     ["mov ${a0},${a1}", "mul ${a0},${a0},${a2}", "add ${a0},${a0},#${c}"]),
    (["movq [rbp-${off}],${x0}", "movq ${x1},[rbp-${off2}]"],
     ["str ${a0},[r11,#-${off}]", "ldr ${a1},[r11,#-${off2}]"]),
    (["movq rdi,${x0}", "movq rsi,${x1}", "callq ${fn}", "movq ${x2},rax"],
     ["mov r0,${a0}", "mov r1,${a1}", "bl ${fn}", "mov ${a2},r0"]),
    (["leaq rdi,[rip+${sym}]", "movl esi,${c}", "callq ${fn}"],
     ["ldr r0,${sym}", "mov r1,#${c}", "bl ${fn}"]),
    (["xorl ${e0},${e0}", "movl [${x1}],${e0}"],
     ["mov ${a0},#0", "str ${a0},[${a1}]"]),
    (["movq ${x0},[${x1}+${off}]", "movq [${x2}+${off2}],${x0}"],
     ["ldr ${a0},[${a1},#${off}]", "str ${a0},[${a2},#${off2}]"]),
    (["addq ${x0},-${c}", "movq [${x1}],${x0}"],
     ["sub ${a0},${a0},#${c}", "str ${a0},[${a1}]"]),
    (["shlq ${x0},${c}", "orq ${x0},${x1}"],
     ["lsl ${a0},${a0},#${c}", "orr ${a0},${a0},${a1}"]),
    (["andl ${e0},${c}", "movl [${x1}],${e0}"],
     ["and ${a0},${a0},#${c}", "str ${a0},[${a1}]"]),
    (["cmpl ${e0},${e1}", "cmovll ${e2},${e3}"],
     ["cmp ${a0},${a1}", "movlt ${a2},${a3}"]),
    (["movq rdi,${x0}", "movq rsi,${x1}", "movl edx,${c}", "callq ${fn}"],
     ["mov r0,${a0}", "mov r1,${a1}", "mov r2,#${c}", "bl ${fn}"]),
    (["incq [${x0}+${off}]"],
     ["ldr ${a1},[${a0},#${off}]", "add ${a1},${a1},#1",
      "str ${a1},[${a0},#${off}]"]),
    (["xorq ${x0},${x1}", "xorq ${x1},${x0}"],
     ["eor ${a0},${a0},${a1}", "eor ${a1},${a1},${a0}"]),
    (["pushq ${x0}", "callq ${fn}", "addq rsp,${c}"],
     ["push {${a0}}", "bl ${fn}", "add sp,sp,#${c}"]),
    (["movzbl ${e0},[${x1}]", "andl ${e0},${c}"],
     ["ldrb ${a0},[${a1}]", "and ${a0},${a0},#${c}"]),
    (['movq rdi,"${str}"', "callq ${fn}"],
     ['mov r0,"${str}"', "bl ${fn}"]),
    (["movq [${x0}],${x1}", "movq [${x0}+${off}],${x2}"],
     ["str ${a1},[${a0}]", "str ${a2},[${a0},#${off}]"]),
    (["leaq ${x0},[${x1}+${off}]", "addq ${x0},${x2}"],
     ["add ${a0},${a1},#${off}", "add ${a0},${a0},${a2}"]),
]
END_TEMPLATES = [
    (["cmpl ${e0},${e1}", "jle ${sym}"], ["cmp ${a0},${a1}", "ble ${sym}"]),
    (["testq ${x0},${x0}", "je ${sym}"], ["cmp ${a0},#0", "beq ${sym}"]),
    (["addl ${e0},1", "cmpl ${e0},${e1}", "jl ${sym}"],
     ["add ${a0},${a0},#1", "cmp ${a0},${a1}", "blt ${sym}"]),
    (["addq rsp,${c}", "popq rbp", "ret"],
     ["add sp,sp,#${c}", "pop {r11,pc}"]),
    (["movl eax,${c}", "ret"], ["mov r0,#${c}", "bx lr"]),
    (["jmp ${sym}"], ["b ${sym}"]),
    (["cmpq ${x0},${c}", "ja ${sym}"], ["cmp ${a0},#${c}", "bhi ${sym}"]),
    (["movzbl ${e0},[${x1}]", "testl ${e0},${e0}", "jne ${sym}"],
     ["ldrb ${a0},[${a1}]", "cmp ${a0},#0", "bne ${sym}"]),
    (["negl ${e0}", "cmpl ${e0},${e1}", "jge ${sym}"],
     ["rsb ${a0},${a0},#0", "cmp ${a0},${a1}", "bge ${sym}"]),
    (["callq ${fn}", "testl eax,eax", "js ${sym}"],
     ["bl ${fn}", "cmp r0,#0", "bmi ${sym}"]),
]

# Cross-architecture opcode correspondences used to label the cross rows
# of instr_pairs.tsv, plus the mono exceptions the same-opcode rule would
# mislabel. Kept in a sidecar so the label policy is explicit.
CROSS_SIMILAR = [
    ("movq", "mov"), ("movl", "mov"), ("movq", "ldr"), ("movl", "ldr"),
    ("movq", "str"), ("movl", "str"), ("movzbl", "ldrb"),
    ("addq", "add"), ("addl", "add"), ("leaq", "add"), ("subq", "sub"),
    ("imulq", "mul"), ("andl", "and"), ("orq", "orr"), ("shlq", "lsl"),
    ("xorq", "eor"), ("xorl", "eor"), ("cmpl", "cmp"), ("cmpq", "cmp"),
    ("testq", "cmp"), ("testl", "cmp"), ("callq", "bl"),
    ("je", "beq"), ("jne", "bne"), ("jl", "blt"), ("jle", "ble"),
    ("jge", "bge"), ("ja", "bhi"), ("js", "bmi"), ("jmp", "b"),
    ("ret", "bx"), ("pushq", "push"), ("popq", "pop"),
]
MONO_EXCEPTIONS = [
    ("x86", "cmpl", "testl"), ("x86", "cmpq", "testq"),
    ("x86", "jz", "je"), ("x86", "jnz", "jne"),
    ("arm", "cmp", "tst"),
]


def instantiate(template, rng):
    """Render one (x86 lines, arm lines) fragment with fresh slot values."""
    x86_lines, arm_lines = template
    xs = rng.choice(len(X86_SLOTS), size=4, replace=False)
    ars = rng.choice(len(ARM_SLOTS), size=4, replace=False)
    c, c2 = rng.choice(CONSTS, size=2, replace=False)
    off, off2 = rng.choice(OFFSETS[1:], size=2, replace=False)
    values = {"c": c, "c2": c2, "off": off, "off2": off2,
              "sym": SYMBOLS[rng.integers(len(SYMBOLS))],
              "fn": FUNCTIONS[rng.integers(len(FUNCTIONS))],
              "str": STRINGS[rng.integers(len(STRINGS))]}
    for k in range(4):
        values[f"x{k}"], values[f"e{k}"] = X86_SLOTS[xs[k]]
        values[f"a{k}"] = ARM_SLOTS[ars[k]]
    return ([Template(t).substitute(values) for t in x86_lines],
            [Template(t).substitute(values) for t in arm_lines])


def make_block_pair(rng):
    """One block pair: 1-3 mid fragments, usually a control-transfer tail."""
    x86_ins, arm_ins = [], []
    n_mid = int(rng.choice([1, 2, 3], p=[0.25, 0.5, 0.25]))
    for _ in range(n_mid):
        t = MID_TEMPLATES[rng.integers(len(MID_TEMPLATES))]
        xl, al = instantiate(t, rng)
        x86_ins += xl
        arm_ins += al
    if rng.random() < 0.75:
        t = END_TEMPLATES[rng.integers(len(END_TEMPLATES))]
        xl, al = instantiate(t, rng)
        x86_ins += xl
        arm_ins += al
    return x86_ins, arm_ins


def record(pair_id, x86_ins, arm_ins, label=None):
    rec = {"id": pair_id,
           "a": {"arch": "x86", "ins": x86_ins},
           "b": {"arch": "arm", "ins": arm_ins},
           "normalized": False}
    if label is not None:
        rec["label"] = label
    return json.dumps(rec)


def write_heldout(path, rng, count):
    """Labeled block pairs: half true pairs, half length-matched mispairs."""
    pos = [make_block_pair(rng) for _ in range(count // 2)]
    neg_pool = [make_block_pair(rng) for _ in range(count)]
    lines = []
    for i, (x86_ins, arm_ins) in enumerate(pos):
        lines.append(record(f"held{i:04d}", x86_ins, arm_ins, label=1))
    # Mispair x86 of one instantiation with the ARM side of another,
    # preferring equal x86-side lengths so instruction count alone does
    # not separate the classes.
    by_len = {}
    for x86_ins, arm_ins in neg_pool:
        by_len.setdefault(len(x86_ins), []).append((x86_ins, arm_ins))
    made = 0
    for x86_ins, _ in neg_pool:
        candidates = [p for p in by_len.get(len(x86_ins), []) if p[0] != x86_ins]
        if not candidates or made >= count // 2:
            continue
        partner = candidates[rng.integers(len(candidates))]
        lines.append(record(f"held{count // 2 + made:04d}", x86_ins,
                            partner[1], label=-1))
        made += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(lines)


def collect_tokens(pairs_raw):
    """Normalized token inventory of the training corpus, per architecture."""
    tokens = {"x86": set(), "arm": set()}
    for x86_ins, arm_ins in pairs_raw:
        for raw in x86_ins:
            tokens["x86"].add(normalize_text(raw, "x86"))
        for raw in arm_ins:
            tokens["arm"].add(normalize_text(raw, "arm"))
    return {a: sorted(s) for a, s in tokens.items()}


def write_instr_pairs(path, sidecar, tokens, rng, per_bucket=25):
    """Labeled instruction pairs: mono rows follow the same-opcode rule,
    cross rows follow the curated correspondence table in the sidecar."""
    by_op = {"x86": {}, "arm": {}}
    for arch in by_op:
        for tok in tokens[arch]:
            by_op[arch].setdefault(token_opcode(tok), []).append(tok)
    cross_ok = set(CROSS_SIMILAR)
    rows = []

    def body(tok):
        return split_token(tok)[1]

    def mono_rows(arch):
        ops = by_op[arch]
        rich = [o for o, toks in ops.items() if len(toks) >= 2]
        made_pos = 0
        while made_pos < per_bucket:
            op = rich[rng.integers(len(rich))]
            a, b = rng.choice(len(ops[op]), size=2, replace=False)
            rows.append((arch, body(ops[op][a]), arch, body(ops[op][b]), 1))
            made_pos += 1
        names = sorted(ops)
        made_neg = 0
        while made_neg < per_bucket:
            i, j = rng.choice(len(names), size=2, replace=False)
            if any((arch, names[i], names[j]) == (a, x, y) or
                   (arch, names[j], names[i]) == (a, x, y)
                   for a, x, y in MONO_EXCEPTIONS):
                continue
            ta = ops[names[i]][rng.integers(len(ops[names[i]]))]
            tb = ops[names[j]][rng.integers(len(ops[names[j]]))]
            rows.append((arch, body(ta), arch, body(tb), -1))
            made_neg += 1

    mono_rows("x86")
    mono_rows("arm")
    pairs_in_corpus = [(xo, ao) for xo, ao in CROSS_SIMILAR
                       if xo in by_op["x86"] and ao in by_op["arm"]]
    made = 0
    while made < per_bucket:
        xo, ao = pairs_in_corpus[rng.integers(len(pairs_in_corpus))]
        ta = by_op["x86"][xo][rng.integers(len(by_op["x86"][xo]))]
        tb = by_op["arm"][ao][rng.integers(len(by_op["arm"][ao]))]
        rows.append(("x86", body(ta), "arm", body(tb), 1))
        made += 1
    x86_ops, arm_ops = sorted(by_op["x86"]), sorted(by_op["arm"])
    made = 0
    while made < per_bucket:
        xo = x86_ops[rng.integers(len(x86_ops))]
        ao = arm_ops[rng.integers(len(arm_ops))]
        if (xo, ao) in cross_ok:
            continue
        ta = by_op["x86"][xo][rng.integers(len(by_op["x86"][xo]))]
        tb = by_op["arm"][ao][rng.integers(len(by_op["arm"][ao]))]
        rows.append(("x86", body(ta), "arm", body(tb), -1))
        made += 1

    with path.open("w", encoding="utf-8") as fh:
        fh.write("# arch_a\tinstruction_a\tarch_b\tinstruction_b\tlabel\n")
        for r in rows:
            fh.write("\t".join(str(v) for v in r) + "\n")
    with sidecar.open("w", encoding="utf-8") as fh:
        fh.write(
            "# Label policy for instr_pairs.tsv.\n"
            "# Mono-architecture rows: similar iff same opcode, except the\n"
            "# opcode pairs below, which are semantically close despite\n"
            "# different names and are never used as negatives.\n"
        )
        for arch, a, b in MONO_EXCEPTIONS:
            fh.write(f"mono\t{arch}\t{a}\t{b}\n")
        fh.write(
            "# Cross-architecture rows: similar iff the opcode pair appears\n"
            "# below; pairs not listed are treated as dissimilar.\n"
        )
        for a, b in CROSS_SIMILAR:
            fh.write(f"cross\tx86\t{a}\tarm\t{b}\n")
    return len(rows)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path,
                    default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--pairs", type=int, default=2200)
    ap.add_argument("--heldout", type=int, default=400)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    pairs_raw = [make_block_pair(rng) for _ in range(args.pairs)]
    corpus_path = args.out_dir / "mini_corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for i, (x86_ins, arm_ins) in enumerate(pairs_raw):
            fh.write(record(f"mini{i:05d}", x86_ins, arm_ins) + "\n")
    n_held = write_heldout(args.out_dir / "mini_blocks_heldout.jsonl", rng,
                           args.heldout)
    tokens = collect_tokens(pairs_raw)
    n_instr = write_instr_pairs(args.out_dir / "instr_pairs.tsv",
                                args.out_dir / "instr_pairs_exceptions.tsv",
                                tokens, rng)
    n_x86 = sum(len(x) for x, _ in pairs_raw)
    n_arm = sum(len(a) for _, a in pairs_raw)
    print(f"wrote {args.pairs} training pairs "
          f"({n_x86} x86 / {n_arm} arm instructions, "
          f"{len(tokens['x86'])} x86 / {len(tokens['arm'])} arm token types)")
    print(f"wrote {n_held} held-out labeled block pairs")
    print(f"wrote {n_instr} labeled instruction pairs")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
