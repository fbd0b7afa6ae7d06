"""Command-line surface: build and verify covers, inspect chain components,
and run the brute-force oracle.

Configs are flat key-value text with section headers ([system], [task],
[output]); group subsets are written as ``ball:R`` or explicit vector
lists.  Certificates and covers are JSON with sorted keys, so identical
configs produce byte-identical files.  Exit codes: 0 pass, 1 verification
failure, 2 malformed input or I/O error, 3 oracle size guard.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

from coverdim.boxes import SizeGuardError
from coverdim.certificates import Certificate, VerificationError
from coverdim.chains import UNBOUNDED, f_components, is_s_bounded
from coverdim.covers import (
    Cover,
    combine_union,
    cover_from_json,
    cover_to_json,
    reduce_cover,
    scale_schedule,
    space_of,
    verify_dad_cover,
)
from coverdim.asdim import (
    GroupCover,
    gamma_action_cover,
    grid_cover,
    verify_group_cover,
    verify_translation_cover,
)
from coverdim.group import ball, parse_subset
from coverdim.oracle import (
    FiniteQuotientModel,
    exhaustive_min_colors,
    oracle_label_sets,
)
from coverdim.systems import (
    OdometerClopen,
    OdometerSystem,
    SturmianSystem,
    base_system,
    clopen_from_text,
    system_from_config,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_BAD_INPUT = 2
EXIT_GUARD = 3


def _load_config(path):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    return {section: dict(parser.items(section))
            for section in parser.sections()}


def _dump_json(path, data):
    text = json.dumps(data, sort_keys=True, indent=1, default=str)
    Path(path).write_text(text + "\n")


def _emit(cert, out_cfg, as_json):
    if out_cfg.get("certificate"):
        _dump_json(out_cfg["certificate"], cert.to_json())
    if as_json:
        print(cert.dumps())
    else:
        print(f"verdict: {cert.verdict} ({cert.kind})")
        if cert.counterexample is not None:
            print("counterexample:",
                  json.dumps(cert.counterexample, sort_keys=True, default=str))
    return EXIT_PASS if cert.ok else EXIT_FAIL


def _subset(task, key, dim, default=None):
    if key not in task:
        if default is None:
            raise KeyError(f"missing task key {key!r}")
        return default
    return parse_subset(task[key], dim)


def cmd_verify(cfg, as_json):
    task = cfg.get("task", {})
    out = cfg.get("output", {})
    cover_path = task.get("cover")
    if not cover_path:
        raise KeyError("verify needs task.cover = <path to a cover file>")
    data = json.loads(Path(cover_path).read_text())
    cover = cover_from_json(data)
    if "s" in task:
        cover.s = parse_subset(task["s"], cover.f.dim)
    cert = verify_dad_cover(cover)
    return _emit(cert, out, as_json)


def _build_group_cover(task, out, as_json):
    d = int(task.get("d", 1))
    r = int(task.get("r", 1))
    gc = grid_cover(d, r)
    cert = verify_group_cover(gc, r, gc.bound)
    if cert.ok and out.get("cover"):
        _dump_json(out["cover"], gc.to_json())
    return _emit(cert, out, as_json)


def _build_gamma_cover(task, out, as_json):
    d = int(task.get("d", 1))
    f = _subset(task, "f", d)
    gam = gamma_action_cover(d, f)
    cert = verify_translation_cover(gam, gam.f, gam.s)
    if cert.ok and out.get("cover"):
        _dump_json(out["cover"], {
            "schema_version": 1,
            "kind": "translation-cover",
            "group_cover": gam.group_cover.to_json(),
            "F": f.describe(), "S": gam.s.describe()})
    return _emit(cert, out, as_json)


def _artificial_arc_cover(system, depth, colors, f_top, claimed_s=None):
    """A verified odometer cover by residue arcs, used as pipeline input."""
    from coverdim.boxes import Box

    sysb = base_system(system)
    if sysb.dim != 1:
        raise ValueError("arc covers are a one-dimensional construction")
    m = sysb.p ** depth
    radius = f_top.radius()
    arc = -(-m // colors)
    if arc > m - radius - 1:
        raise VerificationError(
            f"no verified {colors}-color cover at step radius {radius} exists "
            f"at depth {depth}: each color needs a wrap gap > {radius}, so "
            f"arcs of {arc} cells cannot be that isolated on {m} cells")
    sets = []
    for j in range(colors):
        lo = j * arc
        hi = min(m, lo + arc)
        sets.append(OdometerClopen(sysb, depth, (Box((lo,), (hi,)),)))
    s = claimed_s or ball(1, 2 * (arc - 1))
    cov = Cover(system, tuple(sets), f_top, s)
    cov.certificate = verify_dad_cover(cov).require("artificial arc cover")
    return cov


def _build_dad_cover(cfg, task, out, as_json):
    system = system_from_config(cfg.get("system", {}))
    sysb = base_system(system)
    depth = int(task.get("depth", 8))
    colors = int(task.get("colors", 3))
    f0 = _subset(task, "f0", sysb.dim, ball(sysb.dim, 1))
    sched = scale_schedule(colors - 1, f0)
    cov = _artificial_arc_cover(system, depth, colors, sched.fs[-1])
    reduced = reduce_cover(system, cov, f0)
    if reduced.certificate.ok and out.get("cover"):
        _dump_json(out["cover"], cover_to_json(reduced))
    return _emit(reduced.certificate, out, as_json)


def _build_combine(cfg, task, out, as_json):
    system = system_from_config(cfg.get("system", {}))
    sysb = base_system(system)
    depth = int(task.get("depth", 6))
    r_a = int(task.get("ra", 5))
    big_r_a = int(task.get("rra", task.get("ra_bound", 5)))
    r_b = int(task.get("rb", 1))
    big_r_b = int(task.get("rrb", task.get("rb_bound", 1)))
    f = _subset(task, "f", sysb.dim, ball(sysb.dim, 1))
    if 2 * big_r_b + 2 * r_b >= r_a:
        print("refused: the union bound requires 2*R_B + 2*r_B < r_A "
              f"(got 2*{big_r_b} + 2*{r_b} >= {r_a})", file=sys.stderr)
        return EXIT_BAD_INPUT
    a = clopen_from_text(system, task["a"])
    b = clopen_from_text(system, task["b"])
    from coverdim.covers import restrict_cover
    from coverdim.systems import restrict
    from coverdim.group import power

    def arc_cover(part, r, big_r):
        sub = restrict(sysb, part)
        blocks = _blocked_colors(part, r)
        cov = Cover(sub, blocks, power(f, r), power(f, big_r))
        cov.certificate = verify_dad_cover(cov).require("combiner input")
        return cov

    cov_a = arc_cover(a, r_a, big_r_a)
    cov_b = arc_cover(b, r_b, big_r_b)
    combined = combine_union(cov_a, cov_b, f, r_a, big_r_a, r_b, big_r_b)
    if combined.certificate.ok and out.get("cover"):
        _dump_json(out["cover"], cover_to_json(combined))
    return _emit(combined.certificate, out, as_json)


def _blocked_colors(part, r):
    """Two-color the cells of a 1-d clopen set by position blocks of 2(r+1);
    components of each color then sit inside single blocks."""
    from coverdim.boxes import Box
    width = 2 * (r + 1)
    cells0, cells1 = [], []
    for cell in part.iter_cells():
        (cells0 if (cell[0] // width) % 2 == 0 else cells1).append(cell)
    mk = lambda cells: OdometerClopen.from_residues(part.system, part.depth, cells)
    return (mk(cells0), mk(cells1))


def cmd_build(cfg, as_json):
    task = cfg.get("task", {})
    out = cfg.get("output", {})
    sub = task.get("command", "dad-cover")
    if sub == "group-cover":
        return _build_group_cover(task, out, as_json)
    if sub == "gamma-cover":
        return _build_gamma_cover(task, out, as_json)
    if sub == "dad-cover":
        return _build_dad_cover(cfg, task, out, as_json)
    if sub == "combine":
        return _build_combine(cfg, task, out, as_json)
    raise KeyError(f"unknown build command {sub!r}")


def cmd_components(cfg, as_json):
    task = cfg.get("task", {})
    system = system_from_config(cfg.get("system", {}))
    sysb = base_system(system)
    b = clopen_from_text(system, task["set"])
    f = _subset(task, "f", sysb.dim, ball(sysb.dim, 1))
    s = _subset(task, "s", sysb.dim, None) if "s" in task else None
    auto = f_components(system, b, f)
    report = {"set": b.describe(), "F": f.describe(), "kind": auto.kind}
    if auto.is_empty():
        report["cells"] = {}
    elif auto.kind == "odometer":
        cells = {}
        for cell in b.iter_cells(cap=4096):
            lab = auto.labels(cell)
            cells[str(list(cell))] = ("unbounded (wrap)" if lab == UNBOUNDED
                                      else sorted(list(l) for l in lab))
        report["cells"] = cells
    elif auto.kind == "sturmian":
        cells = {}
        for cell, labels in sorted(auto.cell_labels.items()):
            cells[str(cell)] = ("unbounded (wrap)" if labels == UNBOUNDED
                                else sorted(labels))
        report["cells"] = cells if not auto.all_unbounded else "unbounded (wrap)"
    else:
        report["cells"] = "singletons"
    if s is not None:
        report["bounded"] = is_s_bounded(auto, s).to_json()
    print(json.dumps(report, sort_keys=True, indent=1) if as_json
          else _render_components(report))
    return EXIT_PASS


def _render_components(report):
    lines = [f"components of {report['set']} at F={report['F']}"]
    cells = report["cells"]
    if isinstance(cells, str):
        lines.append(f"  {cells}")
    else:
        for cell, labels in sorted(cells.items()):
            lines.append(f"  {cell}: {labels}")
    if "bounded" in report:
        lines.append(f"bounded: {report['bounded']['verdict']}")
    return "\n".join(lines)


def cmd_oracle(cfg, as_json):
    task = cfg.get("task", {})
    system = system_from_config(cfg.get("system", {}))
    sysb = base_system(system)
    mode = task.get("mode", "min-colors")
    f = _subset(task, "f", sysb.dim, ball(sysb.dim, 1))
    if mode == "min-colors":
        depth = int(task.get("depth", 3))
        s = _subset(task, "s", sysb.dim, ball(sysb.dim, 3))
        model = FiniteQuotientModel.odometer(sysb, depth, f)
        got = exhaustive_min_colors(model, f, s)
        print(json.dumps({"min_colors": got}, sort_keys=True) if as_json
              else f"minimal colors: {got}")
        return EXIT_PASS
    if mode == "agreement":
        max_depth = int(task.get("depth", 3))
        bad = _agreement_sweep(sysb, f, max_depth)
        if as_json:
            print(json.dumps({"disagreements": bad}, sort_keys=True))
        else:
            print("all agree" if not bad else f"disagreements: {bad}")
        return EXIT_PASS if not bad else EXIT_FAIL
    raise KeyError(f"unknown oracle mode {mode!r}")


def _agreement_sweep(system, f, max_depth):
    import itertools as it

    bad = []
    for depth in range(1, max_depth + 1):
        m = system.p ** depth
        if m ** system.dim > 256:
            break
        model = FiniteQuotientModel.odometer(system, depth, f)
        cells = list(itertools_product_cells(system, m))
        for mask in range(1, 1 << len(cells)):
            residues = [cells[i] for i in range(len(cells)) if mask >> i & 1]
            b = OdometerClopen.from_residues(system, depth, residues)
            auto = f_components(system, b, f)
            want = oracle_label_sets(model, [tuple(r) for r in residues], f)
            for r in residues:
                mine = auto.labels(r)
                theirs = want[tuple(r)]
                mine_cmp = "unbounded" if mine == UNBOUNDED else mine
                if mine_cmp != theirs:
                    bad.append({"depth": depth, "cell": list(r)})
    return bad


def itertools_product_cells(system, m):
    import itertools as it
    return it.product(range(m), repeat=system.dim)


def rebuild_and_verify(cert, context):
    """Re-run the verification a certificate describes, given its inputs."""
    if "cover" in context:
        cover = context["cover"] if isinstance(context["cover"], Cover) \
            else cover_from_json(context["cover"])
        return verify_dad_cover(cover)
    if cert.kind == "group-cover" and "group_cover" in context:
        gc = context["group_cover"]
        gc = gc if isinstance(gc, GroupCover) else GroupCover.from_json(gc)
        return verify_group_cover(gc, cert.parameters["r"], cert.parameters["R"])
    return None


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="coverdim",
        description="construct and verify dimension-certifying covers")
    parser.add_argument("command",
                        choices=["verify", "build", "components", "oracle"])
    parser.add_argument("config", help="path to a key-value config file")
    parser.add_argument("--json", action="store_true", dest="as_json",
                        help="machine-readable output")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
    except (OSError, configparser.Error, FileNotFoundError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        if args.command == "verify":
            return cmd_verify(cfg, args.as_json)
        if args.command == "build":
            return cmd_build(cfg, args.as_json)
        if args.command == "components":
            return cmd_components(cfg, args.as_json)
        return cmd_oracle(cfg, args.as_json)
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (KeyError, ValueError, FileNotFoundError, OSError,
            json.JSONDecodeError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
