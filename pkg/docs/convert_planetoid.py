"""Convert citation-network datasets to the edge/feature/label TSV layout.

Two source formats are recognized automatically:

* raw McCallum-style files: ``<name>.content`` rows of
  ``paper_id <tab> attr... <tab> class_label`` plus ``<name>.cites`` rows of
  ``cited <tab> citing``;
* Planetoid pickles: ``ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}``.

Output is ``edges.tsv`` / ``features.tsv`` / ``labels.tsv`` with dense node
ids (plus ``id_map.tsv`` and ``classes.tsv`` documenting the remapping),
ready for ``dmage train`` or the benchmark tests:

    python3 docs/convert_planetoid.py path/to/cora-files data/cora
"""

import argparse
import os
import pickle
import sys

import numpy as np


def _write_tsv(path, lines):
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _emit(out_dir, edges, features, labels, id_map=None, class_names=None):
    os.makedirs(out_dir, exist_ok=True)
    _write_tsv(os.path.join(out_dir, "edges.tsv"),
               [f"{i}\t{j}" for i, j in sorted(edges)])
    _write_tsv(
        os.path.join(out_dir, "features.tsv"),
        ["\t".join(format(v, ".17g") for v in row) for row in features],
    )
    _write_tsv(os.path.join(out_dir, "labels.tsv"), [str(v) for v in labels])
    if id_map:
        _write_tsv(os.path.join(out_dir, "id_map.tsv"),
                   [f"{orig}\t{new}" for orig, new in id_map])
    if class_names:
        _write_tsv(os.path.join(out_dir, "classes.tsv"),
                   [f"{name}\t{idx}" for name, idx in class_names])
    print(
        f"{out_dir}: {len(features)} nodes, {len(edges)} edges, "
        f"{features.shape[1]} feature dims, {len(set(labels))} classes"
    )


def convert_raw(src, name, out_dir):
    """``<name>.content`` + ``<name>.cites`` with free-form paper ids."""
    content = os.path.join(src, f"{name}.content")
    cites = os.path.join(src, f"{name}.cites")
    ids, rows, label_names = [], [], []
    with open(content) as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3:
                continue
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:-1]])
            label_names.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    classes = {name: idx for idx, name in enumerate(sorted(set(label_names)))}

    edges, skipped = set(), 0
    with open(cites) as f:
        for line in f:
            parts = line.split()
            if len(parts) != 2:
                continue
            a, b = parts
            if a not in index or b not in index:
                skipped += 1  # citations into papers without content rows
                continue
            i, j = index[a], index[b]
            if i != j:
                edges.add((min(i, j), max(i, j)))
    if skipped:
        print(f"note: {skipped} citation lines referenced unknown papers", file=sys.stderr)

    _emit(
        out_dir,
        edges,
        np.asarray(rows, dtype=np.float64),
        [classes[l] for l in label_names],
        id_map=list(index.items()),
        class_names=sorted(classes.items(), key=lambda kv: kv[1]),
    )


def _load_pickle(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def convert_planetoid(src, name, out_dir):
    """ind.<name>.* pickles; test rows are stored separately and reordered."""
    parts = {k: _load_pickle(os.path.join(src, f"ind.{name}.{k}"))
             for k in ("x", "tx", "allx", "y", "ty", "ally", "graph")}
    with open(os.path.join(src, f"ind.{name}.test.index")) as f:
        test_idx = np.array([int(line) for line in f if line.strip()])

    def dense(m):
        return np.asarray(m.todense() if hasattr(m, "todense") else m, dtype=np.float64)

    features = np.vstack([dense(parts["allx"]), dense(parts["tx"])])
    onehot = np.vstack([dense(parts["ally"]), dense(parts["ty"])])
    # the tx/ty blocks are stored in file order but belong at test.index
    order = np.sort(test_idx)
    features[test_idx] = features[order]
    onehot[test_idx] = onehot[order]
    labels = onehot.argmax(axis=1)

    n = features.shape[0]
    edges = set()
    for i, neighbors in parts["graph"].items():
        for j in neighbors:
            if i != j and i < n and j < n:
                edges.add((min(i, j), max(i, j)))

    _emit(out_dir, edges, features, labels.tolist())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", help="directory holding the dataset files")
    ap.add_argument("out", help="output directory for the TSV files")
    ap.add_argument("--dataset", default="cora",
                    help="dataset name used in the source filenames")
    args = ap.parse_args(argv)

    if os.path.exists(os.path.join(args.src, f"{args.dataset}.content")):
        convert_raw(args.src, args.dataset, args.out)
    elif os.path.exists(os.path.join(args.src, f"ind.{args.dataset}.x")):
        convert_planetoid(args.src, args.dataset, args.out)
    else:
        ap.error(
            f"{args.src} contains neither {args.dataset}.content nor "
            f"ind.{args.dataset}.x"
        )


if __name__ == "__main__":
    main()
