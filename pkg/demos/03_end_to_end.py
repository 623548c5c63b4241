"""
End to end on the mini-world
============================

Runs every pipeline stage from a config file, the same way the command line
does.  The report shows the model next to the most-frequent-sense baseline.
Takes about twenty seconds.
"""

import json
import tempfile
from pathlib import Path

from disdict_wsd.harness import load_eval_dataset, read_gold, run_pipeline
from disdict_wsd.synthetic import build_mini_world

root = Path(tempfile.mkdtemp(prefix="mini-"))
world = build_mini_world(root, seed=0)
config = world.write_config(root / "config.json")
print("config:", config)

# Same as: python3 -m disdict_wsd --config <config.json>
run_pipeline(config)
out = root / "out"
print("outputs:", sorted(p.name for p in out.iterdir()))

print()
print((out / "report.txt").read_text())

stats = json.loads((out / "stats.json").read_text())
print("final training loss:", round(stats["train"]["final_loss"], 4))

# A few test sentences where the model overrules the rank-1 sense.
test = {inst.id: inst for inst in load_eval_dataset(world.test_xml, world.test_gold)}
gold = read_gold(world.test_gold)
shown = 0
for line in (out / "predictions_test.txt").read_text().splitlines():
    iid, key = line.split()
    if key.endswith(":01::") and shown < 3:
        inst = test[iid]
        words = list(inst.surfaces)
        words[inst.target_index] = f"[{words[inst.target_index]}]"
        mark = "ok" if key in gold[iid] else "wrong"
        print(f"{' '.join(words)}\n    -> {key} ({mark})")
        shown += 1
