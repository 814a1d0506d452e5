"""Replay a recorded teaching session through the library and verify the
weight digest sequence and chosen actions match what the service reported.

stdin: JSON {config, feedback: [payload...], digests: [hex...],
chosen: [int...], export_csv: str}
exit 0 on an exact match, 1 with a diagnostic otherwise.
"""

import json
import sys

from corrlearn import learner, world
from corrlearn.feedback import NoFeedback, feedback_from_json, feedback_to_pseudo_loss
from corrlearn.harness import config_from_dict

record = json.load(sys.stdin)
cfg = config_from_dict(record["config"])
the_map = world.load_map(cfg.map)
state = world.initial_state(the_map)
w = learner.zero_weights()

digests = []
chosen_seq = []
for payload in record["feedback"]:
    trajs = world.generate_action_set(
        state.pose, k=cfg.k, kappa_max=cfg.kappa_max, n_samples=cfg.n_samples
    )
    selectable = world.mask_colliding(the_map, trajs)
    phi = world.feature_matrix(the_map, state, trajs, clip=cfg.clip)
    chosen = learner.select_action(w, phi, selectable)
    fb = feedback_from_json(payload)
    if not isinstance(fb, NoFeedback):
        pseudo = feedback_to_pseudo_loss(fb, phi, chosen, epsilon=cfg.epsilon)
        ev = learner.hinge_eval(w, phi, pseudo)
        w = learner.ogd_update(w, ev.subgradient, cfg.eta)
    state = world.step(
        state, trajs[chosen], k=cfg.k, kappa_max=cfg.kappa_max, n_samples=cfg.n_samples
    )
    digests.append(learner.weights_digest(w))
    chosen_seq.append(chosen)

ok = True
if digests != record["digests"]:
    ok = False
    for i, (a, b) in enumerate(zip(digests, record["digests"])):
        if a != b:
            print(f"digest mismatch at step {i}: replay {a[:12]} vs session {b[:12]}")
            break
export_rows = record["export_csv"].splitlines()[1:]
export_chosen = [int(r.split(",")[1]) for r in export_rows]
if export_chosen != chosen_seq:
    ok = False
    print(f"chosen-action mismatch: replay {chosen_seq} vs export {export_chosen}")
if len(export_rows) != len(record["feedback"]):
    ok = False
    print(f"export has {len(export_rows)} rows for {len(record['feedback'])} steps")

print("replay ok" if ok else "replay FAILED")
sys.exit(0 if ok else 1)
