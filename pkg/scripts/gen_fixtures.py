#!/usr/bin/env python3
"""Generate the synthetic fixture corpus: fixtures/cases.jsonl and fixtures/script.jsonl.

The cases are invented clinical notes spanning all seven red flags, several
multi-label cases, and 'none of the above' cases. The script file drives the
deterministic backend for offline evaluation runs: orchestrator turns rotate
through noisy output styles to exercise JSON recovery, and a few entries carry
faults to exercise error isolation and fan-out recovery.

Committed outputs are the deliverable; rerun only to regenerate them.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"

FLAGS = [
    "thunderclap",
    "meningismus",
    "papilledema",
    "temporal_arteritis",
    "systemic_illness",
    "focal_deficits",
    "first_worst_headache",
]

# id, note text, truth labels
CASES = [
    ("case01",
     "A 44-year-old man reports a sudden onset of severe headache during exertion that "
     "reached maximal severity within one hour. No fever, no neck stiffness.",
     ["thunderclap"]),
    ("case02",
     "A 29-year-old woman with headache, fever, vomiting, and a stiff neck. Lumbar "
     "puncture shows 46 white cells (69% neutrophils)/μl, low glucose, high lactate.",
     ["meningismus"]),
    ("case03",
     "A 24-year-old woman with daily headaches and transient visual obscurations. "
     "Fundoscopy shows bilateral optic disc swelling with blurred disc margins.",
     ["papilledema"]),
    ("case04",
     "A 71-year-old woman with a new right temporal headache, jaw claudication, and "
     "scalp tenderness. The temporal artery is thickened and tender. ESR is 92 mm/h.",
     ["temporal_arteritis"]),
    ("case05",
     "A 58-year-old man on chemotherapy for lymphoma presents with two weeks of "
     "headache, fever, night sweats, and unintentional weight loss.",
     ["systemic_illness"]),
    ("case06",
     "A 63-year-old man with headache and new left arm weakness and dysarthria noted "
     "on examination. Reflexes are asymmetric.",
     ["focal_deficits"]),
    ("case07",
     "A 49-year-old woman describes this as the worst headache of my life; she has "
     "never had a headache like this before.",
     ["first_worst_headache"]),
    ("case08",
     "A 31-year-old woman with a long history of bilateral band-like headaches, "
     "unchanged for years, normal examination, no systemic symptoms.",
     []),
    ("case09",
     "A 38-year-old man with sudden onset of headache peaking within minutes, then "
     "fever and nuchal rigidity over the next day.",
     ["thunderclap", "meningismus"]),
    ("case10",
     "A 76-year-old woman with new headache, jaw claudication, low-grade fever, "
     "malaise, and 6 kg weight loss over two months. CRP markedly elevated.",
     ["temporal_arteritis", "systemic_illness"]),
    ("case11",
     "A 19-year-old woman with headache, diplopia from a sixth nerve palsy, and "
     "papilledema on fundoscopy.",
     ["papilledema", "focal_deficits"]),
    ("case12",
     "A 52-year-old man with abrupt severe headache during weightlifting, maximal "
     "within seconds, which he calls the worst headache ever.",
     ["thunderclap", "first_worst_headache"]),
    ("case13",
     "A 45-year-old woman with fever, chills, headache, photophobia, and neck "
     "stiffness two days after a sinus infection.",
     ["meningismus", "systemic_illness"]),
    ("case14",
     "A 27-year-old man with episodic unilateral throbbing headaches preceded by "
     "visual aura, fully reversible, consistent with his migraines since age 15.",
     []),
    ("case15",
     "A 60-year-old man with known metastatic cancer, fever, headache, neck "
     "stiffness, and a new visual field defect on confrontation testing.",
     ["meningismus", "systemic_illness", "focal_deficits"]),
    ("case16",
     "A 41-year-old woman with a thunderclap headache while swimming; normal "
     "fundoscopy and normal neurological examination.",
     ["thunderclap"]),
    ("case17",
     "A 68-year-old man with a new headache and tenderness over the left temporal "
     "artery; vision transiently dimmed in the left eye yesterday.",
     ["temporal_arteritis"]),
    ("case18",
     "A 33-year-old woman with morning headaches and papilledema documented by "
     "ophthalmology; opening pressure 34 cmH2O.",
     ["papilledema"]),
    ("case19",
     "A 22-year-old man with headache, fever, and positive Kernig and Brudzinski "
     "signs after a music festival.",
     ["meningismus"]),
    ("case20",
     "A 55-year-old woman with three weeks of headache, fevers, night sweats, and "
     "new immunosuppressive therapy after renal transplant.",
     ["systemic_illness"]),
    ("case21",
     "A 47-year-old man with new right-sided weakness, aphasia, and the first severe "
     "headache of his life.",
     ["focal_deficits", "first_worst_headache"]),
    ("case22",
     "A 36-year-old man with chronic tension-type headaches, normal examination, no "
     "red-flag features on systematic review.",
     []),
]

# Deviations from "perfect" scripted behavior, keyed by case id.
ROUTE_OVERRIDES = {
    "case16": ["thunderclap", "papilledema"],  # over-routing: papilledema agent answers NO
    "case17": [],                              # routing miss: predicted empty, truth non-empty
}
SPECIALIST_FAULTS = {
    ("case18", "papilledema"): "HTTP_500",     # isolated agent failure -> ERROR verdict
    ("case19", "meningismus"): "DROPPED",      # dropped call, recovered by manual fan-out
}
BASELINE_EXTRA_YES = {"case16": ["papilledema"]}
BASELINE_OMIT_LINE = {"case20": ["systemic_illness"]}  # missing line -> ERROR verdict

ORCH_STYLES = ["strict", "fenced", "prose", "trailing_comma", "single_quotes"]


def first_quote(text: str) -> str:
    words = text.split()
    return " ".join(words[2:6])


def orchestrator_response(case_id: str, text: str, targets: list, style: str) -> str:
    doc = {
        "next": targets,
        "why": "no criteria met" if not targets else "note shows " + ", ".join(targets),
        "evidence": [] if not targets else [first_quote(text)],
    }
    strict = json.dumps(doc, ensure_ascii=False)
    if style == "strict":
        return strict
    if style == "fenced":
        return "Here is the routing decision:\n```json\n" + strict + "\n```\nLet me know if you need anything else."
    if style == "prose":
        return "Based on my reading of the note, the routing is " + strict + " as required."
    if style == "trailing_comma":
        inner = json.dumps(doc["next"], ensure_ascii=False)
        ev = json.dumps(doc["evidence"], ensure_ascii=False)
        if doc["next"]:
            inner = inner[:-1] + ",]"
        if doc["evidence"]:
            ev = ev[:-1] + ",]"
        return '{"next": %s, "why": %s, "evidence": %s,}' % (
            inner, json.dumps(doc["why"], ensure_ascii=False), ev)
    if style == "single_quotes":
        parts = ", ".join("'%s'" % t for t in targets)
        evs = ", ".join("'%s'" % q.replace("'", " ") for q in doc["evidence"])
        return "{'next': [%s], 'why': '%s', 'evidence': [%s]}" % (
            parts, doc["why"].replace("'", " "), evs)
    raise ValueError(style)


def specialist_response(flag: str, positive: bool, text: str) -> str:
    if positive:
        return 'YES. The note documents "%s", meeting the %s criteria.' % (
            first_quote(text), flag.replace("_", " "))
    return "NO. The note contains no findings that satisfy the %s criteria." % (
        flag.replace("_", " "))


def baseline_response(case_id: str, truth: list, text: str) -> str:
    yes = set(truth) | set(BASELINE_EXTRA_YES.get(case_id, []))
    omit = set(BASELINE_OMIT_LINE.get(case_id, []))
    lines = []
    for flag in FLAGS:
        if flag in omit:
            continue
        if flag in yes:
            lines.append('%s: YES — "%s"' % (flag, first_quote(text)))
        else:
            lines.append("%s: NO — not documented" % flag)
    return "\n".join(lines)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    with (OUT / "cases.jsonl").open("w", encoding="utf-8") as fh:
        for case_id, text, truth in CASES:
            fh.write(json.dumps(
                {"id": case_id, "text": text, "red_flags": truth}, ensure_ascii=False) + "\n")

    entries = []
    for idx, (case_id, text, truth) in enumerate(CASES):
        targets = ROUTE_OVERRIDES.get(case_id, truth)
        style = ORCH_STYLES[idx % len(ORCH_STYLES)]
        entries.append({
            "case_id": case_id,
            "agent_role": "orchestrator",
            "response": orchestrator_response(case_id, text, targets, style),
        })
        for flag in FLAGS:
            entry = {
                "case_id": case_id,
                "agent_role": flag,
                "response": specialist_response(flag, flag in truth, text),
            }
            fault = SPECIALIST_FAULTS.get((case_id, flag))
            if fault:
                entry["fault"] = fault
            entries.append(entry)
        entries.append({
            "case_id": case_id,
            "agent_role": "baseline",
            "response": baseline_response(case_id, truth, text),
        })

    with (OUT / "script.jsonl").open("w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    print(f"wrote {len(CASES)} cases and {len(entries)} script entries to {OUT}")


if __name__ == "__main__":
    main()
