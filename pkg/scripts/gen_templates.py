#!/usr/bin/env python3
"""Generate the default prompt template files under src/redflagcds/prompt_templates/.

Run from the repo root. Committed outputs are the deliverable; this script exists
so the clinical criteria blocks stay consistent between the specialist GPrompts
and the baseline GPrompt.
"""

from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "src" / "redflagcds" / "prompt_templates"

SHARED_TAIL = (
    "Rely explicitly on information present in the vignette and justify your "
    "decision using traceable text spans or paraphrased clinical observations.\n"
    "\n"
    "Patient note:\n"
    "{{VIGNETTE}}\n"
)

ORCHESTRATOR = """\
You are the orchestrator of a secondary-headache red-flag screening system. Read the patient note and decide which specialist red-flag agents must evaluate this case.

CRITICAL: Your response MUST be ONLY valid JSON. Do NOT include any explanation before or after the JSON. Do NOT write prose. Do NOT write markdown. ONLY output the JSON object.

Required format (copy this structure exactly):

{ "next": ["agent1", "agent2"], "why": "brief reason", "evidence": ["quote1", "quote2"] }

Rules:
- Valid agent names ONLY: thunderclap, meningismus, papilledema, temporal_arteritis, systemic_illness, focal_deficits, first_worst_headache
- "why" must be ≤30 words
- "evidence" must be direct quotes from patient note
- If no agents needed: {"next": [], "why": "no criteria met", "evidence": []}

OUTPUT ONLY THE JSON OBJECT. START WITH { AND END WITH }. NO OTHER TEXT.

Patient note:
{{VIGNETTE}}
"""

QPROMPTS = {
    "thunderclap": "Does this patient have a thunderclap headache? Answer YES or NO and explain briefly.",
    "meningismus": "Does this patient have meningismus? Answer YES or NO and explain briefly.",
    "papilledema": "Does this patient have papilledema? Answer YES or NO and explain briefly.",
    "temporal_arteritis": "Does this patient have signs of temporal arteritis? Answer YES or NO and explain briefly.",
    "systemic_illness": "Does this patient have signs of systemic illness? Answer YES or NO and explain briefly.",
    "focal_deficits": "Does this patient have focal neurologic deficits? Answer YES or NO and explain briefly.",
    "first_worst_headache": "Is this the first or worst headache of this patient's life? Answer YES or NO and explain briefly.",
}

# question, definition, indicators, decision rule
GPROMPTS = {
    "thunderclap": (
        "Is there a thunderclap headache in this note? Answer with Yes or No and explain why.",
        "Thunderclap headache is a sudden-onset severe headache that reaches maximal severity within one hour.",
        [
            '"Thunderclap"',
            '"Thunderclap headache"',
            '"TCH" (abbreviation for thunderclap headache)',
            '"Thunderclap onset"',
            '"sudden onset of headache"',
            '"new sudden-onset severe headache"',
            '"sudden onset of severe headache that reaches maximal severity within one hour"',
            '"worst headache ever experienced"',
            '"first or worst headache of patient\'s life"',
        ],
        "Answer YES if the headache has sudden onset and reaches peak intensity quickly (within 1 hour).",
    ),
    "meningismus": (
        "Is there meningismus in this note? Answer with Yes or No and explain why.",
        "Meningismus is the presence of signs of meningeal irritation, classically headache with neck stiffness, often accompanied by fever or photophobia.",
        [
            '"stiff neck", "neck stiffness", or "nuchal rigidity"',
            '"meningismus", "meningeal irritation", or "meningeal signs"',
            '"Kernig sign" or "Brudzinski sign"',
            'headache together with "fever" and neck pain',
            '"photophobia" accompanying neck stiffness',
            "cerebrospinal fluid findings suggesting meningitis (elevated white cells, low glucose, high lactate)",
        ],
        "Answer YES if the note documents signs of meningeal irritation such as nuchal rigidity, positive Kernig or Brudzinski signs, or headache with fever and neck stiffness.",
    ),
    "papilledema": (
        "Is there papilledema in this note? Answer with Yes or No and explain why.",
        "Papilledema is swelling of the optic disc caused by raised intracranial pressure.",
        [
            '"papilledema" or "papilloedema"',
            '"optic disc swelling", "disc edema", or "blurred disc margins"',
            '"elevated optic discs" on fundoscopy',
            '"transient visual obscurations"',
            "raised intracranial pressure with visual symptoms",
            "elevated opening pressure on lumbar puncture together with disc swelling",
        ],
        "Answer YES if fundoscopic examination documents optic-disc swelling or the note explicitly states papilledema.",
    ),
    "temporal_arteritis": (
        "Are there signs of temporal arteritis in this note? Answer with Yes or No and explain why.",
        "Temporal arteritis (giant cell arteritis) is an inflammatory arteritis of older adults that presents with new headache and arterial or ischemic features.",
        [
            '"temporal arteritis", "giant cell arteritis", or "GCA"',
            "new headache in a patient over 50 years old",
            '"jaw claudication"',
            '"scalp tenderness" or tenderness over the temporal artery',
            "a thickened, nodular, or pulseless temporal artery",
            "elevated ESR or CRP with new headache",
            "visual loss or amaurosis fugax in an older patient with headache",
        ],
        "Answer YES if the note documents features of giant cell arteritis such as jaw claudication, temporal artery abnormalities, or markedly elevated inflammatory markers with new headache in an older adult.",
    ),
    "systemic_illness": (
        "Are there signs of systemic illness in this note? Answer with Yes or No and explain why.",
        "Systemic illness red flags are constitutional or host-risk features suggesting the headache is secondary to an underlying systemic disease such as infection, malignancy, or immunosuppression.",
        [
            '"fever", "chills", or "night sweats"',
            'unintentional "weight loss"',
            'known "cancer" or a history of malignancy',
            '"immunosuppression", HIV infection, or immunosuppressive therapy',
            '"pregnancy" or the postpartum state',
            "systemic infection or sepsis",
            "myalgias or malaise accompanying a new headache",
        ],
        "Answer YES if the note documents constitutional symptoms, active systemic disease, malignancy, or an immunocompromised state accompanying the headache.",
    ),
    "focal_deficits": (
        "Are there focal neurologic deficits in this note? Answer with Yes or No and explain why.",
        "Focal neurologic deficits are localizing abnormalities of neurological function, such as weakness, sensory loss, speech disturbance, or visual field loss.",
        [
            '"weakness" or "hemiparesis" on one side',
            '"numbness" or unilateral sensory loss',
            '"aphasia", "dysarthria", or other speech disturbance',
            '"visual field defect", "diplopia", or a cranial nerve palsy',
            '"ataxia" or a new gait disturbance',
            '"seizure" or altered level of consciousness',
            "asymmetric reflexes or a Babinski sign",
        ],
        "Answer YES if the neurological examination or history documents any new localizing deficit accompanying the headache.",
    ),
    "first_worst_headache": (
        "Is this headache described as the first or worst headache of the patient's life, in a patient 40 years old or older? Answer with Yes or No and explain why.",
        'The first-or-worst red flag is a headache described as the "worst headache of their life", or a first severe headache of its kind, in patients 40 years old or older.',
        [
            '"worst headache of my life" or "worst headache ever"',
            '"first headache of this kind" or no prior headache history',
            '"never had a headache like this before"',
            "new-onset severe headache in a patient aged 40 or older",
            "an abrupt change from any prior headache pattern",
        ],
        "Answer YES if the note describes a first or worst-of-life headache and the patient is 40 years old or older.",
    ),
}

BASELINE_FORMAT = """\
Respond with exactly seven lines, one per red flag, in this order and format:
<red_flag_name>: YES|NO — brief rationale
"""

BASELINE_Q_QUESTIONS = [
    "1. thunderclap: sudden-onset severe headache reaching maximal severity within one hour?",
    "2. meningismus: signs of meningeal irritation such as stiff neck with fever?",
    "3. papilledema: optic-disc swelling on fundoscopy or raised intracranial pressure?",
    "4. temporal_arteritis: features of giant cell arteritis such as jaw claudication or temporal tenderness?",
    "5. systemic_illness: constitutional signs such as fever, weight loss, cancer, or immunosuppression?",
    "6. focal_deficits: new localizing neurologic abnormalities such as weakness or aphasia?",
    "7. first_worst_headache: described as the first or worst of the patient's life, age 40 or older?",
]


def gprompt_body(flag: str) -> str:
    question, definition, indicators, rule = GPROMPTS[flag]
    lines = [question, "", f"Definition: {definition}", "", "Look for these indicators:"]
    lines += [f"- {ind}" for ind in indicators]
    lines += ["", rule, ""]
    return "\n".join(lines) + SHARED_TAIL


def baseline_qprompt() -> str:
    parts = [
        "Screen the patient note below for all seven secondary-headache red flags. "
        "For each red flag answer YES or NO based only on the note.",
        "",
        BASELINE_FORMAT.rstrip("\n"),
        "",
        *BASELINE_Q_QUESTIONS,
        "",
        SHARED_TAIL.rstrip("\n"),
        "",
    ]
    return "\n".join(parts)


def baseline_gprompt() -> str:
    parts = [
        "Screen the patient note below for all seven secondary-headache red flags using "
        "the clinical criteria given for each. For each red flag answer YES or NO based "
        "only on the note.",
        "",
        BASELINE_FORMAT.rstrip("\n"),
        "",
        "Criteria:",
    ]
    for flag, (_q, definition, _ind, rule) in GPROMPTS.items():
        parts += ["", f"### {flag}", f"Definition: {definition}", rule]
    parts += ["", SHARED_TAIL.rstrip("\n"), ""]
    return "\n".join(parts)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "orchestrator.txt").write_text(ORCHESTRATOR, encoding="utf-8")
    for flag, question in QPROMPTS.items():
        d = OUT / flag
        d.mkdir(exist_ok=True)
        (d / "qprompt.txt").write_text(question + "\n\n" + SHARED_TAIL, encoding="utf-8")
        (d / "gprompt.txt").write_text(gprompt_body(flag), encoding="utf-8")
    b = OUT / "baseline"
    b.mkdir(exist_ok=True)
    (b / "qprompt.txt").write_text(baseline_qprompt(), encoding="utf-8")
    (b / "gprompt.txt").write_text(baseline_gprompt(), encoding="utf-8")
    print(f"wrote templates to {OUT}")


if __name__ == "__main__":
    main()
