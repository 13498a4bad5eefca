#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/fixtures/.

The mock rule files script every chain step for every fixture text. Patterns
are anchored on the exact step boundary (previous output + next instruction)
so that few-shot prefixes, which repeat the step instructions, never match the
wrong rule.
"""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"

NEWS_LABELS = ["health", "sport", "entertainment", "business", "sci_tech", "U.S.", "world"]

SSE1 = "identify key concepts."
SSE2 = "retrieve related common knowledge."
SSE3 = ("Refine and enhance the language to guarantee precision, fluidity, and legibility, "
        "whilst preserving the accuracy and wholeness of the integrated information.")
STEP4 = "classify it into one of the categories."
DA1 = "identify the key components,"
DA2 = "Provide a summary of the identified components,"

HEADLINES = {
    "health": [
        ("Flu shots urged as clinics report early surge", "flu shots; clinics; seasonal surge"),
        ("New study links sleep loss to heart disease", "sleep loss; heart disease; clinical study"),
        ("Hospital cuts wait times with nurse triage", "hospital; wait times; nurse triage"),
        ("Measles cases climb in three counties", "measles; case counts; counties"),
        ("Doctors warn of rising diabetes in teens", "doctors; diabetes; teenagers"),
        ("Vitamin D trial shows no effect on colds", "vitamin D; clinical trial; common cold"),
    ],
    "sport": [
        ("Nadal cruises into Madrid quarterfinal", "Nadal; Madrid Open; quarterfinal"),
        ("Yankees rally late to beat Red Sox", "Yankees; Red Sox; comeback win"),
        ("Striker signs five-year deal with Arsenal", "striker; contract; Arsenal"),
        ("Tour de France leader crashes on descent", "Tour de France; race leader; crash"),
        ("Lakers clinch playoff spot with road win", "Lakers; playoffs; road game"),
        ("Bolt eases through 100m heats", "Usain Bolt; 100m; qualifying heats"),
    ],
    "entertainment": [
        ("Pixar sequel tops weekend box office", "Pixar; sequel; box office"),
        ("Grammy nominees announced for album of the year", "Grammy Awards; nominees; album of the year"),
        ("Broadway revival sets opening night", "Broadway; revival; opening night"),
        ("Pop star cancels tour over vocal strain", "pop star; concert tour; cancellation"),
        ("Streaming drama renewed for fourth season", "streaming series; drama; renewal"),
        ("Director wins Palme d'Or at Cannes", "film director; Palme d'Or; Cannes festival"),
    ],
    "business": [
        ("Retailer posts record holiday profit", "retailer; holiday quarter; profit"),
        ("Airline merger wins regulator approval", "airlines; merger; regulators"),
        ("Oil prices slide as inventories swell", "oil prices; inventories; commodity market"),
        ("Carmaker recalls half a million sedans", "carmaker; recall; sedans"),
        ("Bank raises dividend after stress test", "bank; dividend; stress test"),
        ("Startup raises 40 million in funding round", "startup; venture funding; investors"),
    ],
    "sci_tech": [
        ("Chipmaker unveils faster mobile processor", "chipmaker; mobile processor; performance"),
        ("Probe sends first images from Jupiter orbit", "space probe; Jupiter; orbital images"),
        ("Browser update patches critical security flaw", "web browser; security patch; vulnerability"),
        ("Researchers build battery that charges in minutes", "researchers; battery; fast charging"),
        ("Search giant opens quantum computing lab", "search company; quantum computing; laboratory"),
        ("Phone maker adds satellite texting feature", "smartphone; satellite messaging; feature"),
    ],
    "U.S.": [
        ("Senate passes highway funding bill", "Senate; highway bill; federal funding"),
        ("Governor declares emergency after Texas floods", "governor; Texas; flood emergency"),
        ("Supreme Court hears campus speech case", "Supreme Court; free speech; university campus"),
        ("Chicago council approves police budget", "Chicago city council; police; budget"),
        ("Wildfire forces evacuations near Sacramento", "wildfire; evacuations; Sacramento"),
        ("Census shows population shift to the South", "census; population; Southern states"),
    ],
    "world": [
        ("Talks resume over Nile dam dispute", "Nile; dam; diplomatic talks"),
        ("Japan elects new prime minister", "Japan; election; prime minister"),
        ("Ceasefire holds in northern Syria", "Syria; ceasefire; northern region"),
        ("EU leaders meet on migration plan", "European Union; leaders; migration"),
        ("Earthquake shakes central Chile", "earthquake; Chile; damage"),
        ("Protesters fill streets of Caracas", "protests; Caracas; Venezuela"),
    ],
}


def join_with(left, sep, right):
    """Mirror of the library's join rule: a terminal . ! ? absorbs the separator's punctuation."""
    if left.endswith((".", "!", "?")):
        stripped = sep.lstrip(".,")
        sep = stripped if stripped else " "
    return left + sep + right


def jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def scripted_rules(text, label, concepts, labels):
    knowledge = f"Background: {concepts.replace(';', ',')} are widely reported in {label} coverage"
    rewrite = f"{text}. This concerns {concepts.replace(';', ',')}, with the key facts stated plainly."
    components = f"Components of '{text}': {concepts}"
    summary = f"The text reports on {concepts.replace(';', ',')} and their significance."
    answer = f"The category is '{label}'."
    quoted = f"'{text}'"
    scores = {l: (-0.05 if l == label else -4.0 - i * 0.25) for i, l in enumerate(labels)}
    classify_tails = [
        join_with(rewrite, ". ", STEP4),
        join_with(join_with(text, ". ", knowledge), ". ", STEP4),
        "Given the short text " + join_with(text, ". ", STEP4),
        f"Given the short text {quoted}, classify it into",
        f"Categorize this text: {quoted}.",
    ]
    return [{"pattern": t, "response": answer} for t in classify_tails] + [
        {"pattern": t, "scores": scores} for t in classify_tails] + [
        {"pattern": f"{quoted}. {SSE3}", "response": rewrite},
        {"pattern": join_with(knowledge, ". ", SSE3), "response": rewrite},
        {"pattern": join_with(concepts, ", ", SSE2), "response": knowledge},
        {"pattern": f"{quoted}, {SSE1}", "response": concepts},
        {"pattern": join_with(components, ". ", DA2), "response": summary},
        {"pattern": f"{quoted}, {DA1}", "response": components},
    ]


def manifest(path, name, labels, count, corpus="corpus.jsonl", domain="news", cue="news"):
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"name": name, "path": corpus, "format": "jsonl", "labels": labels, "count": count,
            "domain": domain, "cue_profile": cue}
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")


def gen_news7():
    d = ROOT / "news7"
    rows, rules = [], []
    for label in NEWS_LABELS:
        for i, (text, concepts) in enumerate(HEADLINES[label]):
            rows.append({"id": f"n7-{NEWS_LABELS.index(label)}{i}", "text": text, "label": label})
    # Interleave classes so corpus order is not grouped by label.
    rows.sort(key=lambda r: (r["id"][-1], r["id"]))
    for r in rows:
        concepts = dict(HEADLINES[r["label"]])[r["text"]]
        rules.extend(scripted_rules(r["text"], r["label"], concepts, NEWS_LABELS))
    jsonl(d / "corpus.jsonl", rows)
    jsonl(d / "rules.jsonl", rules)
    manifest(d / "manifest.json", "tagmynews", NEWS_LABELS, len(rows))

    exemplars = []
    for label in NEWS_LABELS:
        text, concepts = HEADLINES[label][0]
        ctx = f"Given the short text '{text}'"
        exemplars.append({
            "text": text,
            "gold": label,
            "steps": [
                {"context": ctx, "instruction": SSE1, "output": concepts},
                {"context": f"{ctx}, {concepts}", "instruction": SSE2,
                 "output": f"{concepts} relate to {label} news"},
                {"context": f"{ctx}, {concepts}, {concepts} relate to {label} news", "instruction": SSE3,
                 "output": f"{text}, a {label} story."},
                {"context": f"Given the short text {text}, a {label} story", "instruction": STEP4 +
                 " The categories are " + ", ".join(f"'{l}'" for l in NEWS_LABELS[:-1]) + f" and '{NEWS_LABELS[-1]}'.",
                 "output": label},
            ],
        })
    (d / "exemplars.json").write_text(json.dumps(exemplars, indent=2) + "\n", encoding="utf-8")


def gen_tennis():
    d = ROOT / "tennis"
    text = "Del Potro says make French Open"
    concepts = "Del Potro; French Open"
    knowledge = ("Del Potro is an Argentine professional tennis player; the French Open is one of the four "
                 "Grand Slam tennis tournaments, played on clay in Paris")
    rewrite = ("Del Potro, the Argentine professional tennis player, says he will make it to the French Open, "
               "the Grand Slam tennis tournament held in Paris.")
    answer = "sport"
    rules = [
        {"pattern": join_with(rewrite, ". ", STEP4), "response": answer},
        {"pattern": join_with(rewrite, ". ", STEP4),
         "scores": {l: (-0.02 if l == "sport" else -5.0) for l in NEWS_LABELS}},
        {"pattern": join_with(knowledge, ". ", SSE3), "response": rewrite},
        {"pattern": join_with(concepts, ", ", SSE2), "response": knowledge},
        {"pattern": f"'{text}', {SSE1}", "response": concepts},
        {"pattern": f"Categorize this text: '{text}'.", "response": "world"},
    ]
    jsonl(d / "rules.jsonl", rules)
    jsonl(d / "corpus.jsonl", [{"id": "tennis", "text": text, "label": "sport"}])
    manifest(d / "manifest.json", "tennis", NEWS_LABELS, 1)


def gen_decompose():
    d = ROOT / "decompose"
    text = "Intel unveils dual-core chips at developer forum"
    components = ("Entities: Intel, dual-core chips, developer forum. Action: unveils. "
                  "Event: a product announcement at an industry conference")
    summary = ("Intel, a semiconductor company, announced dual-core processors to developers at its forum; "
               "the launch matters because multi-core designs shape upcoming computers and software.")
    rules = [
        {"pattern": join_with(components, ". ", DA2), "response": summary},
        {"pattern": f"'{text}', {DA1}", "response": components},
    ]
    jsonl(d / "rules.jsonl", rules)
    jsonl(d / "corpus.jsonl", [{"id": "decompose", "text": text, "label": "sci_tech"}])
    manifest(d / "manifest.json", "decompose", NEWS_LABELS, 1)


def gen_calls50():
    d = ROOT / "calls50"
    rows = []
    for i in range(50):
        label = NEWS_LABELS[i % len(NEWS_LABELS)]
        rows.append({"id": f"c{i:03d}", "text": f"fixture headline number {i} about {label} matters", "label": label})
    jsonl(d / "corpus.jsonl", rows)
    jsonl(d / "rules.jsonl", [
        {"pattern": "classify it into", "response": "world"},
        {"pattern": "Categorize this text", "response": "world"},
        {"pattern": "Refine and enhance", "response": "A refined statement of the text."},
        {"pattern": "retrieve related common knowledge", "response": "Related background knowledge"},
        {"pattern": "identify key concepts", "response": "key concepts"},
        {"pattern": "Provide a summary", "response": "A summary of the components."},
        {"pattern": "identify the key components", "response": "components"},
    ])
    manifest(d / "manifest.json", "calls50", NEWS_LABELS, len(rows))


if __name__ == "__main__":
    gen_news7()
    gen_tennis()
    gen_decompose()
    gen_calls50()
