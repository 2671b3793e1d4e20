#!/usr/bin/env python3
"""Regenerates the JSONL fixtures under fixtures/.

Output is deterministic: running it twice produces identical files.

  fixtures/small/statutes.jsonl      10 criminal-law articles
  fixtures/small/judgments.jsonl     12 judgments citing them
  fixtures/corpus60/judgments.jsonl  60 generated judgments over the same statutes
  fixtures/statutes452/statutes.jsonl  101 general + 351 specific generated articles
  fixtures/zhang_yue/case.txt, script.json
"""

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

ARTICLES = [
    ("234", "Whoever intentionally injures the body of another person shall be sentenced to fixed-term "
            "imprisonment of not more than three years, criminal detention or public surveillance. Whoever "
            "intentionally injures another person and causes serious injury shall be sentenced to fixed-term "
            "imprisonment of not less than three years and not more than ten years. Intentional injury causing "
            "death, or severe disability by especially cruel means, shall be punished more severely."),
    ("264", "Whoever steals public and private property of a relatively large amount, or commits multiple "
            "thefts, burglary, theft while carrying a weapon or pickpocketing, shall be sentenced to fixed-term "
            "imprisonment of not more than three years, criminal detention or public surveillance and shall also, "
            "or shall only, be fined. Theft of a huge amount of public and private property is punished more "
            "severely."),
    ("266", "Whoever defrauds public and private property of a relatively large amount by fabricating facts or "
            "concealing the truth shall be sentenced to fixed-term imprisonment of not more than three years, "
            "criminal detention or public surveillance and shall also, or shall only, be fined. Fraud involving "
            "a huge amount of property is punished more severely."),
    ("382", "A state functionary who takes advantage of his office to appropriate, steal or swindle public "
            "property, or to illegally take possession of public property by other means, commits the crime of "
            "embezzlement. Persons entrusted to manage state-owned property who take such property by these "
            "means are punished for embezzlement."),
    ("383", "Whoever commits embezzlement shall be punished according to the amount embezzled and the "
            "circumstances. Where the amount is relatively large the offender is sentenced to fixed-term "
            "imprisonment of not more than three years or criminal detention and a fine. An offender who "
            "truthfully confesses, sincerely repents, actively returns the illicit money and avoids or reduces "
            "the harm may be given a lighter punishment."),
    ("384", "A state functionary who takes advantage of his office to misappropriate public funds for personal "
            "use, for illegal activities, or for profit-making activities, or who misappropriates public funds "
            "of a relatively large amount that remain unreturned for more than three months, commits the crime "
            "of misappropriation of public funds."),
    ("385", "A state functionary who takes advantage of his office to demand money or property from another "
            "person, or illegally accepts money or property from another person and secures benefits for that "
            "person, commits the crime of accepting bribes. A state functionary accepting kickbacks or handling "
            "fees in economic activities in violation of state regulations is punished for accepting bribes."),
    ("386", "Whoever commits the crime of accepting bribes shall be punished according to the amount of bribes "
            "accepted and the circumstances, with reference to the punishment of embezzlement. Demanding bribes "
            "is punished more severely. Bribery by state functionaries undermines the integrity of office, and "
            "bribery involving a huge amount is punished with long fixed-term imprisonment."),
    ("389", "Whoever gives money or property to a state functionary for the purpose of seeking illegitimate "
            "benefits commits the crime of offering bribes. Giving a relatively large amount of money or "
            "property in violation of state regulations, or giving kickbacks or handling fees, is treated as "
            "bribery. Bribery through an intermediary is still bribery, and a person extorted into giving money "
            "without obtaining illegitimate benefits has not committed bribery."),
    ("397", "A functionary of a state organ who commits abuse of power or neglect of duty, causing heavy losses "
            "to public property or to the interests of the state and the people, shall be sentenced to "
            "fixed-term imprisonment of not more than three years or criminal detention. Abuse of power out of "
            "favouritism for personal gain is punished more severely."),
]

JUDGMENTS = [
    ("Li Ming theft case", "2021-04-12", "theft",
     "Li Ming entered a neighbour's courtyard at night on three occasions and stole an electric bicycle and "
     "cash, committing multiple thefts of private property worth 6,200 yuan.", ["264"]),
    ("Wang Qiang fraud case", "2021-06-03", "fraud",
     "Wang Qiang posed as a loan broker, fabricated facts about approval fees and defrauded four victims of "
     "38,000 yuan before disappearing.", ["266"]),
    ("Chen Hua intentional injury case", "2021-07-19", "intentional injury",
     "During a dispute over parking, Chen Hua struck the victim with an iron bar, causing a fractured arm that "
     "was assessed as serious injury.", ["234"]),
    ("Zhao Lin bribery case", "2021-08-25", "accepting bribes",
     "Zhao Lin, deputy director of a township land office, accepted 120,000 yuan from a developer and secured "
     "benefits for him in the approval of a land lease, accepting bribes on five occasions.", ["385", "386"]),
    ("Sun Tao bribery case", "2021-09-30", "accepting bribes",
     "Sun Tao, a state functionary at a county hospital, took advantage of his office to accept money from a "
     "medical supplier and secured purchasing benefits for the supplier; he later confessed and returned the "
     "illicit money.", ["385", "383"]),
    ("Zhou Jie embezzlement case", "2021-11-08", "embezzlement",
     "Zhou Jie, cashier of a state-owned grain depot, took advantage of her office to appropriate 210,000 yuan "
     "of public property by forging receipts.", ["382", "383"]),
    ("Wu Gang misappropriation case", "2022-01-14", "misappropriation of public funds",
     "Wu Gang, a village accountant performing public duties, misappropriated 90,000 yuan of public funds for "
     "personal use and did not return them for five months.", ["384"]),
    ("Zheng Yu bribe-giving case", "2022-03-02", "offering bribes",
     "Zheng Yu gave 50,000 yuan and shopping cards to a state functionary to seek illegitimate benefits in a "
     "construction tender.", ["389"]),
    ("Feng Lei abuse of power case", "2022-04-21", "abuse of power",
     "Feng Lei, a functionary of a state organ in charge of subsidy review, committed abuse of power by "
     "approving forged applications, causing heavy losses of 1.2 million yuan in public property.", ["397"]),
    ("He Ping bribery and abuse of power case", "2022-06-16", "accepting bribes and abuse of power",
     "He Ping, a grid supervisor in a village committee, accepted bribes of 30,000 yuan and abused his power "
     "by falsifying household records so that applicants received relocation payments.", ["385", "397"]),
    ("Ma Lan theft case", "2022-08-09", "theft",
     "Ma Lan was caught pickpocketing a mobile phone on a bus; she had stolen public and private property "
     "twice before in the same month.", ["264"]),
    ("Guo Bin fraud and bribery case", "2022-10-27", "fraud",
     "Guo Bin defrauded investors of 400,000 yuan by concealing the truth about a fake project and gave part of "
     "the money to an official as bribes.", ["266", "389"]),
]

ZHANG_YUE_CASE = (
    "Zhang Yue served as a cultural administrator and grid worker for a village. While in that post he altered "
    "residents' registration details so that certain people could obtain benefits they were not entitled to, "
    "and in return he accepted bribes totalling 72,500 yuan. Once the matter came to light he confessed of his "
    "own accord and handed back the money.\n"
)

ZHANG_YUE_SCRIPT = [
    "accepting bribes; abuse of power; bribery",
    "Article 385. As a state functionary he used his office to accept money and secured benefits for the "
    "payers, which is the conduct described in Article 385.",
]

# Vocabulary per article for generated cases: (subjects, acts, objects, details)
CASE_TEMPLATES = {
    "234": ["intentionally injured", "struck the victim", "serious injury", "fractured", "dispute", "assault"],
    "264": ["stole", "multiple thefts", "burglary", "pickpocketing", "private property", "stolen goods"],
    "266": ["defrauded", "fabricated facts", "concealing the truth", "fake investment", "victims", "fraud"],
    "382": ["embezzled", "appropriate public property", "forged receipts", "state-owned", "cashier", "embezzlement"],
    "383": ["confessed", "returned the illicit money", "repented", "amount embezzled", "lighter punishment", "fine"],
    "384": ["misappropriated public funds", "personal use", "unreturned", "village accountant", "loan", "three months"],
    "385": ["accepted bribes", "secured benefits", "took advantage of his office", "state functionary", "kickbacks",
            "accepting bribes"],
    "386": ["amount of bribes", "demanding bribes", "bribery", "integrity of office", "huge amount", "accepted"],
    "389": ["gave money", "illegitimate benefits", "offering bribes", "shopping cards", "tender", "bribery"],
    "397": ["abuse of power", "neglect of duty", "heavy losses", "state organ", "subsidy review", "favouritism"],
}

CITATION_PATTERNS = [["264"], ["266"], ["234"], ["385", "386"], ["385"], ["382", "383"], ["384"], ["389"],
                     ["397"], ["385", "397"], ["382"], ["266", "389"], ["386", "385"], ["383", "382"]]

FILLER = ["the defendant", "according to the indictment", "in the county", "over several months",
          "witnesses testified", "the court found", "evidence shows", "later that year"]

SURNAMES = ["Liu", "Yang", "Huang", "Xu", "Lin", "He", "Gao", "Luo", "Song", "Tang", "Han", "Cao", "Deng",
            "Xie", "Peng", "Zeng", "Xiao", "Tian", "Dong", "Pan"]
GIVEN = ["Wei", "Fang", "Jun", "Min", "Hao", "Yan", "Ling", "Bo", "Xin", "Rui", "Kai", "Na"]

GENERAL_TOPICS = ["criminal responsibility", "age of responsibility", "mental illness", "self-defence",
                  "necessity", "preparation", "attempt", "discontinuation", "joint crime", "principal offender",
                  "accessory", "instigation", "unit crime", "public surveillance", "criminal detention",
                  "fixed-term imprisonment", "life imprisonment", "death penalty", "fine", "confiscation",
                  "deprivation of political rights", "sentencing", "recidivism", "voluntary surrender",
                  "meritorious service", "combined punishment", "probation", "parole", "limitation period"]

SPECIFIC_ACTS = ["endangering public safety", "arson", "explosion", "poisoning", "dangerous driving",
                 "illegal possession of firearms", "smuggling", "counterfeiting currency", "financial fraud",
                 "tax evasion", "infringing trademarks", "illegal business operation", "intentional homicide",
                 "kidnapping", "insult", "false imprisonment", "robbery", "extortion", "destroying property",
                 "obstructing official duties", "gang crime", "drug trafficking", "organising prostitution",
                 "polluting the environment", "illegal logging", "forging documents", "perjury",
                 "harbouring criminals", "escaping custody", "dereliction of duty", "embezzlement",
                 "bribery", "abuse of power", "military secrets", "desertion"]
SPECIFIC_CIRCUMSTANCES = ["serious circumstances", "especially serious circumstances", "huge amount",
                          "relatively large amount", "heavy losses", "death or serious injury",
                          "repeated offences", "organised group", "state functionary", "public property"]


def write_jsonl(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=False) + "\n")


def small():
    write_jsonl(ROOT / "small" / "statutes.jsonl",
                [{"article_number": n, "body": b} for n, b in ARTICLES])
    write_jsonl(ROOT / "small" / "judgments.jsonl",
                [{"case_name": c, "session_date": d, "prosecution_reason": r, "facts": f, "cited_articles": a}
                 for c, d, r, f, a in JUDGMENTS])


def corpus60():
    rng = random.Random(60)
    rows = []
    for i in range(60):
        cites = CITATION_PATTERNS[i % len(CITATION_PATTERNS)]
        name = f"{rng.choice(SURNAMES)} {rng.choice(GIVEN)}"
        words = []
        for art in cites:
            words += rng.sample(CASE_TEMPLATES[art], 3)
        words += rng.sample(FILLER, 2)
        rng.shuffle(words)
        facts = f"{name} {words[0]}; " + ", ".join(words[1:]) + f". The amount involved was {rng.randint(5, 500) * 1000} yuan."
        month = 1 + i % 12
        day = 1 + (i * 7) % 28
        rows.append({
            "case_name": f"{name} case {i + 1:02d}",
            "session_date": f"{2021 + i % 3}-{month:02d}-{day:02d}",
            "prosecution_reason": CASE_TEMPLATES[cites[0]][-1],
            "facts": facts,
            "cited_articles": cites,
        })
    write_jsonl(ROOT / "corpus60" / "judgments.jsonl", rows)


def statutes452():
    rng = random.Random(452)
    rows = []
    for n in range(1, 102):
        topic = GENERAL_TOPICS[(n - 1) % len(GENERAL_TOPICS)]
        other = rng.choice(GENERAL_TOPICS)
        body = (f"Provisions on {topic}. Where {topic} applies, the court shall consider {other} and determine "
                f"criminal responsibility in accordance with this law; rule {n} of the general part.")
        rows.append({"article_number": str(n), "body": body, "part": "general"})
    for n in range(102, 453):
        act = SPECIFIC_ACTS[(n - 102) % len(SPECIFIC_ACTS)]
        circ = rng.sample(SPECIFIC_CIRCUMSTANCES, 2)
        body = (f"Whoever commits {act} shall be sentenced to fixed-term imprisonment; where there are "
                f"{circ[0]} or {circ[1]}, the punishment is heavier. Offence {n} of the specific part.")
        rows.append({"article_number": str(n), "body": body, "part": "specific"})
    write_jsonl(ROOT / "statutes452" / "statutes.jsonl", rows)


def zhang_yue():
    d = ROOT / "zhang_yue"
    d.mkdir(parents=True, exist_ok=True)
    (d / "case.txt").write_text(ZHANG_YUE_CASE, encoding="utf-8")
    (d / "script.json").write_text(json.dumps(ZHANG_YUE_SCRIPT, indent=2, ensure_ascii=False) + "\n",
                                   encoding="utf-8")


def main():
    small()
    corpus60()
    statutes452()
    zhang_yue()
    return 0


if __name__ == "__main__":
    sys.exit(main())
