"""Regenerates the bundled mock fixture. Output is committed; rerunning is only
needed after editing this script."""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent

GSM8K = [
    ("g1", "Mia has 12 apples. She gives 3 apples to each of her 3 friends. How many apples does she have left?", "12 - 3*3", "3"),
    ("g2", "A shop sells pens for 2 dollars each. Tom buys 7 pens and pays with a 20 dollar bill. How much change does he get?", "20 - 2*7", "6"),
    ("g3", "A train travels 60 miles per hour. It runs for 4 hours in the morning and 2 hours in the evening. How far does it travel in total?", "60*(4+2)", "360"),
    ("g4", "Sara reads 15 pages a day. Her book has 120 pages. How many days does she need to finish it?", "120/15", "8"),
    ("g5", "A farmer has 5 rows of trees. Each row has 9 trees, and 7 trees are cut down. How many trees remain?", "5*9 - 7", "38"),
]
MATH = [
    ("m1", "Solve for x. The equation is 3x + 5 = 20.", "(20-5)/3", "5", "Algebra"),
    ("m2", "A bag holds 4 red and 6 blue marbles. What is the probability of drawing a red marble?", "4/10", "\\frac{2}{5}", "Counting & Probability"),
    ("m3", "Find the remainder when 100 is divided by 7. Give a whole number.", "100 - 7*14", "2", "Number Theory"),
    ("m4", "A right triangle has legs 6 and 8. What is the length of its hypotenuse?", "(6^2+8^2)^0.5", "10", "Geometry"),
    ("m5", "Compute the sum of the first 10 positive integers. Show the result.", "10*11/2", "55", "Prealgebra"),
]
HOTPOT = [
    ("h1", "Which river flows through the capital of Austria? The capital is a large city.", "Danube", "bridge", [["Vienna", 0], ["Danube", 0]],
     [["Vienna", ["Vienna is the capital of Austria.", " The Danube flows through it."]], ["Danube", ["The Danube is a river in Europe."]]]),
    ("h2", "Who was born first, Ada Lovelace or Charles Babbage? Both worked on early computing.", "Charles Babbage", "comparison", [["Ada Lovelace", 0], ["Charles Babbage", 0], ["Ada Lovelace", 1]],
     [["Ada Lovelace", ["Ada Lovelace was born in 1815.", " She wrote about the Analytical Engine."]], ["Charles Babbage", ["Charles Babbage was born in 1791."]]]),
    ("h3", "Which country is the author of Don Quixote from? The novel was published in two parts.", "Spain", "bridge", [["Don Quixote", 0], ["Miguel de Cervantes", 0]],
     [["Don Quixote", ["Don Quixote was written by Miguel de Cervantes."]], ["Miguel de Cervantes", ["Miguel de Cervantes was a Spanish writer."]]]),
    ("h4", "Which mountain is taller, Mount Everest or K2? Both are in Asia.", "Mount Everest", "comparison", [["Mount Everest", 0], ["K2", 0], ["K2", 1]],
     [["Mount Everest", ["Mount Everest is 8849 metres tall."]], ["K2", ["K2 is 8611 metres tall.", " It lies on the border of Pakistan and China."]]]),
    ("h5", "What instrument did the composer of the Moonlight Sonata play? He lived in Vienna.", "piano", "bridge", [["Moonlight Sonata", 0], ["Ludwig van Beethoven", 0]],
     [["Moonlight Sonata", ["The Moonlight Sonata was composed by Ludwig van Beethoven."]], ["Ludwig van Beethoven", ["Beethoven was a pianist and composer."]]]),
]

PARAPHRASES = {
    "g1": "Mia starts out with 12 apples and hands 3 apples to every one of her 3 friends. How many apples remain with her?",
    "g2": "Pens cost 2 dollars apiece at a shop. If Tom purchases 7 pens using a 20 dollar bill, what change should he receive?",
    "g3": "Moving at 60 miles per hour, a train runs 4 hours in the morning and another 2 hours in the evening. What total distance does it cover?",
    "g4": "Each day Sara gets through 15 pages. Her book is 120 pages long. In how many days will she complete it?",
    "g5": "There are 5 rows of trees on a farm with 9 trees per row. After 7 trees are felled, how many trees are still standing?",
    "m1": "What value of x satisfies 3x + 5 = 20? Solve the equation.",
    "m2": "There are 4 red marbles and 6 blue marbles in a bag. If one marble is drawn, what is the chance it is red?",
    "m3": "When 100 is divided by 7, what remainder is left? Answer with a whole number.",
    "m4": "The two legs of a right triangle measure 6 and 8. How long is the hypotenuse?",
    "m5": "Add up the positive integers from 1 through 10. What is the total?",
    "h1": "The capital of Austria is a large city. Which river runs through it?",
    "h2": "Ada Lovelace and Charles Babbage both worked on early computing. Which of them was born earlier?",
    "h3": "Don Quixote was published in two parts. The author of this novel came from which country?",
    "h4": "Mount Everest and K2 are both in Asia. Which of the two is higher?",
    "h5": "The composer of the Moonlight Sonata lived in Vienna. Which instrument did he play?",
}

# Per-model probability that an operator changes the answer.
MODELS = {
    "alpha": {"family": "north", "correct": 0.95, "sem": 0.45, "sur": 0.10},
    "beta": {"family": "south", "correct": 0.75, "sem": 0.35, "sur": 0.15},
    "gamma": {"family": "south", "correct": 0.35, "sem": 0.30, "sur": 0.30},
}
OPS = ["paraphrase", "synonym", "reorder", "format", "distractor"]
SEM = {"paraphrase", "synonym"}


def wrong(ans):
    try:
        return str(int(ans) + 1)
    except ValueError:
        return "unknown"


def rounds(thoughts, actions, answer):
    t1, t2, t3 = thoughts
    a1, a2 = actions
    cot = (f"Thought: {t1}\nAction: {a1}\nThought: {t2}\nThought: {t3}\nAnswer: {answer}")
    return [cot, f"Thought: {t2}\nAction: {a2}", f"Thought: {t3}\nAction: finish[{answer}]"]


def main():
    rng = random.Random(20240607)
    (HERE / "gsm8k.jsonl").write_text("".join(
        json.dumps({"id": i, "question": q, "answer": f"{e} = {a}\n#### {a}"}) + "\n" for i, q, e, a in GSM8K))
    (HERE / "math.jsonl").write_text("".join(
        json.dumps({"id": i, "problem": q, "solution": f"We compute {e}, so the answer is $\\boxed{{{a}}}$.", "type": s, "level": "Level 2"}) + "\n"
        for i, q, e, a, s in MATH))
    (HERE / "hotpotqa.jsonl").write_text("".join(
        json.dumps({"_id": i, "question": q, "answer": a, "type": t, "level": "easy", "supporting_facts": sf, "context": ctx}) + "\n"
        for i, q, a, t, sf, ctx in HOTPOT))
    (HERE / "paraphraser.json").write_text(json.dumps(
        {"outputs": {f"{k}::paraphrase": v for k, v in sorted(PARAPHRASES.items())}}, indent=1, sort_keys=True) + "\n")

    items = [(i, e, a) for i, _, e, a in GSM8K] + [(i, e, a) for i, _, e, a, _ in MATH]
    items += [(i, f"lookup[{sf[0][0]}]", a) for i, _, a, _, sf, _ in HOTPOT]
    outputs = {}
    for model, p in MODELS.items():
        for qid, expr, gold in items:
            tool = expr if expr.startswith("lookup[") else f"calculate[{expr}]"
            base = gold if rng.random() < p["correct"] else wrong(gold)
            orig_thoughts = (f"I start by reading the facts given in {qid} carefully.",
                             "Next I combine the quantities that the question mentions.",
                             "Finally I check that the result answers what was asked.")
            outputs[f"{model}|{qid}"] = rounds(orig_thoughts, (tool, "calculate[1+1]"), base)
            for op in OPS:
                if rng.random() >= (p["sem"] if op in SEM else p["sur"]):
                    continue
                if op in SEM:
                    thoughts = (orig_thoughts[0],
                                "The wording suggests a different relation between the amounts.",
                                "So I adjust the computation to follow that reading instead.")
                else:
                    thoughts = ("The layout of this question distracts me at the start.",
                                orig_thoughts[1], orig_thoughts[2])
                outputs[f"{model}|{qid}::{op}"] = rounds(thoughts, (tool, "calculate[2+2]"), wrong(base))
    outputs["default"] = ["Thought: I cannot tell.\nAction: finish[]"]
    (HERE / "agents.json").write_text(json.dumps({"outputs": outputs}, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
