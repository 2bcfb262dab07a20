"""Two rules for the chained comparison ``t1 < t2 < t3``.

The obvious rule binds all three operands to fresh names. A shorter rule
binds only the first two and reads t3 inside the conjunction. They agree
on every program because "and" evaluates its left operand first, and the
shorter rule puts the comparison with t3 on the left.
"""

import random

from desugar_synth.metaterm import desugar_with, meta_size, pretty
from desugar_synth.pidgin import PIDGIN, eval_core, eval_source
from desugar_synth.tasks import load_task_file
from desugar_synth.terms import parse_term

tf = load_task_file("pidgin")
three_lets = tf.known_rules()
two_lets = tf.known_rules(variants=True)

print("three lets, size", meta_size(three_lets["SBetween"]))
print("  ", pretty(three_lets["SBetween"]))
print("two lets, size", meta_size(two_lets["SBetween"]))
print("  ", pretty(two_lets["SBetween"]))


def run(rules, text):
    t = parse_term(text, PIDGIN.source, PIDGIN.source.program_sort)
    core = desugar_with(rules, t)
    return eval_core(core.term).to_sexpr() if core.is_value else core.to_sexpr()


# a counter shows each operand runs once, left to right
probe = ('(SLet a (SNum 0) (SLet r (SBetween (SNum 5) (SAssign a (SPrim "+" [(SVar a) (SNum 1)]))'
         ' (SAssign a (SPrim "+" [(SVar a) (SNum 10)]))) (SVar a)))')
print()
print("source:     ", eval_source(parse_term(probe, PIDGIN.source)).to_sexpr())
print("three lets: ", run(three_lets, probe))
print("two lets:   ", run(two_lets, probe))

# and a few random comparisons, including ill-typed ones
rng = random.Random(3)
atoms = ["(SNum 1)", "(SNum 2)", "(SNum 3)", "(STrue)", '(SStr "a")']
same = 0
for _ in range(200):
    prog = "(SBetween " + " ".join(rng.choice(atoms) for _ in range(3)) + ")"
    same += run(three_lets, prog) == run(two_lets, prog)
print(f"\n{same}/200 random comparisons agree")
