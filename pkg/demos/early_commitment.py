"""Why list comprehensions are learned with a hint.

If the comprehension former and the empty qualifier are searched together
from a single test, the first passing pair ignores the qualifiers: the
test ``[1 | ]`` only needs the head in a singleton list. Every later
qualifier is then invisible, so no rule for generators can pass.
"""

import dataclasses

from desugar_synth.metaterm import meta_to_sexpr
from desugar_synth.solver import solve_extension
from desugar_synth.tasks import load_task_file

early = load_task_file("listcomp_early")
first = solve_extension(early.extension_task(0, early.base_rules))
print("step 1 found:")
for c, m in first.rules.items():
    print(f"  {c} = {meta_to_sexpr(m)}")

rules = {**early.base_rules, **first.rules}
second = solve_extension(dataclasses.replace(early.extension_task(1, rules), timeout=20))
print(f"step 2 (QBind): {second.status} after {second.candidates_tried} candidates")

# with the hint SListComp = (MApp x2 x1) the qualifiers become macros
good = load_task_file("listcomp")
res = solve_extension(good.extension_task(0, good.base_rules))
print("\nwith the hint, step 1 found:")
for c, m in res.rules.items():
    print(f"  {c} = {meta_to_sexpr(m)}")
