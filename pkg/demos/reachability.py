"""Reachability two ways: a plain Datalog relation, then a min-merged distance."""
from fixlog import Engine

e = Engine()
e.run_program("""
(relation edge (i64 i64))
(relation path (i64 i64))
(rule ((edge x y)) ((path x y)))
(rule ((path x y) (edge y z)) ((path x z)))
(edge 1 2)
(edge 2 3)
(edge 3 4)
""")

# step by hand to watch the relation grow
while e.step():
    print(f"after iteration {e.iteration}:", sorted(e.db.tables["path"].rows))

# the same graph with lengths; path keeps the shortest by merging with min
d = Engine()
d.run_program("""
(function edge (i64 i64) i64)
(function path (i64 i64) i64 :merge (min old new))
(rule ((= (edge x y) len)) ((set (path x y) len)))
(rule ((= (path x y) xy) (= (edge y z) yz)) ((set (path x z) (+ xy yz))))
(set (edge 1 2) 10)
(set (edge 2 3) 10)
(set (edge 1 3) 30)
""")
print(d.run())
print("shortest 1 -> 3:", d.run_program("(check (path 1 3))")[0].text)
