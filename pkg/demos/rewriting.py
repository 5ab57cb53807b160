"""Equality saturation on a tiny arithmetic language, then extraction."""
from fixlog import CheckFailure, Engine

e = Engine()
e.run_program("""
(datatype Math (Num i64) (Var String) (Add Math Math) (Mul Math Math))
(define expr1 (Mul (Num 2) (Add (Var "x") (Num 3))))
(define expr2 (Add (Num 6) (Mul (Num 2) (Var "x"))))
(rewrite (Add a b) (Add b a))
(rewrite (Mul a (Add b c)) (Add (Mul a b) (Mul a c)))
(rewrite (Add (Num a) (Num b)) (Num (+ a b)))
(rewrite (Mul (Num a) (Num b)) (Num (* a b)))
""")

try:
    e.run_program("(check (= expr1 expr2))")
except CheckFailure:
    print("not equal before running")
report = e.run()
print(report)
print("equal now:", e.run_program("(check (= expr1 expr2))")[0].text)

# a constant folded term is the cheapest member of its class
e.run_program("(define seven (Add (Num 3) (Num 4)))")
e.run(2)
print("seven extracts to", e.run_program("(extract seven)")[0].text)
print(e.dump(), end="")
