"""sqclp: qualified constraint logic programming with proximity unification.

The pipeline: parse a qualified program, compile the proximity relation away
(eqp/pay clauses), compile the qualification domain away (qVal/qBound guards
over real arithmetic), and run the result on a native resolution engine with
an exact-rational constraint store.
"""

__version__ = "0.1.0"
