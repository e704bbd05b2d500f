"""Bundled bug corpus: seeded single-edit bugs over classic small algorithms plus
one crafted fixture per partial-patch relationship.

Every fixture carries the buggy source, the fixed source, the entry call, the
declared problem, and the ground-truth patch; tests/test_corpus.py checks the
internal consistency of all of it (buggy run shows the symptom, ground truth
applied equals the fixed text, fixed run resolves).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .edits import (
    Edit,
    EditTarget,
    InsertBefore,
    Patch,
    Relationship,
    ReplaceExpr,
    ReplaceStmt,
    WrapIf,
)
from .interp import EntryCall, RuntimeLimits, execute
from .minilang import parse, parse_expression, parse_statements
from .snapshot import (
    AtLineOccurrence,
    AtRaise,
    DebugSnapshot,
    LineShouldNotExecute,
    ProblemSpec,
    StopRule,
    UnexpectedException,
    VariableWrongValue,
    capture,
)

CORPUS_LIMITS = RuntimeLimits(step_budget=1200, max_trace_events=12_000, max_call_depth=128)


@dataclass
class CorpusBug:
    name: str
    category: str  # "single" or a relationship name
    description: str
    buggy_source: str
    fixed_source: str
    entry: EntryCall
    problem: ProblemSpec
    ground_truth: Patch
    stop_rule: StopRule | None = None  # None = stop at the last event
    limits: RuntimeLimits = field(default=CORPUS_LIMITS)

    @property
    def is_single_edit(self) -> bool:
        return self.category == "single"


def line_of(source: str, needle: str, skip: int = 0) -> int:
    """1-based line containing `needle`; `skip` earlier hits are passed over."""
    hits = 0
    for i, text in enumerate(source.splitlines(), 1):
        if needle in text:
            if hits == skip:
                return i
            hits += 1
    raise ValueError(f"{needle!r} not found (skip={skip})")


def _stmt(text: str):
    (only,) = parse_statements(text)
    return only


def replace_stmt(source: str, function: str, needle: str, new_text: str,
                 skip: int = 0) -> Edit:
    return Edit(EditTarget(function, line_of(source, needle, skip)),
                ReplaceStmt(_stmt(new_text)))


def replace_cond(source: str, function: str, needle: str, expr_text: str,
                 skip: int = 0) -> Edit:
    """Header-only repair of an if/while: swap the condition expression."""
    return Edit(EditTarget(function, line_of(source, needle, skip)),
                ReplaceExpr(("cond",), parse_expression(expr_text)))


def replace_bound(source: str, function: str, needle: str, which: str,
                  expr_text: str, skip: int = 0) -> Edit:
    """Header-only repair of a for-range bound ("lo" or "hi")."""
    return Edit(EditTarget(function, line_of(source, needle, skip)),
                ReplaceExpr((which,), parse_expression(expr_text)))


def snapshot_for(bug: CorpusBug) -> DebugSnapshot:
    """Capture the bug's failing run and attach its declared problem."""
    if bug.stop_rule is not None:
        rule = bug.stop_rule
    else:
        trace = execute(parse(bug.buggy_source), bug.entry, bug.limits)
        from .snapshot import AtEvent

        rule = AtEvent(len(trace.events) - 1)
    snap = capture(bug.buggy_source, bug.entry, bug.limits, rule)
    return snap.with_problem(bug.problem)


def _single(name: str, description: str, buggy: str, fixed: str, entry: EntryCall,
            problem: ProblemSpec, ground_truth: Patch,
            stop_rule: StopRule | None = None) -> CorpusBug:
    return CorpusBug(name, "single", description, buggy, fixed, entry, problem,
                     ground_truth, stop_rule)


def _build_single_edit_bugs() -> list[CorpusBug]:
    bugs: list[CorpusBug] = []

    # 1. flipped base-case guard; divides by zero
    buggy = """fn gcd(a, b) {
    if (b != 0) {
        return a;
    }
    return gcd(b, a % b);
}

fn main() {
    assert(gcd(12, 0) == 12);
    assert(gcd(54, 24) == 6);
    print(gcd(12, 0));
}
"""
    fixed = buggy.replace("b != 0", "b == 0")
    bugs.append(_single(
        "gcd_base_flip", "gcd base case tests the wrong way",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("gcd", line_of(buggy, "a % b"), "DivisionByZero"),
        Patch([replace_cond(buggy, "gcd", "if (b != 0)", "b == 0")], "ground-truth"),
        AtRaise(),
    ))

    # 2. recursive call arguments swapped; recursion never shrinks
    buggy = """fn gcd(a, b) {
    if (b == 0) {
        return a;
    }
    return gcd(a % b, b);
}

fn main() {
    assert(gcd(105, 91) == 7);
    assert(gcd(8, 12) == 4);
    print(gcd(105, 91));
}
"""
    fixed = buggy.replace("gcd(a % b, b)", "gcd(b, a % b)")
    bugs.append(_single(
        "gcd_args_swapped", "recursive gcd call keeps the same divisor",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("gcd", line_of(buggy, "return gcd"), "StackOverflow"),
        Patch([replace_stmt(buggy, "gcd", "return gcd", "return gcd(b, a % b);")],
              "ground-truth"),
        AtRaise(),
    ))

    # 3. halving became subtraction
    buggy = """fn bitcount(n) {
    let count = 0;
    while (n != 0) {
        count = count + n % 2;
        n = n - 2;
    }
    return count;
}

fn main() {
    let c = bitcount(10);
    assert(c == 2);
    assert(bitcount(7) == 3);
}
"""
    fixed = buggy.replace("n - 2", "n / 2")
    bugs.append(_single(
        "bitcount_step", "bit counting loop subtracts instead of halving",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_stmt(buggy, "bitcount", "n - 2", "n = n / 2;")], "ground-truth"),
        AtRaise(),
    ))

    # 4. lower bound steps backwards; search never converges
    buggy = """fn search(xs, key) {
    let lo = 0;
    let hi = len(xs);
    while (lo < hi) {
        let mid = (lo + hi) / 2;
        if (xs[mid] < key) {
            lo = mid - 1;
        } else {
            hi = mid;
        }
    }
    return lo;
}

fn main() {
    let xs = [1, 3, 5, 7];
    assert(search(xs, 1) == 0);
    let idx = search(xs, 7);
    print(idx);
    assert(idx == 3);
}
"""
    fixed = buggy.replace("mid - 1", "mid + 1")
    bugs.append(_single(
        "binary_search_step", "binary search moves the low bound the wrong way",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("search", "lo", 1, 3, True),
        Patch([replace_stmt(buggy, "search", "mid - 1", "lo = mid + 1;")], "ground-truth"),
    ))

    # 5. strict comparison drops pivot duplicates
    buggy = """fn sort(xs) {
    if (len(xs) <= 1) {
        return xs;
    }
    let pivot = xs[0];
    let less = [];
    let more = [];
    for i in 1..len(xs) {
        if (xs[i] < pivot) {
            less = less + [xs[i]];
        }
        if (xs[i] > pivot) {
            more = more + [xs[i]];
        }
    }
    return sort(less) + [pivot] + sort(more);
}

fn main() {
    let sorted = sort([3, 1, 3, 2]);
    assert(sorted == [1, 2, 3, 3]);
    assert(sort([2, 1]) == [1, 2]);
}
"""
    fixed = buggy.replace("xs[i] > pivot", "xs[i] >= pivot")
    bugs.append(_single(
        "quicksort_duplicates", "partition loses elements equal to the pivot",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_cond(buggy, "sort", "xs[i] > pivot", "xs[i] >= pivot")],
              "ground-truth"),
        AtRaise(),
    ))

    # 6. best-so-far update comparison inverted
    buggy = """fn max_run(xs) {
    let best = 0;
    let cur = 0;
    for i in 0..len(xs) {
        cur = cur + xs[i];
        if (cur < 0) {
            cur = 0;
        }
        if (cur < best) {
            best = cur;
        }
    }
    return best;
}

fn main() {
    let m = max_run([2, -1, 3]);
    assert(m == 4);
    assert(max_run([5, -9, 6]) == 6);
}
"""
    fixed = buggy.replace("cur < best", "cur > best")
    bugs.append(_single(
        "kadane_update", "running maximum keeps the smaller value",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "m", 0, 4, True),
        Patch([replace_cond(buggy, "max_run", "cur < best", "cur > best")],
              "ground-truth"),
        AtRaise(),
    ))

    # 7. inclusive sum stops one short
    buggy = """fn sum_to(n) {
    let total = 0;
    for i in 1..n {
        total = total + i;
    }
    return total;
}

fn main() {
    let s = sum_to(5);
    print(s);
    assert(sum_to(1) == 1);
}
"""
    fixed = buggy.replace("for i in 1..n {", "for i in 1..n + 1 {")
    bugs.append(_single(
        "sum_to_bound", "inclusive range misses its upper end",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "s", 10, 15, True),
        Patch([replace_bound(buggy, "sum_to", "for i in 1..n {", "hi", "n + 1")],
              "ground-truth"),
    ))

    # 8. wrong base value
    buggy = """fn fact(n) {
    if (n == 0) {
        return 0;
    }
    return n * fact(n - 1);
}

fn main() {
    let f = fact(5);
    assert(f == 120);
    assert(fact(3) == 6);
}
"""
    fixed = buggy.replace("return 0;", "return 1;")
    bugs.append(_single(
        "factorial_base", "factorial base case returns zero",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_stmt(buggy, "fact", "return 0;", "return 1;")], "ground-truth"),
        AtRaise(),
    ))

    # 9. combination operator wrong
    buggy = """fn fib(n) {
    if (n < 2) {
        return n;
    }
    return fib(n - 1) * fib(n - 2);
}

fn main() {
    let f = fib(7);
    assert(f == 13);
    assert(fib(4) == 3);
}
"""
    fixed = buggy.replace("fib(n - 1) * fib(n - 2)", "fib(n - 1) + fib(n - 2)")
    bugs.append(_single(
        "fib_combine", "fibonacci multiplies the two branches",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_stmt(buggy, "fib", "return fib",
                            "return fib(n - 1) + fib(n - 2);")], "ground-truth"),
        AtRaise(),
    ))

    # 10. parity test inverted; declared as line-should-not-execute
    buggy = """fn count_evens(xs) {
    let count = 0;
    for i in 0..len(xs) {
        if (xs[i] % 2 != 0) {
            count = count + 1;
        }
    }
    return count;
}

fn main() {
    let c = count_evens([1, 3, 5]);
    print(c);
}
"""
    fixed = buggy.replace("xs[i] % 2 != 0", "xs[i] % 2 == 0")
    count_line = line_of(buggy, "count = count + 1;")
    bugs.append(_single(
        "count_evens_parity", "odd elements take the even branch",
        buggy, fixed, EntryCall.of("main"),
        LineShouldNotExecute("count_evens", count_line),
        Patch([replace_cond(buggy, "count_evens", "% 2 != 0", "xs[i] % 2 == 0")],
              "ground-truth"),
        AtLineOccurrence("count_evens", count_line, 0),
    ))

    # 11. scan stops before the last element
    buggy = """fn largest(xs) {
    let best = xs[0];
    for i in 1..len(xs) - 1 {
        if (xs[i] > best) {
            best = xs[i];
        }
    }
    return best;
}

fn main() {
    let m = largest([2, 4, 9]);
    assert(m == 9);
    assert(largest([6, 1]) == 6);
}
"""
    fixed = buggy.replace("1..len(xs) - 1", "1..len(xs)")
    bugs.append(_single(
        "largest_bound", "maximum scan skips the final element",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "m", 4, 9, True),
        Patch([replace_bound(buggy, "largest", "for i in", "hi", "len(xs)")],
              "ground-truth"),
        AtRaise(),
    ))

    # 12. reversal starts at the second character
    buggy = """fn reverse(s) {
    let out = "";
    for i in 1..len(s) {
        out = s[i] + out;
    }
    return out;
}

fn main() {
    let r = reverse("abc");
    assert(r == "cba");
    assert(reverse("xy") == "yx");
}
"""
    fixed = buggy.replace("for i in 1..len(s) {", "for i in 0..len(s) {")
    bugs.append(_single(
        "reverse_skip_first", "string reversal drops the first character",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_bound(buggy, "reverse", "for i in", "lo", "0")],
              "ground-truth"),
        AtRaise(),
    ))

    # 13. right cursor walks off the end
    buggy = """fn palindrome(s) {
    let i = 0;
    let j = len(s) - 1;
    while (i < j) {
        if (s[i] != s[j]) {
            return false;
        }
        i = i + 1;
        j = j + 1;
    }
    return true;
}

fn main() {
    assert(palindrome("abba") == true);
    assert(palindrome("abc") == false);
    assert(palindrome("abca") == false);
    print(palindrome("aba"));
}
"""
    fixed = buggy.replace("j = j + 1;", "j = j - 1;")
    bugs.append(_single(
        "palindrome_step", "right index increments instead of decrementing",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("palindrome", line_of(buggy, "s[i] != s[j]"),
                            "IndexOutOfBounds"),
        Patch([replace_stmt(buggy, "palindrome", "j = j + 1;", "j = j - 1;")],
              "ground-truth"),
        AtRaise(),
    ))

    # 14. loop guard points the wrong way; loop never runs
    buggy = """fn sum_digits(n) {
    let total = 0;
    while (n < 0) {
        total = total + n % 10;
        n = n / 10;
    }
    return total;
}

fn main() {
    let d = sum_digits(456);
    assert(d == 15);
    assert(sum_digits(7) == 7);
}
"""
    fixed = buggy.replace("while (n < 0)", "while (n > 0)")
    bugs.append(_single(
        "sum_digits_guard", "digit loop guard inverted",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "d", 0, 15, True),
        Patch([replace_cond(buggy, "sum_digits", "while (n < 0)", "n > 0")],
              "ground-truth"),
        AtRaise(),
    ))

    # 15. exponent grows instead of shrinking
    buggy = """fn power(base, exp) {
    if (exp == 0) {
        return 1;
    }
    return base * power(base, exp + 1);
}

fn main() {
    let p = power(2, 6);
    assert(p == 64);
    assert(power(3, 2) == 9);
}
"""
    fixed = buggy.replace("exp + 1", "exp - 1")
    bugs.append(_single(
        "power_step", "recursive power increments the exponent",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("power", line_of(buggy, "return base"), "StackOverflow"),
        Patch([replace_stmt(buggy, "power", "return base",
                            "return base * power(base, exp - 1);")], "ground-truth"),
        AtRaise(),
    ))

    # 16. copy-paste returns the wrong bound
    buggy = """fn clamp(x, lo, hi) {
    if (x < lo) {
        return lo;
    }
    if (x > hi) {
        return lo;
    }
    return x;
}

fn main() {
    let c = clamp(15, 0, 10);
    assert(c == 10);
    assert(clamp(-5, 0, 10) == 0);
    assert(clamp(7, 0, 10) == 7);
}
"""
    fixed_lines = buggy.splitlines()
    fixed_lines[5] = "        return hi;"
    fixed = "\n".join(fixed_lines) + "\n"
    bugs.append(_single(
        "clamp_copy_paste", "upper clamp returns the lower bound",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "c", 0, 10, True),
        Patch([replace_stmt(buggy, "clamp", "return lo;", "return hi;", skip=1)],
              "ground-truth"),
        AtRaise(),
    ))

    # 17. branch guard flipped; difference comes out negative
    buggy = """fn diff(a, b) {
    if (a < b) {
        return a - b;
    }
    return b - a;
}

fn main() {
    let d = diff(9, 4);
    assert(d == 5);
    assert(diff(4, 9) == 5);
}
"""
    fixed = buggy.replace("a < b", "a > b")
    bugs.append(_single(
        "abs_diff_flip", "absolute difference picks the negative branch",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "d", -5, 5, True),
        Patch([replace_cond(buggy, "diff", "if (a < b)", "a > b")],
              "ground-truth"),
        AtRaise(),
    ))

    # 18. returns the element, not its index
    buggy = """fn find_neg(xs) {
    for i in 0..len(xs) {
        if (xs[i] < 0) {
            return xs[i];
        }
    }
    return -1;
}

fn main() {
    let idx = find_neg([5, -7, 9]);
    assert(idx == 1);
    assert(find_neg([1, 2]) == -1);
}
"""
    fixed = buggy.replace("return xs[i];", "return i;")
    bugs.append(_single(
        "find_neg_value", "search returns the element instead of its index",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "idx", -7, 1, True),
        Patch([replace_stmt(buggy, "find_neg", "return xs[i];", "return i;")],
              "ground-truth"),
        AtRaise(),
    ))

    # 19. average divides by one too few
    buggy = """fn average(xs) {
    let total = 0;
    for i in 0..len(xs) {
        total = total + xs[i];
    }
    return total / (len(xs) - 1);
}

fn main() {
    let a = average([2, 4, 6]);
    print(a);
    assert(average([8]) == 8);
}
"""
    fixed = buggy.replace("total / (len(xs) - 1)", "total / len(xs)")
    bugs.append(_single(
        "average_divisor", "average divides by length minus one",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "a", 6, 4, True),
        Patch([replace_stmt(buggy, "average", "return total /",
                            "return total / len(xs);")], "ground-truth"),
    ))

    # 20. stray negation keeps the odd elements
    buggy = """fn keep_evens(xs) {
    let out = [];
    for i in 0..len(xs) {
        if (!(xs[i] % 2 == 0)) {
            out = out + [xs[i]];
        }
    }
    return out;
}

fn main() {
    let evens = keep_evens([1, 2, 3, 4]);
    assert(evens == [2, 4]);
    assert(keep_evens([5]) == []);
}
"""
    fixed = buggy.replace("!(xs[i] % 2 == 0)", "xs[i] % 2 == 0")
    bugs.append(_single(
        "keep_evens_negation", "filter keeps exactly the wrong elements",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_cond(buggy, "keep_evens", "if (!(", "xs[i] % 2 == 0")],
              "ground-truth"),
        AtRaise(),
    ))

    # 21. dot product squares one vector
    buggy = """fn dot(a, b) {
    let s = 0;
    for i in 0..len(a) {
        s = s + a[i] * a[i];
    }
    return s;
}

fn main() {
    let d = dot([1, 2, 3], [4, 5, 6]);
    assert(d == 32);
    assert(dot([2], [3]) == 6);
}
"""
    fixed = buggy.replace("a[i] * a[i]", "a[i] * b[i]")
    bugs.append(_single(
        "dot_product_operand", "dot product reads the same vector twice",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_stmt(buggy, "dot", "s = s +", "s = s + a[i] * b[i];")],
              "ground-truth"),
        AtRaise(),
    ))

    # 22. the third side is subtracted
    buggy = """fn half_sum(a, b, c) {
    return (a + b - c) / 2;
}

fn main() {
    let p = half_sum(3, 4, 5);
    assert(p == 6);
    assert(half_sum(2, 2, 2) == 3);
}
"""
    fixed = buggy.replace("a + b - c", "a + b + c")
    bugs.append(_single(
        "half_sum_sign", "perimeter halving subtracts one side",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([replace_stmt(buggy, "half_sum", "return (",
                            "return (a + b + c) / 2;")], "ground-truth"),
        AtRaise(),
    ))

    # 23. error branch fires on valid input; declared line-should-not-execute
    buggy = """fn safe_div(a, b) {
    if (b != 0) {
        throw "divide by zero";
    }
    return a / b;
}

fn main() {
    let q = safe_div(10, 5);
    print(q);
    assert(safe_div(9, 3) == 3);
}
"""
    fixed = buggy.replace("b != 0", "b == 0")
    bugs.append(_single(
        "safe_div_guard", "the guard throws for perfectly fine divisors",
        buggy, fixed, EntryCall.of("main"),
        LineShouldNotExecute("safe_div", line_of(buggy, "throw")),
        Patch([replace_cond(buggy, "safe_div", "if (b != 0)", "b == 0")],
              "ground-truth"),
        AtRaise(),
    ))

    return bugs

def _build_relationship_bugs() -> list[CorpusBug]:
    bugs: list[CorpusBug] = []

    # DU: a value must be captured before it is overwritten
    buggy = """fn main() {
    let n = 6;
    let total = n * 2;
    n = n - 4;
    let ratio = total / n;
    print(ratio);
}
"""
    fixed = """fn main() {
    let n = 6;
    let total = n * 2;
    let h0 = n;
    n = n - 4;
    let ratio = total / h0;
    print(ratio);
}
"""
    bugs.append(CorpusBug(
        "du_stale_read", "DU",
        "the ratio must use the original value, captured before the update",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "ratio", 6, 2, True),
        Patch([
            Edit(EditTarget("main", line_of(buggy, "n = n - 4;")),
                 InsertBefore(_stmt("let h0 = n;"))),
            Edit(EditTarget("main", line_of(buggy, "let ratio")),
                 ReplaceStmt(_stmt("let ratio = total / h0;"))),
        ], "ground-truth", Relationship.DU),
    ))

    # OA: guard an unchecked access and correct the limit feeding it
    buggy = """fn main() {
    let limit = 3;
    let xs = [10, 20];
    let total = 0;
    let i = 0;
    while (i < limit) {
        total = total + xs[i];
        i = i + 1;
    }
    print(total);
}
"""
    fixed = """fn main() {
    let limit = 2;
    let xs = [10, 20];
    let total = 0;
    let i = 0;
    while (i < limit) {
        if (i < len(xs)) {
            total = total + xs[i];
        }
        i = i + 1;
    }
    print(total);
}
"""
    bugs.append(CorpusBug(
        "oa_guard_and_limit", "OA",
        "wrap the access in a bounds guard and fix the off-by-one limit",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "total = total +"),
                            "IndexOutOfBounds"),
        Patch([
            Edit(EditTarget("main", line_of(buggy, "total = total +")),
                 WrapIf(parse_expression("i < len(xs)"), 1)),
            Edit(EditTarget("main", line_of(buggy, "let limit = 3;")),
                 ReplaceStmt(_stmt("let limit = 2;"))),
        ], "ground-truth", Relationship.OA),
        AtRaise(),
    ))

    # RIF: twin scan loops share the same wrong comparison
    buggy = """fn main() {
    let xs = [4, 9, 9, 2];
    let best = -1;
    let bestidx = -1;
    let i = 0;
    while (i < len(xs)) {
        if (xs[i] >= best) {
            best = xs[i];
            bestidx = i;
        }
        i = i + 1;
    }
    let ys = [7, 3, 7];
    let top = -1;
    let topidx = -1;
    let j = 0;
    while (j < len(ys)) {
        if (ys[j] >= top) {
            top = ys[j];
            topidx = j;
        }
        j = j + 1;
    }
    let key = bestidx * 10 + topidx;
    print(key);
}
"""
    fixed = buggy.replace("xs[i] >= best", "xs[i] > best").replace(
        "ys[j] >= top", "ys[j] > top")
    bugs.append(CorpusBug(
        "rif_twin_scan", "RIF",
        "both first-maximum scans must use a strict comparison",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "key", 22, 10, True),
        Patch([
            replace_cond(buggy, "main", "xs[i] >= best", "xs[i] > best"),
            replace_cond(buggy, "main", "ys[j] >= top", "ys[j] > top"),
        ], "ground-truth", Relationship.RIF),
    ))

    # DIF: two independent ranges are each one short
    buggy = """fn main() {
    let xs = [1, 2, 3];
    let ys = [10, 20];
    let a = 0;
    for i in 0..len(xs) - 1 {
        a = a + xs[i];
    }
    let b = 0;
    for j in 0..len(ys) - 1 {
        b = b + ys[j];
    }
    assert(a + b == 36);
}
"""
    fixed = buggy.replace("0..len(xs) - 1", "0..len(xs)").replace(
        "0..len(ys) - 1", "0..len(ys)")
    bugs.append(CorpusBug(
        "dif_two_loops", "DIF",
        "two unrelated summations each drop their last element",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([
            replace_bound(buggy, "main", "for i in", "hi", "len(xs)"),
            replace_bound(buggy, "main", "for j in", "hi", "len(ys)"),
        ], "ground-truth", Relationship.DIF),
        AtRaise(),
    ))

    # EOH: semantically one fix, even if a developer patch touched more
    buggy = """fn main() {
    let w = 4;
    let h = 3;
    let area = w * w;
    assert(area == 12);
}
"""
    fixed = buggy.replace("w * w", "w * h")
    bugs.append(CorpusBug(
        "eoh_area", "EOH",
        "only the second factor is semantically wrong",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([Edit(EditTarget("main", line_of(buggy, "let area")),
                    ReplaceStmt(_stmt("let area = w * h;")))], "ground-truth"),
        AtRaise(),
    ))

    # SU: an accumulator is missing its reset before reuse
    buggy = """fn main() {
    let xs = [1, 2, 3];
    let ys = [10, 20];
    let total = 0;
    let i = 0;
    while (i < len(xs)) {
        total = total + xs[i];
        i = i + 1;
    }
    print(total);
    let j = 0;
    while (j < len(ys)) {
        total = total + ys[j];
        j = j + 1;
    }
    assert(total == 30);
}
"""
    fixed = buggy.replace("""    let j = 0;
    while (j < len(ys)) {""", """    let j = 0;
    total = 0;
    while (j < len(ys)) {""")
    bugs.append(CorpusBug(
        "su_missing_reset", "SU",
        "the accumulator must be set up again before the second loop",
        buggy, fixed, EntryCall.of("main"),
        VariableWrongValue("main", "total", 36, 30, True),
        Patch([Edit(EditTarget("main", line_of(buggy, "while (j < len(ys))")),
                    InsertBefore(_stmt("total = 0;")))], "ground-truth"),
        AtRaise(),
    ))

    # ONPF: fixing the sum reveals an independent out-of-bounds loop
    buggy = """fn main() {
    let xs = [4, 8, 15];
    let n = len(xs);
    let i = 1;
    let s = 0;
    while (i < n) {
        s = s + xs[i];
        i = i + 1;
    }
    assert(s == 27);
    let j = 0;
    let p = 1;
    while (j <= len(xs)) {
        p = p * xs[j];
        j = j + 1;
    }
    print(p);
}
"""
    fixed = buggy.replace("let i = 1;", "let i = 0;").replace(
        "j <= len(xs)", "j < len(xs)")
    bugs.append(CorpusBug(
        "onpf_two_stage", "ONPF",
        "repairing the sum start uncovers a second failure in the product loop",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([
            Edit(EditTarget("main", line_of(buggy, "let i = 1;")),
                 ReplaceStmt(_stmt("let i = 0;"))),
            replace_cond(buggy, "main", "while (j <=", "j < len(xs)"),
        ], "ground-truth", Relationship.ONPF),
        AtRaise(),
    ))

    # FU: the primary fix shifts an index that a later read depended on
    buggy = """fn main() {
    let prices = [3, 5, 7, 9];
    let cut = 1;
    let i = cut;
    let s = 0;
    while (i < len(prices)) {
        s = s + prices[i];
        i = i + 1;
    }
    assert(s == 16);
    let top = prices[cut + 2];
    print(top);
}
"""
    fixed = buggy.replace("let cut = 1;", "let cut = 2;").replace(
        "prices[cut + 2]", "prices[cut + 1]")
    bugs.append(CorpusBug(
        "fu_compensate", "FU",
        "after fixing the cut index, the later read must be rebalanced",
        buggy, fixed, EntryCall.of("main"),
        UnexpectedException("main", line_of(buggy, "assert"), "AssertionFailure"),
        Patch([
            Edit(EditTarget("main", line_of(buggy, "let cut = 1;")),
                 ReplaceStmt(_stmt("let cut = 2;"))),
            Edit(EditTarget("main", line_of(buggy, "let top")),
                 ReplaceStmt(_stmt("let top = prices[cut + 1];"))),
        ], "ground-truth", Relationship.FU),
        AtRaise(),
    ))

    return bugs


_ALL: list[CorpusBug] | None = None


def all_bugs() -> list[CorpusBug]:
    global _ALL
    if _ALL is None:
        _ALL = _build_single_edit_bugs() + _build_relationship_bugs()
    return list(_ALL)


def single_edit_bugs() -> list[CorpusBug]:
    return [b for b in all_bugs() if b.is_single_edit]


def relationship_bugs() -> list[CorpusBug]:
    return [b for b in all_bugs() if not b.is_single_edit]


def bug_by_name(name: str) -> CorpusBug:
    for bug in all_bugs():
        if bug.name == name:
            return bug
    raise KeyError(f"no corpus bug named {name!r}")
