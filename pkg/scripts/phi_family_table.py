"""Tabulate comparison-function hypotheses, f^{-1} values and iterate decay.

    python3 scripts/phi_family_table.py
"""

from phicontract.comparison import (ComparisonFunction, check_hypotheses, f_inverse,
                                    lemma3_crosscheck, phi_iterate)

FAMILIES = ([ComparisonFunction.linear(a / 10) for a in range(0, 10, 2)]
            + [ComparisonFunction.rational(),
               ComparisonFunction.custom("t/(1 + sqrt(t))"),
               ComparisonFunction.custom("t - min(t, 1)"),
               ComparisonFunction.custom("t")])


def main():
    print(f"{'phi':<22} {'hyps':<6} {'viol':<5} {'f^-1(1)':>10} {'phi^100(1)':>12}")
    for cf in FAMILIES:
        hyp = check_hypotheses(cf, 1e-9)
        try:
            inv = f"{f_inverse(cf, 1.0):10.6f}"
        except Exception as exc:
            inv = f"{type(exc).__name__[:10]:>10}"
        print(f"{cf.description:<22} {str(hyp.all_hold):<6} {len(lemma3_crosscheck(hyp)):<5} "
              f"{inv} {phi_iterate(cf, 1.0, 100):12.6g}")


if __name__ == "__main__":
    main()
