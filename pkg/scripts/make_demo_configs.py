#!/usr/bin/env python3
"""Write the three reference experiment configs next to each other.

oracle.json  converges and passes every auditor (exit 0)
swap.json    non-monotone operator; edge propagation fails (exit 2)
t1.json      full-step schedule; step-product hypotheses void (exit 3)
"""

import argparse
import json
from pathlib import Path

from graphmann.corpus import negative_swap_config, oracle_1d_config, t_one_config


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default="demo", help="where to write the configs")
    args = parser.parse_args()

    target = Path(args.dir)
    target.mkdir(parents=True, exist_ok=True)
    for name, data in (
        ("oracle.json", oracle_1d_config(str(target / "out_oracle"))),
        ("swap.json", negative_swap_config(str(target / "out_swap"))),
        ("t1.json", t_one_config(str(target / "out_t1"))),
    ):
        (target / name).write_text(json.dumps(data, indent=2) + "\n")
        print(f"wrote {target / name}")
    print(f"try: graphmann run --config {target / 'oracle.json'}")


if __name__ == "__main__":
    main()
