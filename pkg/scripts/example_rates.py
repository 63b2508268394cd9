"""Restricted length growth of the oscillating curve against the three-case rate."""

import argparse
from dataclasses import dataclass

from surfent.oscillator import example_rows, restricted_growth, theoretical_rate, write_example_csv


@dataclass
class Config:
    a: str = "1.1,1.2,1.28,1.3,1.5"
    n_max: int = 80
    n_step: int = 2
    out: str = "example_rates.csv"


def main(cfg: Config):
    rows = []
    for a in (float(x) for x in cfg.a.split(",")):
        s = restricted_growth(a, range(cfg.n_step, cfg.n_max + 1, cfg.n_step))
        rows += example_rows(a, s)
        print(f"a={a:<5g} fitted {s.rate:.5f}  theory {theoretical_rate(a):.5f}  "
              f"n<={int(s.n[-1])} {' '.join(s.flags)}")
    write_example_csv(rows, cfg.out)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    for k, v in Config().__dict__.items():
        p.add_argument(f"--{k}", type=type(v), default=v)
    main(Config(**vars(p.parse_args())))
