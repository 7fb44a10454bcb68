import sys

from src.parrondo.cli import build_parser, run


def parse_args(argv=None):
    """Parse command-line flags (one subparser per subcommand)."""
    return build_parser().parse_args(argv)


def main(argv=None):
    """
    Run one subcommand, e.g.

        python main.py exact --n 4 --p 1,0.6,0.6,0 --pattern 1,1
        python main.py classify --n 6 --p 0,1,1,0 --verify
        python main.py convergence --scenario scenarios/slow_convergence.json --n 6:14:2
        python main.py simulate --n 3 --p 1,0.6,0.6,0 --pattern 1,1 --turns 1000000 --seed 42
        python main.py spin --p 0.1,0.6,0.6,0.75 --gamma 0.5 --ring 256 --sweeps 10000 --seed 1
    """
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
