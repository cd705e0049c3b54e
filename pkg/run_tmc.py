"""
Transportation with Market Choice toolkit

Entry point for the command line:
    python run_tmc.py generate --kind tmc --m 3 --n 3 --seed 7 --out output/t.json
    python run_tmc.py reduce output/t.json --mode metric --out output/t_cfl.json
    python run_tmc.py solve output/t_cfl.json --solver local-search --out output/t_cfl_sol.json
    python run_tmc.py translate --certificate output/t_cfl.cert.json --reduced output/t_cfl.json output/t_cfl_sol.json
    python run_tmc.py bench configs/metric_tmc_small.json
"""

import sys

from marketchoice.cli import main

if __name__ == "__main__":
    sys.exit(main())
