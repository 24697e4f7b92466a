"""Random valuations that respect symbol domains and sign profiles."""
import random
from fractions import Fraction

from hybridhoare.logic import Cel, Dur, Eta, Pi
from hybridhoare.solve import complete_celerities


def random_fraction(rng, lo, hi, grid=1 << 12):
    return lo + (hi - lo) * Fraction(rng.randint(0, grid), grid)


def random_valuation(rng: random.Random, syms, grn, eta=None) -> dict:
    """Values for ``syms``: pi in [0,1] (borders half the time), T > 0,
    celerities from an admissible profile, levels from ``eta`` or at random."""
    env = complete_celerities(grn, {}, rng)
    for s in syms:
        if isinstance(s, Pi):
            env[s] = Fraction(rng.randint(0, 1)) if rng.random() < 0.3 else random_fraction(rng, 0, 1)
        elif isinstance(s, Dur):
            env[s] = random_fraction(rng, Fraction(1, 1 << 12), 4)
        elif isinstance(s, Eta):
            env[s] = eta[s.var] if eta else rng.randint(0, grn.bound(s.var))
        elif not isinstance(s, Cel):
            raise TypeError(s)
    if eta:
        env.update({Eta(v): n for v, n in eta.items()})
    return env
