from .par_utils import ParUtils
from .seeding import item_seed, item_rng
