"""Seeded synthetic social-network datasets with planted clone/victim pairs."""

from __future__ import annotations

import datetime as dt
from functools import lru_cache
from importlib import resources

import numpy as np

from .dataset import AccountProfile, Dataset

REFERENCE_DATE = dt.date(2022, 1, 1)

TOPICS = {
    "tech": "software developer cloud python data startup code engineer open source api devops machine learning linux security mobile apps web backend frontend",
    "sports": "football soccer basketball fan team season coach league training marathon running gym fitness match goal stadium champion playoffs",
    "music": "music guitar band songs album concert singer producer studio vinyl jazz rock hiphop festival piano drummer tour playlist",
    "food": "food chef recipes cooking baking coffee restaurant vegan kitchen foodie wine dinner brunch pastry spices tasting street",
    "travel": "travel explorer wanderlust adventure photography mountains beaches backpacking flights hiking nomad passport roadtrip camping islands culture",
    "politics": "politics policy news debate government elections democracy journalist reporter opinion rights justice reform campaign voter analysis",
    "science": "science research physics biology chemistry lab phd climate space astronomy experiments discovery professor university genetics neuroscience",
    "art": "art artist painting illustration design gallery sketch creative studio museum sculpture portraits watercolor digital comics animation",
    "business": "business entrepreneur marketing sales finance investor founder ceo leadership growth strategy consulting brand ecommerce economy",
    "gaming": "gaming gamer esports streamer console twitch rpg shooter speedrun retro indie nintendo playstation xbox controller",
    "health": "health wellness nurse doctor medicine yoga mindfulness nutrition therapy mental care hospital patients meditation sleep",
    "education": "teacher education school students learning classroom books reading literacy tutor campus lecture curriculum library kids",
    "fashion": "fashion style model beauty makeup outfit designer boutique runway trends skincare vintage streetwear jewelry shoes",
    "family": "family mom dad parent kids husband wife love home dog cat garden weekend faith blessed grateful",
    "film": "film movies cinema director actor screenwriter series netflix drama horror documentary festival critic scenes trailer",
    "nature": "nature wildlife birds forest conservation ocean environment plants gardening sustainability earth trees rivers animals parks",
}

COMMON_WORDS = "the a and of to in for my with on life love new day time world people best good great always".split()

LOCATIONS = (
    "New York, NY", "Los Angeles, CA", "Chicago, IL", "Houston, TX", "Phoenix, AZ", "Philadelphia, PA",
    "San Antonio, TX", "San Diego, CA", "Dallas, TX", "Austin, TX", "Seattle, WA", "Denver, CO", "Boston, MA",
    "Nashville, TN", "Portland, OR", "Atlanta, GA", "Miami, FL", "Detroit, MI", "Minneapolis, MN", "London, UK",
    "Manchester, UK", "Dublin, Ireland", "Toronto, Canada", "Vancouver, Canada", "Sydney, Australia",
    "Melbourne, Australia", "Auckland, New Zealand", "Berlin, Germany", "Paris, France", "Madrid, Spain",
    "Lagos, Nigeria", "Nairobi, Kenya", "Mumbai, India", "Singapore", "Tokyo, Japan", "Cape Town, South Africa",
)


@lru_cache(maxsize=None)
def _names(kind: str) -> tuple:
    text = resources.files("clonedetect.data").joinpath(f"{kind}_names.txt").read_text("utf-8")
    return tuple(w for w in text.split() if w)


def _topic_words():
    return {k: v.split() for k, v in TOPICS.items()}


def _sentence(rng, topics, words, length):
    out = []
    for _ in range(length):
        if rng.random() < 0.25:
            out.append(COMMON_WORDS[rng.integers(len(COMMON_WORDS))])
        else:
            vocab = words[topics[rng.integers(len(topics))]]
            out.append(vocab[rng.integers(len(vocab))])
    return " ".join(out)


def _heavy(rng, mu, sigma):
    return int(rng.lognormal(mu, sigma))


def _make_identity(rng):
    first = _names("first")
    last = _names("last")
    f = first[rng.integers(len(first))]
    l = last[rng.integers(len(last))]
    style = rng.integers(5)
    if style == 0:
        user = f + l
    elif style == 1:
        user = f + "_" + l
    elif style == 2:
        user = f[0] + l
    elif style == 3:
        user = l + f[:3]
    else:
        user = f + "." + l[0]
    if rng.random() < 0.6:
        user += str(rng.integers(1, 10 ** int(rng.integers(1, 5))))
    screen = f.capitalize() + " " + l.capitalize()
    if rng.random() < 0.2:
        screen = f.capitalize() + " " + chr(ord("A") + int(rng.integers(26))) + ". " + l.capitalize()
    return user, screen


def _legit_account(rng, ident, words, topic_names):
    user, screen = _make_identity(rng)
    topics = list(rng.choice(topic_names, size=int(rng.integers(1, 3)), replace=False))
    desc = _sentence(rng, topics, words, int(rng.integers(6, 16))) if rng.random() < 0.85 else ""
    days = int(rng.integers(90, 365 * 13))
    return AccountProfile(
        id=ident,
        username=user,
        screen_name=screen,
        registered_on=REFERENCE_DATE - dt.timedelta(days=days),
        location=LOCATIONS[rng.integers(len(LOCATIONS))] if rng.random() < 0.75 else "",
        description=desc,
        followers_count=_heavy(rng, 5.0, 1.6),
        friends_count=_heavy(rng, 5.0, 1.1),
        tweet_count=_heavy(rng, 6.5, 1.5),
        favorites_count=_heavy(rng, 6.0, 1.8),
        list_count=_heavy(rng, 1.0, 1.2),
        has_profile_background=bool(rng.random() < 0.6),
        uses_default_profile_image=bool(rng.random() < 0.1),
        has_url=bool(rng.random() < 0.4),
        posts=[_sentence(rng, topics, words, int(rng.integers(6, 18))) for _ in range(int(rng.integers(2, 9)))],
    ), topics


def _edit(rng, s: str, digits_only_insert=False) -> str:
    """Apply one random edit: insert a digit, swap two neighbors or delete one."""
    op = rng.integers(3)
    if len(s) < 3:
        op = 0
    if op == 0:
        pos = int(rng.integers(len(s) + 1))
        return s[:pos] + str(int(rng.integers(10))) + s[pos:]
    pos = int(rng.integers(1, len(s) - 1))
    if op == 1:
        return s[:pos] + s[pos + 1] + s[pos] + s[pos + 2:]
    return s[:pos] + s[pos + 1:]


def _clone_name(rng, s: str) -> str:
    for _ in range(int(rng.integers(1, 3))):
        s = _edit(rng, s)
    return s


def _clone_account(rng, ident, victim: AccountProfile, topics, words):
    desc_words = victim.description.split()
    kept = [w for w in desc_words if rng.random() >= 0.2]
    days = int(rng.integers(5, 365))
    posts = [_sentence(rng, topics, words, int(rng.integers(6, 18))) for _ in range(int(rng.integers(0, 4)))]
    return AccountProfile(
        id=ident,
        username=_clone_name(rng, victim.username),
        screen_name=_clone_name(rng, victim.screen_name),
        registered_on=REFERENCE_DATE - dt.timedelta(days=days),
        location=victim.location,
        description=" ".join(kept),
        followers_count=int(rng.poisson(4)),
        friends_count=int(rng.poisson(25)),
        tweet_count=int(rng.poisson(3)),
        favorites_count=int(rng.poisson(2)),
        list_count=0,
        has_profile_background=bool(rng.random() < 0.2),
        uses_default_profile_image=bool(rng.random() < 0.3),
        has_url=victim.has_url and bool(rng.random() < 0.5),
        posts=posts,
    )


def preferential_attachment(rng, n: int, m: int) -> list:
    """Undirected edges of a Barabasi-Albert style graph over nodes 0..n-1."""
    if n <= m:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = set()
    targets = list(range(m))
    repeated: list = []
    for v in range(m, n):
        chosen = set()
        for t in targets:
            chosen.add(t)
        for t in chosen:
            edges.add((t, v))
        repeated.extend(chosen)
        repeated.extend([v] * len(chosen))
        picks = set()
        while len(picks) < m:
            picks.add(repeated[int(rng.integers(len(repeated)))])
        targets = sorted(picks)
    return sorted(edges)


def generate_synthetic(n_legit: int, n_clone_pairs: int, n_noise: int, seed: int = 0) -> Dataset:
    """Legitimate, noise and clone accounts with follower/friend networks.

    Each clone imitates one legitimate victim; ``labels`` holds the
    (victim, clone) id pairs.
    """
    if n_legit < 1 or n_clone_pairs < 0 or n_noise < 0:
        raise ValueError("invalid dataset sizes")
    if n_clone_pairs > n_legit:
        raise ValueError("n_clone_pairs must not exceed n_legit")
    rng = np.random.default_rng(seed)
    words = _topic_words()
    topic_names = sorted(words)
    total = n_legit + n_noise + n_clone_pairs
    width = max(5, len(str(total)))
    ids = [f"u{i:0{width}d}" for i in rng.permutation(total)]

    organic = []
    topics_of = []
    for i in range(n_legit + n_noise):
        acc, topics = _legit_account(rng, ids[i], words, topic_names)
        organic.append(acc)
        topics_of.append(topics)

    edges = []
    n_org = len(organic)
    adjacency = {kind: {} for kind in ("follower", "friend")}
    for kind, m in (("follower", 2), ("friend", 3)):
        order = rng.permutation(n_org)
        for a, b in preferential_attachment(rng, n_org, m):
            x, y = organic[order[a]].id, organic[order[b]].id
            edges.append((x, y, kind))
            adjacency[kind].setdefault(x, []).append(y)
            adjacency[kind].setdefault(y, []).append(x)

    victims = sorted(rng.choice(n_legit, size=n_clone_pairs, replace=False).tolist())
    clones = []
    labels = set()
    for k, v in enumerate(victims):
        victim = organic[v]
        clone = _clone_account(rng, ids[n_org + k], victim, topics_of[v], words)
        clones.append(clone)
        labels.add((victim.id, clone.id))
        for kind in ("follower", "friend"):
            nbrs = sorted(adjacency[kind].get(victim.id, []))
            shared = int(len(nbrs) * 0.1 - 1e-9) if len(nbrs) >= 10 else 0
            for y in rng.choice(nbrs, size=shared, replace=False) if shared else []:
                edges.append((clone.id, str(y), kind))
            for _ in range(int(rng.integers(1, 4))):
                other = organic[int(rng.integers(n_org))].id
                if other != victim.id and other not in nbrs:
                    edges.append((clone.id, other, kind))

    accounts = organic + clones
    accounts.sort(key=lambda a: a.id)
    manifest = {
        "generator": "synthetic",
        "seed": int(seed),
        "n_legit": int(n_legit),
        "n_clone_pairs": int(n_clone_pairs),
        "n_noise": int(n_noise),
        "reference_date": REFERENCE_DATE.isoformat(),
    }
    return Dataset(accounts, edges, labels, REFERENCE_DATE, manifest)
