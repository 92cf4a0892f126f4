"""The metadata pipeline: dataset files, the SPARQL client, overrides, assembly.

Shows the query sent for a movie title, how a results-XML response is
aggregated, how manual override records beat fetched data, and how the final
profile file is persisted. Uses a canned transport, so no network is touched.

Run:  python demos/04_metadata_pipeline.py
"""

import json
import tempfile
from pathlib import Path

from contentcf import build_sparql_query, fetch_profile, load_profiles, save_profiles
from contentcf.ingest import (
    FetchOutcome,
    assemble_profiles,
    load_overrides,
    parse_movies,
)

workdir = Path(tempfile.mkdtemp(prefix="metadata-demo-"))

# A movies.dat-style file: id :: title :: pipe-separated genres.
movies_path = workdir / "movies.dat"
movies_path.write_text(
    "1::Toy Story (1995)::Animation|Children's|Comedy\n"
    "2::Heat (1995)::Action|Crime|Thriller\n"
    "3::Obscure Short (1998)::Documentary\n",
    encoding="latin-1",
)
movies = parse_movies(movies_path)
print("parsed movies:", {i: title for i, (title, _) in movies.items()})

# The query posted for a title (the trailing year is stripped before lookup).
print("\nquery sent for 'Toy Story':\n")
print(build_sparql_query("Toy Story"))

# A canned endpoint: responds with one row per (director, star) combination
# for Toy Story, an empty result set for everything else.
TOY_STORY_XML = (
    '<?xml version="1.0"?>'
    '<sparql xmlns="http://www.w3.org/2005/sparql-results#"><head/>'
    "<results>"
    '<result><binding name="film_title"><literal xml:lang="en">Toy Story</literal></binding>'
    '<binding name="nameDirector"><literal>John Lasseter</literal></binding>'
    '<binding name="star_name"><literal>Tom Hanks</literal></binding></result>'
    '<result><binding name="film_title"><literal xml:lang="en">Toy Story</literal></binding>'
    '<binding name="nameDirector"><literal>John Lasseter</literal></binding>'
    '<binding name="star_name"><literal>Tim Allen</literal></binding></result>'
    "</results></sparql>"
).encode()
EMPTY_XML = (
    '<?xml version="1.0"?>'
    '<sparql xmlns="http://www.w3.org/2005/sparql-results#"><head/>'
    "<results></results></sparql>"
).encode()


def canned_transport(url, fields, headers):
    body = TOY_STORY_XML if "Toy Story" in fields["query"] else EMPTY_XML
    return 200, body


result = fetch_profile("Toy Story", "http://example.invalid/sparql", canned_transport)
print("aggregated result:", result.director_names, result.star_names)
assert fetch_profile("Heat", "http://example.invalid/sparql", canned_transport) is None

fetched = {
    1: FetchOutcome(1, "Toy Story", "ok",
                    directors=result.director_names, actors=result.star_names),
    2: FetchOutcome(2, "Heat", "not-found"),
}

# A manual override supplies people for the movie the endpoint lacks; actor
# lists are capped at the first seven entries in file order.
overrides_path = workdir / "overrides.jsonl"
overrides_path.write_text(
    json.dumps(
        {
            "item_id": 2,
            "title": "Heat",
            "directors": ["Michael Mann"],
            "actors": [f"Actor {i}" for i in range(1, 10)],  # 9 listed, 7 kept
        }
    )
    + "\n"
)
overrides = load_overrides(overrides_path, known_items=set(movies))
print("\noverride actors kept:", sorted(overrides[0].actors))

# Assembly: genres always from the dataset; people from override, then fetch.
store = assemble_profiles(movies, fetched=fetched, overrides=overrides)
for item_id in sorted(store.profiles):
    p = store.profiles[item_id]
    print(f"  movie {item_id}: source={p.source.value:<11} "
          f"directors={sorted(p.directors)} genres={sorted(p.genres)}")
print("fetch log:", {i: e.status for i, e in sorted(store.fetch_log.items())})

# Persisted as one JSON record per line; reruns are byte-identical.
profile_path = workdir / "profiles.jsonl"
save_profiles(store, profile_path)
print(f"\nwrote {profile_path}:")
print(profile_path.read_text(), end="")
assert load_profiles(profile_path).profiles == store.profiles
