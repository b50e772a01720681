"""Decomposing characters into components and picking small reference sets."""
from compfont.scripts import coverage, get_schema, minimal_reference_set

korean = get_schema("korean")
thai = get_schema("thai")

# each syllable is exactly one initial, one medial and one final (possibly empty)
for ch in "한글":
    labels = korean.decompose(ch)
    print(ch, [korean.name(l) for l in labels], [l.component_index for l in labels])
print(korean.compose(korean.decompose("한")))

print(len(list(korean.characters())), "Korean syllables,", len(list(thai.characters())), "Thai clusters")

# a reference set covering every component; the bound is the largest type
ref = minimal_reference_set(korean, list(korean.characters()), seed=0)
print("Korean cover:", len(ref), "".join(ref))
ref = minimal_reference_set(thai, list(thai.characters()), seed=0)
print("Thai cover:", len(ref))

# what is still missing from a handful of hand-picked references
cov = coverage(korean, list("가나다"))
print("covered", len(cov.all_labels()), "missing", len(cov.missing))
