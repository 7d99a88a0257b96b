"""
What changed between two versions?
==================================

Every node of a normalized model has a content digest. The sorted set of
digests (a ``.ifchash`` manifest) is enough to tell which nodes appeared
and which disappeared, even when row IDs moved.
"""

from ifcnorm.diffkit import diff_hash_sets, format_manifest
from ifcnorm.hashing import HashOptions
from ifcnorm.pipeline import normalize
from ifcnorm.synthetic import generate_model

v1 = generate_model(60, seed=4)
# the next version drops element E10 and adds a new element N0
v2 = generate_model(60, seed=4, export_seed=1, exclude=["E10"], extra=["N0"])

options = HashOptions()
m1 = normalize(v1.text).manifest(options)
m2 = normalize(v2.text).manifest(options)
print(format_manifest(m1).splitlines()[:3])

added, removed = diff_hash_sets(m1, m2)
print(f"added: {len(added)}, removed: {len(removed)} of {len(m1)} nodes")
print(f"rows written for the removed element: {len(v1.element_rows['E10'])}")
print(f"rows written for the new element:     {len(v2.element_rows['N0'])}")
