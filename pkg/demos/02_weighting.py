"""How TF-IDF and Okapi BM25 react to term frequency and document length."""

from topkbench.weighting import Scheme, SchemeParams, idf, okapi, tf, tfidf

bm25 = SchemeParams(Scheme.OKAPI)

print("augmented tf for counts 1..4 of a document whose top term occurs 4 times:")
print("   ", [round(tf(c, 4), 3) for c in range(1, 5)])

print("\nidf in a corpus of 1000 documents:")
for n in (1, 10, 100, 1000):
    print(f"    term in {n:>4} docs -> idf {idf(1000, n):.4f}")

print("\nsame posting, growing document (avg length 10):")
print("    doc_len   tfidf    okapi")
for dl in (2, 5, 10, 20, 40):
    print(f"    {dl:>7}   {tfidf(1, 2, 1000, 10):.4f}   {okapi(1, 2, 1000, 10, dl, 10, bm25):.4f}")

# At tf = 1 and an average-length document the two schemes coincide.
print("\nidentity check:", okapi(3, 3, 50, 5, 12, 12, bm25), "==", tfidf(3, 3, 50, 5))
