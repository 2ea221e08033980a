"""From a raw tweet to postings.

Walks one record through tag extraction, contraction expansion,
lemmatization and augmented term frequency.
"""

from datetime import datetime, timezone

from topkbench.corpus import Gender, RawRecord, expand_contractions, extract_tags, preprocess

raw = "Can't sleep, thinking about Friday's exams... #finals @roomie http://t.co/x1"
print("raw text:       ", raw)

hashtags, mentions, rest = extract_tags(raw)
print("hashtags:       ", hashtags)
print("mentions:       ", mentions)
print("without tags:   ", rest)
print("expanded:       ", expand_contractions(rest))

record = RawRecord(
    id=42, raw_text=raw, author_id=7, author_first="Ada", author_last="Byron", age=21,
    gender=Gender.FEMALE, date=datetime(2015, 9, 17, 21, 0, tzinfo=timezone.utc), geo_x=30, geo_y=12,
)
doc = preprocess(record)
print("clean text:     ", doc.clean_text)
print("lemma text:     ", doc.lemma_text)
print("lemma length:   ", doc.lemma_length)
print("postings:")
for e in doc.postings:
    print(f"    {e.term:<10} count={e.count} tf={e.tf:.3f}")

# The most frequent term always gets tf = 1; rarer ones sit between K and 1.
