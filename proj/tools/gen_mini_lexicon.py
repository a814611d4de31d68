#!/usr/bin/env python3
# Copyright 2026 The gerkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates data/en_arpabet.tsv and data/en_ipa.tsv from CMUdict.

Needs the `cmudict` and `eng_to_ipa` packages:
    pip install cmudict eng_to_ipa
    python3 tools/gen_mini_lexicon.py data/
"""
import os
import sys

import cmudict
import eng_to_ipa

WORDS = """
a about above across after again against all almost also always am an and
another any are around as at away back be because been before being below
between both but by call came can come could day did do does done down each
early end even every few find first for found from get give go good great had
has have he her here high him his how i if in into is it its just keep kind
know last late left less life like line little long look made make man many
may me might more most much must my name never new next no not now number of
off often old on once one only or other our out over own part people place
play point put read right said same saw say see she should show side small so
some something sound still such take tell than that the their them then there
these they thing think this those though three through time to together too
took two under until up upon us use very want was water way we well went were
what when where which while who why will with word work world would write year
you young your
sun son sin sing sung rising rise raise rose rows son's sunny
report reports market markets company revenue revenues income loss losses
quarter annual growth risk risks filing filings share shares stock equity
debt capital cash asset assets net tax taxes fiscal sales cost costs
patient patients doctor hospital treatment disease symptoms blood heart
pain fever infection dose therapy clinical chronic acute severe mild
anemia insulin hemoglobin tachycardia dermatitis nephritis pneumonia
diabetes asthma arthritis hepatitis leukemia lymphoma melanoma sepsis
biopsy fibrosis stenosis thrombosis embolism aneurysm
cat hat bat mat sat rat pat fat
bed bad bid bud
ship sheep chip cheap
pin pen pan
light right night bright
sea see she
meet meat
week weak
""".split()


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "data"
    arpabet = cmudict.dict()
    words = sorted(set(w.lower() for w in WORDS))
    with open(os.path.join(out_dir, "en_arpabet.tsv"), "w", encoding="utf-8") as f:
        for w in words:
            prons = arpabet.get(w)
            if prons:
                f.write(f"{w}\t{' '.join(prons[0])}\n")
    with open(os.path.join(out_dir, "en_ipa.tsv"), "w", encoding="utf-8") as f:
        for w in words:
            ipa = eng_to_ipa.convert(w)
            if ipa and not ipa.endswith("*"):
                f.write(f"{w}\t{ipa}\n")


if __name__ == "__main__":
    main()
