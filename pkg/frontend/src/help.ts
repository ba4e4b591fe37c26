/** Annotator guidance shown in the help drawer. */

export const HELP_HTML = `
<h2>How to review a card</h2>
<p>Each card shows one sentence with its two argument spans highlighted:
the <span class="hl-e1">first entity</span> and the
<span class="hl-e2">second entity</span>. The automatic label the matcher
assigned is preselected. Your job is to confirm it, correct it, or flag the
sentence as broken.</p>

<p><strong>Judge only from the sentence.</strong> Pick a relation when a
reader with no background knowledge would understand, from this sentence
alone, that the relation holds between the two highlighted spans.</p>

<h3>Explicit relations</h3>
<p>The relation is stated outright. "<em>Maren Holt (born 4 May 1921) was a
Norwegian <span class="hl-e2">sculptor</span></em>" clearly supports
<code>occupation</code> for the highlighted pair.</p>

<h3>Implicit relations</h3>
<p>The relation follows from the sentence without being named. A sentence
saying a person <em>was left an orphan</em> when the highlighted elder died
supports <code>ofParent</code> even though "parent" never appears. Use the
relation label when the inference is forced, not merely plausible.</p>

<h3>Unclear relations</h3>
<p>If the sentence is compatible with the relation but does not establish it
("<em>she arranged a marriage for the younger woman</em>" does not make them
parent and child), choose <code>other</code> — even when you happen to know
the relation is true.</p>

<h3>Processing errors</h3>
<p>Flag a card (<kbd>x</kbd>) instead of labelling it when the sentence
itself is damaged: duplicated or garbled names from pronoun replacement,
markup fragments, or truncated text. Flagged cards are removed from the gold
set rather than counted as <code>other</code>.</p>

<h3>Shortcuts</h3>
<p>Digits <kbd>0</kbd>–<kbd>9</kbd> select a label, <kbd>Enter</kbd> confirms
the automatic label, <kbd>x</kbd> flags a processing error.</p>
`;
