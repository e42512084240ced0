"""Attitude inference for identified term entities.

A sentence is tagged with Penn-style parts of speech, chunked into a shallow
phrase-structure tree, and each entity collects the powerful tokens (verbs,
modals, adverbs, prepositions) that sit inside it or dominate it. Lexicon
hits on those tokens decide CAN, CANNOT or MUST.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

from licscan.preprocess import Sentence, Token, normalize_tokens, split_sentences
from licscan.term_id import SequenceModel, TermEntity, decode_entities, tag
from licscan.terms import NUM_TERMS, Attitude

if TYPE_CHECKING:
    from licscan.extraction import LicenseInstance

log = logging.getLogger(__name__)

VERB_TAGS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})
PT_TAGS = VERB_TAGS | {"MD", "IN", "RB", "RBR", "RBS"}
NP_TAGS = frozenset({"PDT", "DT", "JJ", "JJR", "JJS", "NN", "NNS", "NNP", "PRP", "PRP$", "CD", "POS"})

WORD_TAGS = frozenset(
    {"CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS", "PDT",
     "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP",
     "VBZ", "WDT", "WP", "WP$", "WRB", ",", ".", ":", "``", "''", "-LRB-", "-RRB-", "#", "$"}
)
PHRASE_TAGS = frozenset({"ROOT", "S", "SBAR", "NP", "VP", "PP", "ADJP", "ADVP", "WHNP", "PRN"})


class AttitudeError(Exception):
    pass


class TagAlphabetViolation(AttitudeError, ValueError):
    pass


class SpanOutOfRange(AttitudeError, IndexError):
    pass


# ------------------------------------------------------------------ POS tagging

_MD = {"can", "could", "may", "might", "must", "shall", "should", "will", "would", "ca", "wo"}
_DT = {"the", "a", "an", "this", "these", "those", "each", "every", "some", "any", "another", "either",
       "all", "both", "such", "whatever", "whichever"}
_PDT_BEFORE_DT = {"all", "both", "such", "half"}
_PRP = {"you", "he", "she", "it", "we", "they", "i", "me", "him", "her", "us", "them", "yourself",
        "itself", "themselves", "ourselves", "yourselves", "himself", "herself", "one", "anyone",
        "everyone", "someone", "anybody", "nobody"}
_PRPS = {"your", "his", "its", "our", "their", "my"}
_WDT = {"which", "whichever"}
_WP = {"who", "whom", "what", "whoever", "whomever"}
_WRB = {"when", "where", "how", "why", "whenever", "wherever"}
_CC = {"and", "or", "but", "&", "plus"}
_NEGATION = {"not", "n't", "never", "no", "neither", "nothing"}
_RB = _NEGATION | {
    "also", "hereby", "herein", "hereunder", "thereof", "therein", "thereto", "therefore", "however",
    "only", "solely", "further", "furthermore", "thereby", "otherwise", "then", "here", "there", "so",
    "too", "very", "well", "already", "always", "anywhere", "still", "yet", "else", "even", "just",
    "now", "likewise", "moreover", "instead", "together", "again", "ever", "perhaps", "away",
    "long", "hence", "thus", "forth", "alone", "below", "above", "overleaf", "elsewhere", "nevertheless",
}
_IN = {
    "of", "in", "on", "at", "by", "for", "with", "without", "from", "into", "onto", "under", "over",
    "about", "after", "before", "through", "throughout", "within", "upon", "against", "among", "between",
    "during", "except", "like", "per", "via", "regardless", "notwithstanding", "if", "unless", "whether",
    "because", "although", "though", "while", "since", "than", "as", "toward", "towards", "beyond",
    "outside", "inside", "until", "till", "despite", "whereas", "across", "along", "around", "behind",
    "beneath", "besides", "off", "out", "up", "down", "unto", "whereby", "wherein", "thereunder",
}
_AUX = {
    "be": "VB", "is": "VBZ", "are": "VBP", "am": "VBP", "was": "VBD", "were": "VBD", "been": "VBN",
    "being": "VBG", "have": "VB", "has": "VBZ", "had": "VBD", "having": "VBG", "do": "VB", "does": "VBZ",
    "did": "VBD", "done": "VBN", "doing": "VBG",
}
_AUX_STEMS = {"be", "is", "are", "am", "was", "were", "been", "being", "have", "has", "had", "having",
              "do", "does", "did"}
_IRREGULAR_PARTICIPLES = {
    "made", "given", "held", "sold", "kept", "built", "bound", "brought", "taken", "written", "shown",
    "known", "set", "put", "read", "granted", "got", "gotten", "paid", "laid", "sent", "spent", "found",
    "left", "lost", "meant", "told", "understood", "chosen", "arisen", "borne", "drawn", "driven",
    "forgotten", "seen", "run", "withdrawn", "undertaken", "forbidden", "met", "dealt", "sought",
}
_VERBS = {
    "use", "copy", "modify", "merge", "publish", "distribute", "redistribute", "sublicense", "sell",
    "license", "relicense", "grant", "permit", "include", "retain", "reproduce", "make", "give", "provide",
    "agree", "accept", "apply", "comply", "state", "change", "display", "perform", "run", "execute",
    "link", "compile", "convey", "propagate", "transfer", "assign", "remove", "delete", "alter", "endorse",
    "promote", "refuse", "decline", "disallow", "prohibit", "require", "ensure", "ask", "contact",
    "notify", "email", "e-mail", "pay", "charge", "compensate", "indemnify", "defend", "hold", "waive",
    "disclaim", "limit", "exclude", "terminate", "receive", "obtain", "accompany", "contain", "derive",
    "allow", "rename", "offer", "advertise", "acknowledge", "credit", "attribute", "cite", "mention",
    "misrepresent", "represent", "install", "reinstall", "deal", "claim", "infringe", "incorporate",
    "combine", "translate", "adapt", "create", "prepare", "keep", "maintain", "place", "put", "add",
    "describe", "identify", "document", "mark", "label", "inform", "send", "release", "share", "impose",
    "restrict", "enforce", "sue", "protect", "warrant", "bear", "assume", "cause", "arise", "result",
    "follow", "meet", "satisfy", "submit", "contribute", "sign", "read", "write", "need", "want", "wish",
    "choose", "elect", "register", "get", "let", "see", "take", "bring", "tell", "mean", "become",
    "develop", "host", "lease", "lend", "rent", "export", "import", "reverse", "engineer", "decompile",
    "disassemble", "embed", "bundle", "package", "ship", "supply", "demonstrate", "print", "post",
    "transmit", "broadcast", "exercise", "practice", "implement", "reference", "rely", "fix", "patch",
    "correct", "update", "upgrade", "extend", "reuse", "fork", "port", "build", "sublicence", "licence",
    "void", "release", "indicate", "preserve", "alert", "notice", "note", "acquire", "deliver", "host",
    "own", "return", "stop", "cease", "continue", "try", "attempt", "intend", "refer", "certify",
    "verify", "consent", "authorize", "authorise", "approve", "object", "violate", "breach", "lose",
    "remain", "survive", "govern", "construe", "interpret", "benefit", "harm", "damage", "hurt",
    "rename", "call", "name", "refrain", "seek", "cover", "affect", "exploit", "market", "operate",
    "download", "upload", "access", "view", "store", "process", "retain", "fail", "cure", "pay",
}
_NOUN_ONLY = {"thing", "string", "king", "ring", "spring", "wing", "family", "assembly", "july", "rally"}
_JJ = {
    "free", "original", "same", "other", "prior", "specific", "following", "full", "entire",
    "commercial", "binary", "public", "private", "applicable", "available", "reasonable", "liable",
    "responsible", "direct", "indirect", "incidental", "special", "exemplary", "consequential", "express",
    "implied", "fit", "particular", "merchantable", "separate", "new", "own", "sole", "whole",
    "significant", "prominent", "electronic", "legal", "valid", "invalid", "null", "certain", "necessary",
    "subject", "able", "unable", "personal", "exclusive", "perpetual", "irrevocable", "additional",
    "third", "first", "second", "larger", "complete", "accurate", "true", "clear", "obvious", "explicit",
    "appropriate", "conspicuous", "useful", "good", "bad", "modified", "unmodified", "derivative",
    "worldwide", "non", "royalty", "several", "many", "more", "most", "less", "least", "few", "fewer",
    "various", "relevant", "corresponding", "such", "present", "former", "latter", "final", "general",
    "open", "proprietary", "similar", "identical", "different", "due", "old", "later", "earlier",
    "high", "low", "whole", "online", "offline", "real", "legible", "readable", "human", "mere", "live",
    "above", "aforementioned", "foregoing", "hereinafter", "instead", "alternative", "main", "primary",
    "compatible", "incompatible", "unlimited", "limited", "sufficient", "fair", "explicitly", "nonexclusive",
}
_PUNCT = {",": ",", ".": ".", "!": ".", "?": ".", ";": ":", ":": ":", "-": ":", "(": "-LRB-",
          "[": "-LRB-", "{": "-LRB-", ")": "-RRB-", "]": "-RRB-", "}": "-RRB-", '"': "''", "'": "''",
          "`": "``", "$": "$", "#": "#"}
_JJ_SUFFIXES = ("able", "ible", "ous", "ful", "ive", "less", "ical", "ant")
_NEGATIVE_PRONOUNS = {"nothing", "none", "nobody", "neither"}
_SUBJECT_TAGS = {"PRP", "WDT", "WP", "NN", "NNS"}
_NOMINAL_CONTEXT = {"DT", "JJ", "IN", "PRP$", "POS", "CD", "PDT"}


def _verb_base(word: str) -> str | None:
    """Known base verb behind an inflected form, if any."""
    if word in _VERBS:
        return word
    for suffix, repl in (("ies", "y"), ("es", ""), ("s", ""), ("ied", "y"), ("ed", ""), ("ed", "e"),
                         ("d", ""), ("ing", ""), ("ing", "e")):
        if word.endswith(suffix) and len(word) - len(suffix) >= 2:
            base = word[: len(word) - len(suffix)] + repl
            if base in _VERBS:
                return base
            if suffix in ("ed", "ing") and len(base) > 2 and base[-1] == base[-2] and base[:-1] in _VERBS:
                return base[:-1]  # doubled consonant: submitted, permitted
    return None


def _prev_content(tags: list[str], i: int) -> str | None:
    """Tag of the nearest preceding token that is not an adverb."""
    j = i - 1
    while j >= 0 and tags[j] in ("RB",):
        j -= 1
    return tags[j] if j >= 0 else None


def _last_verb_tag(tags: list[str], i: int) -> str | None:
    for j in range(i - 1, -1, -1):
        if tags[j] in VERB_TAGS or tags[j] in (".", ":"):
            return tags[j] if tags[j] in VERB_TAGS else None
    return None


def pos_tag(sentence: Sentence) -> list[str]:
    """Deterministic lexicon, suffix and context tagger over the Penn tag set."""
    words = [t.surface.lower() for t in sentence.tokens]
    n = len(words)
    tags: list[str] = []
    negated = False  # a negation earlier in the clause makes "nor" correlative
    for i, w in enumerate(words):
        nxt = words[i + 1] if i + 1 < n else ""
        prev = tags[i - 1] if i else None
        pc = _prev_content(tags, i)
        if w in _PUNCT:
            t = _PUNCT[w]
        elif w == "/" or w == "&":
            t = "CC" if prev == "CC" or nxt in _CC else "SYM"
        elif not w[:1].isalnum():
            t = "SYM"
        elif w.isdigit() or (len(w) <= 4 and all(c in "ivxl" for c in w) and prev == "-LRB-"):
            t = "CD"
        elif w == "'s":
            t = "POS"
        elif w == "to":
            t = "TO"
        elif w == "nor":
            # "neither ... nor" and "not ... nor" negate once; a bare "nor" negates on its own
            t = "CC" if negated else "RB"
        elif w in _NEGATION or w == "n't":
            t = "RB"
            negated = True
        elif w in _MD and not (w == "will" and prev in ("DT", "PRP$")):
            t = "MD"
        elif w == "that":
            t = "IN" if prev in ("NN", "NNS", "JJ", ",", "IN") or (prev or "").startswith("VB") else "DT"
        elif w in _PDT_BEFORE_DT and nxt in ("the", "a", "an", "this", "these", "those", "such"):
            t = "PDT"
        elif w in _DT:
            t = "DT"
        elif w in _PRPS:
            t = "PRP$"
        elif w in _PRP:
            t = "PRP"
        elif w in _WDT:
            t = "WDT"
        elif w in _WP:
            t = "WP"
        elif w in _WRB:
            t = "WRB"
        elif w in _CC:
            t = "CC"
        elif w == "provided" and nxt in ("that", ",", "however"):
            t = "IN"
        elif w in ("above", "below", "following") and prev == "DT":
            t = "JJ"
        elif w in _IN:
            t = "IN"
        elif w in _AUX:
            t = _AUX[w]
            if w in ("have", "do", "be") and pc in ("PRP", "NNS") and prev not in ("MD", "TO"):
                t = "VBP"
            if w == "had" and pc in ("PRP", "NN", "NNS") and nxt not in _VERBS:
                t = "VBD"
        elif w == "void":
            t = "VBN"
        elif w in _RB:
            t = "RB"
        elif w in _JJ:
            t = "JJ"
        else:
            t = _open_class(w, words, tags, i)
        if t in (".", ":"):
            negated = False
        tags.append(t)
    return tags


def _open_class(w: str, words: list[str], tags: list[str], i: int) -> str:
    prev = tags[i - 1] if i else None
    pc = _prev_content(tags, i)
    nxt = words[i + 1] if i + 1 < len(words) else ""
    base = _verb_base(w)
    if w in _NOUN_ONLY:
        return "NN"
    if w in _VERBS:
        if prev in ("MD", "TO") or pc in ("MD", "TO") or (prev == "RB" and i >= 2 and tags[i - 2] in ("MD", "VB", "VBP", "VBZ", "VBD", "TO")):
            return "VB"
        if prev is None or prev in ("-LRB-", "``", "''", ":") or (prev == "RB" and pc is None):
            return "VB"  # imperative
        if pc in ("PRP", "WDT", "WP"):
            return "VBP"
        if prev in ("CC", ",") and _last_verb_tag(tags, i) in ("VB", "VBP"):
            j = i - 1
            while j >= 0 and tags[j] in ("CC", ",", "SYM"):
                j -= 1
            if j >= 0 and (tags[j] in VERB_TAGS or tags[j] in ("NN", "NNS", "PRP", "RB", "JJ")):
                return "VB"
        if prev == "RB":
            return "VB"
        if pc in _NOMINAL_CONTEXT or pc in ("NN", "NNS"):
            return "NN"
        return "NN"
    if w.endswith("ing") and len(w) > 4:
        return "VBG"
    if w.endswith("ed") and len(w) > 3 or w in _IRREGULAR_PARTICIPLES:
        j = i - 1
        while j >= 0 and tags[j] == "RB":
            j -= 1
        before = words[j] if j >= 0 else ""
        if before in _AUX_STEMS or before in ("been", "get", "gets", "got"):
            return "VBN"
        if pc in ("DT", "JJ", "PRP$", "PDT", "POS") and nxt and _looks_nominal(nxt):
            return "JJ"
        if pc in ("PRP", "WDT", "WP") and base is not None:
            return "VBD"
        return "VBN"
    if w.endswith("ly") and len(w) > 4 and base is None:
        return "RB"
    if w.endswith("s") and not w.endswith("ss") and len(w) > 3:
        if base is not None and pc in ("PRP", "WDT", "WP") and prev not in _NOMINAL_CONTEXT:
            return "VBZ"
        if base is not None and i and words[i - 1] in _NEGATIVE_PRONOUNS:
            return "VBZ"
        if base is not None and prev in ("NN", "NNS") and nxt in ("the", "a", "an", "any", "all", "you", "that", "to"):
            return "VBZ"
        return "NNS"
    if w.endswith(_JJ_SUFFIXES) and len(w) > 5:
        return "JJ"
    return "NN"


def _looks_nominal(word: str) -> bool:
    if word in _DT or word in _IN or word in _CC or word in _MD or not word[:1].isalnum():
        return False
    if word in _VERBS or word in _AUX or word in _RB or word == "to":
        return False
    return True


# --------------------------------------------------------------------- parsing


@dataclass
class ParseNode:
    tag: str
    children: list[ParseNode] = field(default_factory=list)
    token_index: int | None = None
    word: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.token_index is not None

    def leaves(self) -> list[ParseNode]:
        if self.is_leaf:
            return [self]
        out: list[ParseNode] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    @property
    def span(self) -> tuple[int, int]:
        lv = self.leaves()
        return (lv[0].token_index, lv[-1].token_index + 1) if lv else (0, 0)

    def pretty(self) -> str:
        if self.is_leaf:
            return f"({self.tag} {self.word})"
        return f"({self.tag} " + " ".join(c.pretty() for c in self.children) + ")"

    def path_to(self, index: int) -> list[ParseNode]:
        """Nodes from this one down to the leaf with ``token_index == index``."""
        if self.is_leaf:
            return [self] if self.token_index == index else []
        for c in self.children:
            s, e = c.span
            if s <= index < e:
                sub = c.path_to(index)
                if sub:
                    return [self] + sub
        return []


_COND_OPENERS = {("if",), ("unless",), ("provided",), ("provided", "that"), ("providing",),
                 ("as", "long", "as"), ("so", "long", "as"), ("when",), ("whenever",), ("in", "case")}
_SUB_OPENERS = _COND_OPENERS | {("that",), ("which",), ("who",), ("whom",), ("whether",), ("where",),
                                ("because",), ("although",), ("though",), ("while",), ("so", "that"),
                                ("whereas",), ("until",), ("except", "that"), ("except", "if")}
_WH_TAGS = {"WDT", "WP"}


class _Chunker:
    def __init__(self, words: list[str], tags: list[str]):
        self.w = words
        self.t = tags

    def leaf(self, i: int) -> ParseNode:
        return ParseNode(self.t[i], token_index=i, word=self.w[i])

    # subordinator opener at i, returns its length or 0
    def opener(self, i: int, end: int) -> int:
        for k in (3, 2, 1):
            if i + k > end:
                continue
            cand = tuple(self.w[i : i + k])
            if cand not in _SUB_OPENERS:
                continue
            if cand == ("that",) and self.t[i] != "IN":
                return 0
            if cand in (("which",), ("who",), ("whom",)) and self.t[i] not in _WH_TAGS:
                return 0
            if cand == ("provided",) and self.t[i] != "IN":
                return 0
            if cand in (("as", "long", "as"), ("so", "long", "as")) or k > 1 or self.t[i] in ("IN", "WRB") or self.t[i] in _WH_TAGS:
                return k
        return 0

    def is_verbal_start(self, i: int, end: int) -> bool:
        j = i
        while j < end and self.t[j] == "RB":
            j += 1
        return j < end and (self.t[j] in VERB_TAGS or self.t[j] == "MD")

    def clause(self, start: int, end: int) -> ParseNode:
        """S over [start, end), splitting coordinated clauses first."""
        parts = self.split_coordination(start, end)
        if len(parts) == 1:
            return ParseNode("S", self.chunks(start, end))
        kids: list[ParseNode] = []
        pos = start
        for s, e in parts:
            kids.extend(self.leaf(k) for k in range(pos, s))
            kids.append(ParseNode("S", self.chunks(s, e)))
            pos = e
        kids.extend(self.leaf(k) for k in range(pos, end))
        return ParseNode("S", kids)

    def split_coordination(self, start: int, end: int) -> list[tuple[int, int]]:
        cuts: list[tuple[int, int]] = []  # (separator start, next clause start)
        depth = 0
        i = start
        while i < end:
            t = self.t[i]
            if t == "-LRB-":
                depth += 1
            elif t == "-RRB-":
                depth = max(0, depth - 1)
            elif depth == 0 and t in (",", ":", "CC") and self.w[i] not in ("-",):
                j = i + 1
                while j < end and self.t[j] in (",", "CC"):
                    j += 1
                if t == ":" and self.w[i] == ";" and j < end:
                    cuts.append((i, j))
                else:
                    k = j
                    while k < end and self.t[k] in NP_TAGS:
                        k += 1
                    left_has_verb = any(self.t[m] in VERB_TAGS for m in range(start, i))
                    if (k > j and self.is_verbal_start(k, end) and left_has_verb
                            and any(self.t[m] in ("PRP", "NN", "NNS") for m in range(j, k))):
                        cuts.append((i, j))
                i = j
                continue
            i += 1
        if not cuts:
            return [(start, end)]
        segments: list[tuple[int, int]] = []
        pos = start
        for sep, nxt in cuts:
            segments.append((pos, sep))
            pos = nxt
        segments.append((pos, end))
        # a fronted subordinate clause belongs with the clause that follows it
        merged: list[tuple[int, int]] = []
        carry: int | None = None
        for s, e in segments:
            if carry is not None:
                s = carry
                carry = None
            if self.opener(s, e) and (s, e) != segments[-1]:
                carry = s
                continue
            merged.append((s, e))
        if carry is not None:
            merged.append((carry, end))
        merged = [(s, e) for s, e in merged if e > s]
        return merged if len(merged) > 1 else [(start, end)]

    def chunks(self, start: int, end: int) -> list[ParseNode]:
        out: list[ParseNode] = []
        i = start
        seen_vp = False
        while i < end:
            k = self.opener(i, end)
            if k and not (self.w[i] == "that" and not out):
                stop = end
                if not seen_vp:
                    for j in range(i + k, end):
                        if self.t[j] == ",":
                            stop = j
                            break
                out.append(self.sbar(i, k, stop))
                i = stop
                continue
            if self.t[i] == "-LRB-":
                node, i = self.prn(i, end)
                out.append(node)
                continue
            if self.t[i] in NP_TAGS:
                node, i = self.np(i, end)
                out.append(node)
                continue
            if self.t[i] == "IN":
                node, i = self.pp(i, end)
                out.append(node)
                continue
            if self.is_verbal_start(i, end) or self.t[i] in VERB_TAGS or self.t[i] == "MD":
                node, i = self.vp(i, end)
                out.append(node)
                seen_vp = True
                continue
            if self.t[i] == "TO" and i + 1 < end and self.is_verbal_start(i + 1, end):
                to = self.leaf(i)
                node, i = self.vp(i + 1, end)
                out.append(ParseNode("VP", [to, node]))
                seen_vp = True
                continue
            out.append(self.leaf(i))
            i += 1
        return out

    def prn(self, i: int, end: int) -> tuple[ParseNode, int]:
        """Bracketed aside; an unclosed bracket runs to the end of the span."""
        depth = 0
        for j in range(i, end):
            if self.t[j] == "-LRB-":
                depth += 1
            elif self.t[j] == "-RRB-":
                depth -= 1
                if depth == 0:
                    return ParseNode("PRN", [self.leaf(i), *self.chunks(i + 1, j), self.leaf(j)]), j + 1
        tail = end - 1 if end - 1 > i and self.t[end - 1] in (".", ":") else end
        return ParseNode("PRN", [self.leaf(i), *self.chunks(i + 1, tail)]), tail

    def sbar(self, i: int, k: int, stop: int) -> ParseNode:
        head = [self.leaf(j) for j in range(i, i + k)]
        if self.t[i] in _WH_TAGS:
            head = [ParseNode("WHNP", head)]
        body = self.clause(i + k, stop) if stop > i + k else None
        return ParseNode("SBAR", head + ([body] if body else []))

    def np(self, i: int, end: int) -> tuple[ParseNode, int]:
        j = i
        kids = []
        if self.w[i] == "no" and i + 1 < end and self.t[i + 1] in NP_TAGS:
            kids.append(self.leaf(i))
            j += 1
        while j < end:
            if self.t[j] in NP_TAGS:
                kids.append(self.leaf(j))
                j += 1
            elif (self.t[j] in ("CC", "SYM") and kids and j + 1 < end and self.t[j + 1] in NP_TAGS
                  and self.t[j + 1] != "PRP" and not self.is_verbal_start(j + 1, end)):
                kids.append(self.leaf(j))
                j += 1
            else:
                break
        return ParseNode("NP", kids), j

    def pp(self, i: int, end: int) -> tuple[ParseNode, int]:
        """Preposition (or "to") plus its object."""
        kids = [self.leaf(i)]
        j = i + 1
        # "with or without modification": coordinated prepositions
        while j + 1 < end and self.t[j] == "CC" and self.t[j + 1] == "IN":
            kids += [self.leaf(j), self.leaf(j + 1)]
            j += 2
        if j < end and (self.t[j] in NP_TAGS or self.w[j] == "no"):
            node, j = self.np(j, end)
            kids.append(node)
        elif j < end and self.t[j] == "VBG":
            node, j = self.vp(j, end)
            kids.append(node)
        return ParseNode("PP", kids), j

    def vp(self, i: int, end: int) -> tuple[ParseNode, int]:
        """VP with a modal/adverb/auxiliary shell around an inner VP."""
        t, w = self.t[i], self.w[i]
        is_aux = w in _AUX_STEMS and t in VERB_TAGS and i + 1 < end and self.is_verbal_start(i + 1, end)
        if t == "MD" or t == "RB" or is_aux:
            kids = [self.leaf(i)]
            j = i + 1
            while j < end and self.t[j] == "RB":
                kids.append(self.leaf(j))
                j += 1
            # inverted subject: "shall the authors be liable"
            if t == "MD" and j < end and self.t[j] in NP_TAGS:
                k = j
                while k < end and self.t[k] in NP_TAGS | {"CC"}:
                    k += 1
                if k > j and self.is_verbal_start(k, end):
                    np, j = self.np(j, k)
                    kids.append(np)
                    while j < k:
                        kids.append(self.leaf(j))
                        j += 1
            if j < end and (self.t[j] in VERB_TAGS or self.t[j] == "MD" or self.is_verbal_start(j, end)):
                inner, j = self.vp(j, end)
                kids.append(inner)
            return ParseNode("VP", kids), j
        kids = [self.leaf(i)]
        j = i + 1
        # coordinated heads: "use, copy, modify and/or sell"
        while j < end:
            k = j
            while k < end and (self.t[k] in ("CC", ",") or (self.t[k] == "SYM" and self.w[k] == "/")):
                k += 1
            if k > j and k < end and self.t[k] in VERB_TAGS and self.t[k] != "VBN" and all(
                self.t[m] in ("CC", ",", "SYM") for m in range(j, k)
            ):
                kids.extend(self.leaf(m) for m in range(j, k + 1))
                j = k + 1
            elif j < end and self.t[j] in VERB_TAGS and self.t[j - 1] in VERB_TAGS:
                kids.append(self.leaf(j))
                j += 1
            else:
                break
        # complements
        while j < end:
            tj = self.t[j]
            k = self.opener(j, end)
            if k:
                kids.append(self.sbar(j, k, end))
                j = end
                break
            if tj in NP_TAGS:
                node, j = self.np(j, end)
                kids.append(node)
            elif tj == "IN":
                node, j = self.pp(j, end)
                kids.append(node)
            elif tj == "TO" and j + 1 < end and self.is_verbal_start(j + 1, end):
                to = self.leaf(j)
                node, j = self.vp(j + 1, end)
                kids.append(ParseNode("VP", [to, node]))
            elif tj == "TO" and j + 1 < end and self.t[j + 1] in NP_TAGS:
                node, j = self.pp(j, end)
                kids.append(node)
            elif tj == "RB" and not (j + 1 < end and self.is_verbal_start(j + 1, end) and self.t[j + 1] == "MD"):
                kids.append(self.leaf(j))
                j += 1
            elif tj in ("VBZ", "VBD", "VBP") and any(c.tag == "NP" for c in kids):
                break  # a finite verb after an object starts the main predicate
            elif tj in VERB_TAGS:
                node, j = self.vp(j, end)
                kids.append(node)
            elif tj == "CC" and j + 1 < end and self.is_verbal_start(j + 1, end):
                kids.append(self.leaf(j))
                node, j = self.vp(j + 1, end)
                kids.append(node)
            elif tj == "CC" and j + 2 < end and self.t[j + 1] == "TO" and self.is_verbal_start(j + 2, end):
                kids.append(self.leaf(j))
                to = self.leaf(j + 1)
                node, j = self.vp(j + 2, end)
                kids.append(ParseNode("VP", [to, node]))
            else:
                break
        return ParseNode("VP", kids), j


def parse_sentence(sentence: Sentence, pos_tags: Sequence[str]) -> ParseNode:
    """Chunk-grammar parse: ROOT over one S with NP/VP/PP/SBAR chunks."""
    n = len(sentence.tokens)
    if len(pos_tags) != n:
        raise TagAlphabetViolation(f"{len(pos_tags)} tags for {n} tokens")
    bad = [t for t in pos_tags if t not in WORD_TAGS]
    if bad:
        raise TagAlphabetViolation(f"tags outside the alphabet: {sorted(set(bad))}")
    words = [t.surface.lower() for t in sentence.tokens]
    ch = _Chunker(words, list(pos_tags))
    if n == 0:
        return ParseNode("ROOT", [ParseNode("S")])
    root = ParseNode("ROOT", [ch.clause(0, n)])
    return root


# ------------------------------------------------------------- powerful tokens


class Locality(str, enum.Enum):
    INTERNAL = "Internal"
    EXTERNAL = "External"


@dataclass(frozen=True)
class PowerfulToken:
    token_index: int
    pos: str
    locality: Locality

    def __post_init__(self):
        if self.pos not in PT_TAGS:
            raise ValueError(f"{self.pos} is not a powerful-token tag")


def _direct_pt_leaves(node: ParseNode, skip: ParseNode | None, tags: set[str] = PT_TAGS) -> list[int]:
    return [c.token_index for c in node.children if c is not skip and c.is_leaf and c.tag in tags]


def _vp_spine(node: ParseNode) -> list[int]:
    out = _direct_pt_leaves(node, None)
    for c in node.children:
        if c.tag == "VP":
            out.extend(_vp_spine(c))
    return out


def _collect_from(node: ParseNode, skip: ParseNode | None) -> list[int]:
    if node.tag == "VP":
        return _direct_pt_leaves(node, skip)
    if node.tag == "SBAR":
        out = _direct_pt_leaves(node, skip)
        for c in node.children:
            if c.tag == "WHNP" and c is not skip:
                out.extend(_direct_pt_leaves(c, None))
        return out
    if node.tag == "S":
        out = _direct_pt_leaves(node, skip, {"RB", "RBR", "RBS", "MD"})
        for c in node.children:
            if c is skip:
                continue
            if c.tag == "VP":
                out.extend(_vp_spine(c))
            elif c.tag == "PP":
                # "in no event": a negated adverbial phrase scopes over its clause
                out.extend(leaf.token_index for leaf in c.leaves() if leaf.tag == "RB")
        return out
    return []


def collect_pts(tree: ParseNode, entity: TermEntity, tags: Sequence[str]) -> list[PowerfulToken]:
    """Internal PTs inside the entity plus external PTs from its dominating chunks."""
    n = len(tags)
    if not (0 <= entity.start < entity.end <= n):
        raise SpanOutOfRange(f"entity [{entity.start}, {entity.end}) outside sentence of {n} tokens")
    internal = [PowerfulToken(i, tags[i], Locality.INTERNAL) for i in range(entity.start, entity.end) if tags[i] in PT_TAGS]

    path = [tree]
    while True:
        nxt = None
        for c in path[-1].children:
            s, e = c.span
            if not c.is_leaf and s <= entity.start and entity.end <= e:
                nxt = c
                break
        if nxt is None:
            break
        path.append(nxt)
    external: set[int] = set()
    node = path[-1]
    if node.span == (entity.start, entity.end) and len(path) > 1:
        start_level = len(path) - 2
        skip: ParseNode | None = node
    else:
        # the entity cuts across this node's children: take what lies outside it
        start_level = len(path) - 1
        skip = None
        for i in _collect_from_excluding(node, entity):
            external.add(i)
        skip = node
        start_level -= 1
    for level in range(start_level, -1, -1):
        anc = path[level]
        external.update(_collect_from(anc, skip))
        skip = anc
    ext = [PowerfulToken(i, tags[i], Locality.EXTERNAL) for i in sorted(external)
           if not entity.start <= i < entity.end and tags[i] in PT_TAGS]
    return sorted(internal + ext, key=lambda p: p.token_index)


def _collect_from_excluding(node: ParseNode, entity: TermEntity) -> list[int]:
    overlapping = [c for c in node.children if c.span[0] < entity.end and entity.start < c.span[1]]
    shadow = ParseNode(node.tag, [c for c in node.children if c not in overlapping])
    if not shadow.children:
        return []
    return _collect_from(shadow, None)


# --------------------------------------------------------------------- lexicon

_TABLE_CANNOT = ("not", "without", "notwithstand", "refuse", "disallow", "decline", "against", "delete", "nor",
                 "void", "neither", "prohibit", "remove", "don't", "no", "nothing")
_TABLE_MUST = ("must", "should", "as long as", "so long as", "shall", "provided that", "ensure that",
               "ask that", "have to")


@dataclass(frozen=True)
class Mark:
    attitude: Attitude
    start: int
    end: int
    entry: str


class AttitudeLexicon:
    """CANNOT and MUST expressions, matched on token stems."""

    def __init__(self, cannot_words: Iterable[str], must_words: Iterable[str]):
        self.cannot_words = tuple(cannot_words)
        self.must_words = tuple(must_words)
        overlap = set(self.cannot_words) & set(self.must_words)
        if overlap:
            raise ValueError(f"lexicon entries listed as both CANNOT and MUST: {sorted(overlap)}")
        entries: dict[tuple[str, ...], tuple[Attitude, str]] = {}
        for att, words in ((Attitude.CANNOT, self.cannot_words), (Attitude.MUST, self.must_words)):
            for w in words:
                key = tuple(t.stem for t in normalize_tokens(w))
                if not key:
                    continue
                if key in entries and entries[key][0] != att:
                    raise ValueError(f"lexicon entry {w!r} collides with {entries[key][1]!r} after stemming")
                entries[key] = (att, w)
        # longer entries first so multiword phrases win over their parts
        self._entries = sorted(entries.items(), key=lambda kv: (-len(kv[0]), kv[0]))

    @classmethod
    def default(cls) -> AttitudeLexicon:
        return cls.load(resources.files("licscan.data").joinpath("lexicon.json"))

    @classmethod
    def load(cls, path) -> AttitudeLexicon:
        doc = json.loads(Path(str(path)).read_text("utf-8") if not hasattr(path, "read_text") else path.read_text("utf-8"))
        unknown = set(doc) - {"cannot", "must"}
        if unknown:
            raise ValueError(f"unknown lexicon keys {sorted(unknown)}")
        return cls(doc.get("cannot", []), doc.get("must", []))

    def to_json(self) -> str:
        return json.dumps({"cannot": list(self.cannot_words), "must": list(self.must_words)}, indent=2) + "\n"

    def marks(self, stems: Sequence[str], pts: Sequence[PowerfulToken]) -> list[Mark]:
        """Lexicon occurrences that touch a powerful token, one mark per occurrence.

        A single-word CANNOT entry on a preposition ("without restriction",
        "against") negates only its object, so it is not counted.
        """
        by_index = {p.token_index: p for p in pts}
        used = [False] * len(stems)
        out: list[Mark] = []
        for key, (att, entry) in self._entries:
            k = len(key)
            for i in range(len(stems) - k + 1):
                if any(used[i : i + k]) or tuple(stems[i : i + k]) != key:
                    continue
                hit = [by_index[j] for j in range(i, i + k) if j in by_index]
                if not hit:
                    continue
                if k == 1 and att is Attitude.CANNOT and hit[0].pos == "IN":
                    continue
                for j in range(i, i + k):
                    used[j] = True
                out.append(Mark(att, i, i + k, entry))
        return sorted(out, key=lambda m: m.start)


def write_default_lexicon(path: str | os.PathLike) -> None:
    Path(path).write_text(AttitudeLexicon(_TABLE_CANNOT, _TABLE_MUST).to_json(), "utf-8")


def infer_attitude(pts: Sequence[PowerfulToken], tokens: Sequence[Token], lexicon: AttitudeLexicon) -> Attitude:
    """Odd number of CANNOT marks gives CANNOT; otherwise MUST if any MUST mark, else CAN."""
    return _aggregate(lexicon.marks([t.stem for t in tokens], pts))


def _aggregate(marks: Sequence[Mark]) -> Attitude:
    cannot = sum(1 for m in marks if m.attitude is Attitude.CANNOT)
    if cannot % 2:
        return Attitude.CANNOT
    if any(m.attitude is Attitude.MUST for m in marks):
        return Attitude.MUST
    return Attitude.CAN


# ------------------------------------------------------------------ conditions


@dataclass(frozen=True)
class Condition:
    antecedent: TermEntity
    consequent: TermEntity

    def __post_init__(self):
        if self.antecedent == self.consequent:
            raise ValueError("a term entity cannot condition itself")
        if self.antecedent.sentence_index != self.consequent.sentence_index:
            raise ValueError("condition entities must share a sentence")


def _opener_words(node: ParseNode) -> tuple[str, ...]:
    words = []
    for c in node.children:
        if c.tag == "S":
            break
        words.extend(leaf.word or "" for leaf in c.leaves())
    return tuple(words)


def detect_conditions(tree: ParseNode, entities: Sequence[TermEntity]) -> list[Condition]:
    """Entities inside a conditional clause condition the entities of the clause around it."""
    out: list[Condition] = []

    def visit(node: ParseNode, clause: ParseNode | None) -> None:
        if node.is_leaf:
            return
        if node.tag == "SBAR" and clause is not None and _opener_words(node) in _COND_OPENERS:
            s, e = node.span
            cs, ce = clause.span
            inside = [x for x in entities if s <= x.start and x.end <= e]
            outside = [x for x in entities if cs <= x.start and x.end <= ce and (x.end <= s or x.start >= e)]
            for a in inside:
                for c in outside:
                    if a != c:
                        out.append(Condition(a, c))
        for c in node.children:
            visit(c, node if node.tag == "S" else clause)

    visit(tree, None)
    seen = set()
    uniq = []
    for c in out:
        if c not in seen:
            seen.add(c)
            uniq.append(c)
    return uniq


# ------------------------------------------------------------------- summaries

_PRIORITY = {Attitude.CANNOT: 3, Attitude.MUST: 2, Attitude.CAN: 1, Attitude.UNKNOWN: 0}


@dataclass(frozen=True)
class Evidence:
    sentence_index: int
    start: int
    end: int
    attitude: Attitude
    text: str
    pts: tuple[PowerfulToken, ...]
    marks: tuple[Mark, ...] = ()
    sentence: str = ""
    pt_words: tuple[str, ...] = ()
    source: str = "text"  # "text", or "official:<spdx id>" for a matched official license


@dataclass
class SentenceAnalysis:
    sentence: Sentence
    tags: list[str]
    tree: ParseNode
    entities: list[TermEntity]
    evidence: list[Evidence]
    conditions: list[Condition]


@dataclass
class LicenseSummary:
    license: LicenseInstance | None
    attitudes: tuple[Attitude, ...] = (Attitude.UNKNOWN,) * NUM_TERMS
    conditions: list[Condition] = field(default_factory=list)
    evidence: dict[int, list[Evidence]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.attitudes) != NUM_TERMS:
            raise ValueError(f"summary needs {NUM_TERMS} attitudes, got {len(self.attitudes)}")
        for k, a in enumerate(self.attitudes):
            if a is not Attitude.UNKNOWN and not self.evidence.get(k):
                raise ValueError(f"term {k} has attitude {a.value} but no evidence")

    def __getitem__(self, term_id: int) -> Attitude:
        return self.attitudes[term_id]


def analyze_sentence(sentence: Sentence, model: SequenceModel, lexicon: AttitudeLexicon,
                     warnings: list[str] | None = None) -> SentenceAnalysis:
    labels = tag(model, sentence)
    entities = decode_entities(labels, sentence, warnings)
    tags = pos_tag(sentence)
    tree = parse_sentence(sentence, tags)
    return _analyze_entities(sentence, tags, tree, entities, lexicon)


def analyze_entities(sentence: Sentence, entities: Sequence[TermEntity], lexicon: AttitudeLexicon) -> SentenceAnalysis:
    """Like :func:`analyze_sentence` but with the term entities supplied by the caller."""
    tags = pos_tag(sentence)
    return _analyze_entities(sentence, tags, parse_sentence(sentence, tags), list(entities), lexicon)


def _analyze_entities(sentence, tags, tree, entities, lexicon) -> SentenceAnalysis:
    stems = [t.stem for t in sentence.tokens]
    evidence = []
    for ent in entities:
        pts = collect_pts(tree, ent, tags)
        marks = lexicon.marks(stems, pts)
        text = " ".join(t.surface for t in sentence.tokens[ent.start : ent.end])
        words = tuple(sentence.tokens[p.token_index].surface for p in pts)
        evidence.append(Evidence(
            sentence.index, ent.start, ent.end, _aggregate(marks), text, tuple(pts), tuple(marks),
            " ".join(t.surface for t in sentence.tokens), words,
        ))
    conditions = detect_conditions(tree, entities)
    return SentenceAnalysis(sentence, tags, tree, list(entities), evidence, conditions)


def merge(evidence: Iterable[tuple[int, Evidence]]) -> tuple[tuple[Attitude, ...], dict[int, list[Evidence]]]:
    """Per-term merge with priority CANNOT > MUST > CAN."""
    att = [Attitude.UNKNOWN] * NUM_TERMS
    by_term: dict[int, list[Evidence]] = {}
    for term_id, ev in evidence:
        by_term.setdefault(term_id, []).append(ev)
        if _PRIORITY[ev.attitude] > _PRIORITY[att[term_id]]:
            att[term_id] = ev.attitude
    for evs in by_term.values():
        evs.sort(key=lambda e: (e.sentence_index, e.start, e.end))
    return tuple(att), by_term


def summarize_text(text: str, model: SequenceModel, lexicon: AttitudeLexicon,
                   instance: LicenseInstance | None = None) -> LicenseSummary:
    warnings: list[str] = []
    pairs: list[tuple[int, Evidence]] = []
    conditions: list[Condition] = []
    for sentence in split_sentences(text, warnings):
        try:
            analysis = analyze_sentence(sentence, model, lexicon, warnings)
        except Exception as exc:  # keep going; one bad sentence should not sink a license
            warnings.append(f"sentence {sentence.index}: {type(exc).__name__}: {exc}")
            continue
        for ent, ev in zip(analysis.entities, analysis.evidence):
            pairs.append((ent.term, ev))
        conditions.extend(analysis.conditions)
    attitudes, by_term = merge(pairs)
    return LicenseSummary(instance, attitudes, conditions, by_term, warnings)


def summarize(instance: LicenseInstance, model: SequenceModel, lexicon: AttitudeLexicon) -> LicenseSummary:
    """Attitude summary of a license instance's own text."""
    return summarize_text(instance.text, model, lexicon, instance)
