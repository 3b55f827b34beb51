/**
 * Deterministic stand-in models behind the service contracts.
 *
 * No checkpoint downloads happen here: sentiment is a lexicon scorer with a
 * softmax head, embeddings are hashed-unigram vectors on the unit sphere,
 * and segmentation is the punctuation/case heuristic extended with a
 * connector-word rule. A real model drops in behind the same functions; the
 * wire format and invariants (probabilities sum to 1, unit-norm vectors,
 * one merge decision per boundary) are what callers rely on.
 */

export const EMBEDDING_DIM = 256;

export const MODEL_INFO = {
  service: "sdglens-model-service",
  version: "0.1.0",
  sentiment_model: "lexicon-softmax-v1",
  embedding_model: `hashed-unigram-${EMBEDDING_DIM}`,
  segmenter_model: "heuristic-connector-v1",
  embedding_dim: EMBEDDING_DIM,
  class_order: [
    { class: 0, label: "negative" },
    { class: 1, label: "neutral" },
    { class: 2, label: "positive" },
  ],
};

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

const POSITIVE = [
  "improve",
  "improves",
  "improvement",
  "invest",
  "investment",
  "commit",
  "commitment",
  "expand",
  "strengthen",
  "benefit",
  "benefits",
  "opportunity",
  "opportunities",
  "renewable",
  "resilient",
  "resilience",
  "progress",
  "achieve",
];

const NEGATIVE = [
  "risk",
  "risks",
  "threat",
  "threats",
  "threatens",
  "loss",
  "losses",
  "damage",
  "damages",
  "harm",
  "decline",
  "vulnerable",
  "vulnerability",
  "severe",
  "crisis",
];

function softmax(logits: number[]): number[] {
  const max = Math.max(...logits);
  const exps = logits.map((x) => Math.exp(x - max));
  const sum = exps.reduce((a, b) => a + b, 0);
  return exps.map((x) => x / sum);
}

export interface SentimentDistribution {
  p0: number;
  p1: number;
  p2: number;
}

export function classifySentiment(text: string): SentimentDistribution {
  const tokens = new Set(tokenize(text));
  let positive = 0;
  let negative = 0;
  for (const word of POSITIVE) if (tokens.has(word)) positive += 1;
  for (const word of NEGATIVE) if (tokens.has(word)) negative += 1;
  // neutral prior keeps lexicon misses from collapsing to a coin flip
  const [p0, p1, p2] = softmax([negative, 0.75, positive]);
  return { p0, p1, p2 };
}

/** FNV-1a, 32-bit; stable across platforms. */
function fnv1a(value: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < value.length; i++) {
    hash ^= value.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function embed(text: string): number[] {
  const vector = new Array<number>(EMBEDDING_DIM).fill(0);
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    vector[0] = 1;
    return vector;
  }
  for (const token of tokens) {
    vector[fnv1a(token) % EMBEDDING_DIM] += 1;
  }
  const norm = Math.sqrt(vector.reduce((acc, x) => acc + x * x, 0));
  return vector.map((x) => x / norm);
}

const TERMINAL = [".", "!", "?", ":", ";"];
const CONNECTORS = new Set([
  "and",
  "or",
  "but",
  "of",
  "the",
  "a",
  "an",
  "to",
  "with",
  "for",
  "in",
  "on",
  "by",
  "at",
  "from",
]);

function endsTerminal(text: string): boolean {
  const trimmed = text.trimEnd();
  return trimmed.length > 0 && TERMINAL.includes(trimmed[trimmed.length - 1]);
}

function lastWord(text: string): string {
  const tokens = tokenize(text);
  return tokens.length ? tokens[tokens.length - 1] : "";
}

/** One decision per adjacent block pair: should they be joined? */
export function segmentMerge(blocks: string[]): boolean[] {
  const decisions: boolean[] = [];
  for (let i = 0; i + 1 < blocks.length; i++) {
    const left = blocks[i].trimEnd();
    const right = blocks[i + 1].trimStart();
    if (!left || !right || endsTerminal(left)) {
      decisions.push(false);
      continue;
    }
    const first = right[0];
    const lowerOrDigit = first !== first.toUpperCase() || /\d/.test(first);
    // a dangling connector ("...reductions of") continues the sentence even
    // when the extractor capitalized the next line
    decisions.push(lowerOrDigit || CONNECTORS.has(lastWord(left)));
  }
  return decisions;
}
